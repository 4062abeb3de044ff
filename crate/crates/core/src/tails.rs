//! Weighted tail sums and measures of the exceedance events
//! `A = {x : a_1(x)^{t_0} ... a_m(x)^{t_{m-1}} >= g}`.
//!
//! Every routine returns a two-sided [`Bracket`]. Digits up to the cutoff are
//! enumerated one by one. Past the cutoff they are grouped into blocks with
//! fixed geometric boundaries and bounded through the monotonicity of the
//! residual event, so a larger cutoff refines the partition and tightens the
//! bounds. The innermost coordinate is always closed exactly.

use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::cf::FloatConvergent;
use crate::error::{Error, Result};
use crate::weights::{parse_decimal, Exponent, Weights};

/// Largest number of coordinates handled by the enumerators.
pub const MAX_COORDINATES: usize = 8;

/// Default per-coordinate cutoff.
pub const DEFAULT_CUTOFF: u64 = 10_000;

/// Two-sided enclosure `lo <= value <= hi`.
///
/// When `exact` is set the value is known as a rational and `lo`, `hi` are
/// its nearest double.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub exact: Option<BigRational>,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted bracket [{lo}, {hi}]");
        Self { lo, hi, exact: None }
    }

    pub fn exact(v: BigRational) -> Self {
        let x = v.to_f64().unwrap_or(f64::NAN);
        Self { lo: x, hi: x, exact: Some(v) }
    }

    pub fn width(&self) -> f64 {
        if self.exact.is_some() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Membership test that is exact for exact brackets.
    pub fn contains_rational(&self, x: &BigRational) -> bool {
        match &self.exact {
            Some(v) => v == x,
            None => x.to_f64().is_some_and(|v| self.contains(v)),
        }
    }
}

/// The threshold `g >= 1`, held in log form and, when known, exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Threshold {
    ln: f64,
    exact: Option<BigRational>,
}

impl Threshold {
    pub fn from_rational(g: BigRational) -> Result<Self> {
        if g < BigRational::one() {
            return Err(Error::Domain(format!("threshold {g} is below 1")));
        }
        Ok(Self { ln: ln_rational(&g), exact: Some(g) })
    }

    pub fn from_f64(g: f64) -> Result<Self> {
        let r = BigRational::from_float(g).ok_or_else(|| Error::Domain(format!("threshold {g} is not finite")))?;
        Self::from_rational(r)
    }

    /// A threshold known only through `ln g`.
    pub fn from_ln(ln: f64) -> Result<Self> {
        if ln.is_nan() || ln < 0.0 {
            return Err(Error::Domain(format!("threshold logarithm {ln} is negative")));
        }
        Ok(Self { ln, exact: None })
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    fn is_trivial(&self) -> bool {
        match &self.exact {
            Some(g) => g.is_one(),
            None => self.ln == 0.0,
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_rational(parse_decimal(s)?)
    }
}

/// Natural logarithm of a big integer, valid far beyond the f64 range.
pub(crate) fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn ln_rational(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// Smallest integer `a >= 1` with `a^t >= g`.
fn ceil_root(g: &BigRational, t: &Exponent) -> Result<BigInt> {
    let small = |x: &BigInt| x.to_u32().filter(|&v| v <= 100_000);
    let (Some(p), Some(q)) = (small(t.exact().numer()), small(t.exact().denom())) else {
        return Err(Error::Domain(format!("exponent {t} is too finely specified for exact roots")));
    };
    let gn = num_traits::pow(g.numer().clone(), q as usize);
    let gd = num_traits::pow(g.denom().clone(), q as usize);
    let reaches = |a: &BigInt| num_traits::pow(a.clone(), p as usize) * &gd >= gn;
    let estimate = (ln_rational(g) / t.value()).exp();
    let one = BigInt::one();
    let mut hi = BigRational::from_float(estimate.ceil().max(1.0))
        .map_or_else(|| one.clone(), |r| r.to_integer());
    if hi < one {
        hi = one.clone();
    }
    let mut step = one.clone();
    while !reaches(&hi) {
        hi += &step;
        step *= 2;
    }
    // lo does not reach, or is zero
    let mut lo = &hi - &one;
    step = one.clone();
    while lo >= one && reaches(&lo) {
        lo -= &step;
        step *= 2;
    }
    if lo < BigInt::zero() {
        lo = BigInt::zero();
    }
    while &hi - &lo > one {
        let mid: BigInt = (&lo + &hi) >> 1;
        if reaches(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `sum over a with a^t >= g of 1/(a(a+1))`, which telescopes to `1 / ceil(g^(1/t))`.
pub fn tail_sum_1d(t: &Exponent, g: &BigRational) -> Result<BigRational> {
    if g < &BigRational::one() {
        return Err(Error::Domain(format!("threshold {g} is below 1")));
    }
    Ok(BigRational::new(BigInt::one(), ceil_root(g, t)?))
}

/// `(ln g)^(ell-1) / g^(1/t_max)`.
pub fn asymptotic_envelope(t: &Weights, g: f64) -> Result<f64> {
    if !(g >= std::f64::consts::E) {
        return Err(Error::Domain(format!("envelope needs g >= e, got {g}")));
    }
    let ell = t.ell() as i32;
    Ok(g.ln().powi(ell - 1) * (-g.ln() / t.t_max()).exp())
}

/// Which measure an event is weighed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    Lebesgue,
    Gauss,
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lebesgue" => Ok(Self::Lebesgue),
            "gauss" => Ok(Self::Gauss),
            _ => Err(Error::Config(format!("unknown measure `{s}` (expected lebesgue or gauss)"))),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lebesgue => "lebesgue",
            Self::Gauss => "gauss",
        })
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn merge(&mut self, o: Acc) {
        self.add(o.s);
        self.c += o.c;
    }

    pub fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Digits fixed so far, one per processed coordinate.
#[derive(Clone, Copy, Debug)]
struct Prefix {
    d: [f64; MAX_COORDINATES],
    len: usize,
}

impl Prefix {
    const EMPTY: Self = Self { d: [0.0; MAX_COORDINATES], len: 0 };

    fn with(mut self, a: f64) -> Self {
        self.d[self.len] = a;
        self.len += 1;
        self
    }

    fn digits(&self) -> &[f64] {
        &self.d[..self.len]
    }
}

/// Range `[lo, hi]` for the first digit that makes the product reach `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Reach {
    lo: f64,
    hi: f64,
}

impl Reach {
    fn certain(a: f64) -> Self {
        Self { lo: a, hi: a }
    }

    fn is_certain(&self) -> bool {
        self.lo == self.hi
    }
}

/// Largest digit for which exact integer decisions are attempted.
const EXACT_DIGIT_LIMIT: f64 = 1e8;
/// Relative band within which float comparisons are re-done exactly.
const TIE_BAND: f64 = 1e-9;

struct Ctx {
    /// Exponents in processing order.
    t: Vec<f64>,
    /// `t_i * Q` for the common denominator `Q`, when small enough.
    int_t: Option<Vec<u32>>,
    /// `(numer(g)^Q, denom(g)^Q)` for exact thresholds.
    g_pow: Option<(BigInt, BigInt)>,
    ln_g: f64,
    cutoff: u64,
}

impl Ctx {
    fn new(exps: &[Exponent], g: &Threshold, cutoff: u64) -> Self {
        let q = exps
            .iter()
            .fold(BigInt::one(), |acc, e| num_integer::Integer::lcm(&acc, e.exact().denom()));
        let int_t = q.to_u32().filter(|&q| q <= 10_000).and_then(|qv| {
            exps.iter()
                .map(|e| (e.exact() * BigRational::from_integer(BigInt::from(qv))).to_integer().to_u32())
                .collect::<Option<Vec<_>>>()
                .filter(|v| v.iter().all(|&x| x <= 100_000))
        });
        let g_pow = match (&int_t, g.exact()) {
            (Some(_), Some(gr)) => {
                let qv = q.to_usize().expect("checked above");
                Some((num_traits::pow(gr.numer().clone(), qv), num_traits::pow(gr.denom().clone(), qv)))
            }
            _ => None,
        };
        Self { t: exps.iter().map(Exponent::value).collect(), int_t, g_pow, ln_g: g.ln(), cutoff }
    }

    fn last(&self) -> usize {
        self.t.len() - 1
    }

    /// Exact test of `prod prefix_i^{t_i} * a^{t_level} >= g`.
    fn exact_reaches(&self, prefix: &Prefix, a: f64) -> Option<bool> {
        let int_t = self.int_t.as_ref()?;
        let (gn, gd) = self.g_pow.as_ref()?;
        let mut lhs = gd.clone();
        for (i, &d) in prefix.digits().iter().chain(std::iter::once(&a)).enumerate() {
            if d > 2f64.powi(53) {
                return None;
            }
            lhs *= num_traits::pow(BigInt::from(d as u64), int_t[i] as usize);
        }
        Some(&lhs >= gn)
    }

    /// First digit at coordinate `prefix.len` that reaches `g`, given the
    /// residual `residual = ln g - sum t_i ln prefix_i`.
    fn reach(&self, prefix: &Prefix, residual: f64) -> Reach {
        let level = prefix.len;
        let x = (residual / self.t[level]).exp();
        if x < 1.0 - TIE_BAND {
            return Reach::certain(1.0);
        }
        if x < EXACT_DIGIT_LIMIT {
            let n0 = x.round().max(1.0);
            if (x - n0).abs() <= TIE_BAND * n0 {
                return match self.exact_reaches(prefix, n0) {
                    Some(true) => Reach::certain(n0),
                    Some(false) => Reach::certain(n0 + 1.0),
                    None => Reach { lo: n0, hi: n0 + 1.0 },
                };
            }
            return Reach::certain(x.ceil());
        }
        Reach { lo: (x * (1.0 - TIE_BAND)).floor(), hi: (x * (1.0 + TIE_BAND)).ceil() }
    }
}

fn weight(a: f64) -> f64 {
    1.0 / (a * (a + 1.0))
}

/// Fixed block boundaries `b_{j+1} = b_j + max(1, floor(b_j / 64))`.
fn block_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = vec![1u64];
        let mut b = 1u64;
        while b < 1u64 << 60 {
            b += (b / 64).max(1);
            v.push(b);
        }
        v
    })
}

/// Blocks `[b, b')` covering `[start, end)`; the first and last are clipped.
fn blocks(start: f64, end: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if start >= end {
        return out;
    }
    let table = block_table();
    let mut b = start;
    let mut idx = table.partition_point(|&x| (x as f64) <= start);
    while b < end {
        let next = match table.get(idx) {
            Some(&x) => (x as f64).min(end),
            None => end,
        };
        out.push((b, next));
        b = next;
        idx += 1;
    }
    out
}

/// Sum `f(a)` over `a` in `[start, end]`, in parallel chunks merged in order.
fn sum_range<F>(start: u64, end: u64, f: F) -> (Acc, Acc)
where
    F: Fn(u64) -> (f64, f64) + Sync,
{
    const CHUNK: u64 = 2048;
    let run = |s: u64, e: u64| {
        let (mut lo, mut hi) = (Acc::default(), Acc::default());
        for a in s..=e {
            let (l, h) = f(a);
            lo.add(l);
            hi.add(h);
        }
        (lo, hi)
    };
    if start > end {
        return (Acc::default(), Acc::default());
    }
    let n = end - start + 1;
    if n <= CHUNK {
        return run(start, end);
    }
    let parts: Vec<(Acc, Acc)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|i| {
            let s = start + i * CHUNK;
            run(s, (s + CHUNK - 1).min(end))
        })
        .collect();
    merge_parts(parts)
}

fn sum_blocks<F>(bs: &[(f64, f64)], f: F) -> (Acc, Acc)
where
    F: Fn(f64, f64) -> (f64, f64) + Sync,
{
    let parts: Vec<(Acc, Acc)> = bs
        .par_chunks(64)
        .map(|chunk| {
            let (mut lo, mut hi) = (Acc::default(), Acc::default());
            for &(b, b2) in chunk {
                let (l, h) = f(b, b2);
                lo.add(l);
                hi.add(h);
            }
            (lo, hi)
        })
        .collect();
    merge_parts(parts)
}

fn merge_parts(parts: Vec<(Acc, Acc)>) -> (Acc, Acc) {
    parts.into_iter().fold((Acc::default(), Acc::default()), |(mut lo, mut hi), (l, h)| {
        lo.merge(l);
        hi.merge(h);
        (lo, hi)
    })
}

fn explicit_end(reach_hi: f64, cutoff: u64) -> u64 {
    (reach_hi - 1.0).min(cutoff as f64).max(0.0) as u64
}

/// Bounds on the product-weight sum over coordinates `prefix.len..m`.
fn tail_bounds(ctx: &Ctx, prefix: Prefix, residual: f64) -> (f64, f64) {
    let level = prefix.len;
    let r = ctx.reach(&prefix, residual);
    if level == ctx.last() {
        return (1.0 / r.hi, 1.0 / r.lo);
    }
    if r.hi == 1.0 {
        return (1.0, 1.0);
    }
    let t = ctx.t[level];
    let end = explicit_end(r.hi, ctx.cutoff);
    let (mut lo, mut hi) = sum_range(1, end, |a| {
        let a = a as f64;
        let (il, ih) = tail_bounds(ctx, prefix.with(a), residual - t * a.ln());
        let w = weight(a);
        (w * il, w * ih)
    });
    let (blo, bhi) = sum_blocks(&blocks(end as f64 + 1.0, r.hi), |b, b2| {
        let w = (b2 - b) / (b * b2);
        let (il, _) = tail_bounds(ctx, prefix.with(b), residual - t * b.ln());
        let (_, ih) = tail_bounds(ctx, prefix.with(b2 - 1.0), residual - t * (b2 - 1.0).ln());
        (w * il, w * ih)
    });
    lo.merge(blo);
    hi.merge(bhi);
    lo.add(1.0 / r.hi);
    hi.add(1.0 / r.hi);
    (lo.value(), hi.value())
}

fn check_shape(t: &Weights, cutoff: u64) -> Result<()> {
    if t.len() > MAX_COORDINATES {
        return Err(Error::Domain(format!("at most {MAX_COORDINATES} exponents are supported, got {}", t.len())));
    }
    if cutoff < 2 {
        return Err(Error::Domain(format!("cutoff must be at least 2, got {cutoff}")));
    }
    Ok(())
}

/// Widen float sums by their rounding error.
fn padded(m: usize, lo: f64, hi: f64) -> Bracket {
    let pad = 32.0 * (m as f64 + 1.0) * f64::EPSILON;
    Bracket::new((lo * (1.0 - pad)).max(0.0), (hi * (1.0 + pad)).min(1.0))
}

/// Largest explicit range evaluated in exact rational arithmetic.
const EXACT_TERMS: f64 = 512.0;

/// Bracket of `sum over prod a_i^{t_{i-1}} >= g of prod 1/(a_i(a_i+1))`.
///
/// The sum does not depend on the order of the exponents; coordinates are
/// processed with the largest exponent outermost so that the smallest one,
/// whose tail is heaviest, is closed exactly.
pub fn weighted_tail_sum(t: &Weights, g: &Threshold, cutoff: u64) -> Result<Bracket> {
    check_shape(t, cutoff)?;
    if g.is_trivial() {
        return Ok(Bracket::exact(BigRational::one()));
    }
    let sorted = t.sorted_descending();
    if let (1, Some(gr)) = (t.len(), g.exact()) {
        return Ok(Bracket::exact(tail_sum_1d(&sorted.exponents()[0], gr)?));
    }
    let ctx = Ctx::new(sorted.exponents(), g, cutoff);
    if let Some(v) = exact_pair_sum(&ctx) {
        return Ok(Bracket::exact(v));
    }
    let (lo, hi) = tail_bounds(&ctx, Prefix::EMPTY, g.ln());
    Ok(padded(t.len(), lo, hi))
}

/// Two coordinates with a short outer range, summed exactly.
fn exact_pair_sum(ctx: &Ctx) -> Option<BigRational> {
    ctx.g_pow.as_ref()?;
    if ctx.t.len() != 2 {
        return None;
    }
    let r = ctx.reach(&Prefix::EMPTY, ctx.ln_g);
    if !r.is_certain() || r.hi > EXACT_TERMS {
        return None;
    }
    let mut sum = BigRational::new(BigInt::one(), BigInt::from(r.hi as u64));
    for a in 1..r.hi as u64 {
        let af = a as f64;
        let inner = ctx.reach(&Prefix::EMPTY.with(af), ctx.ln_g - ctx.t[0] * af.ln());
        if !inner.is_certain() {
            return None;
        }
        let den = BigInt::from(a) * BigInt::from(a + 1) * BigInt::from(inner.hi as u64);
        sum += BigRational::new(BigInt::one(), den);
    }
    Some(sum)
}

impl Measure {
    /// Measure of the union of children of `c` with next digit in `[a, b]`.
    fn children(self, c: &FloatConvergent, a: f64, b: f64) -> f64 {
        match self {
            Measure::Lebesgue => c.lebesgue_children(a, b),
            Measure::Gauss => c.gauss_children(a, b),
        }
    }
}

fn event_bounds(ctx: &Ctx, measure: Measure, state: FloatConvergent, prefix: Prefix, residual: f64) -> (f64, f64) {
    let level = prefix.len;
    let r = ctx.reach(&prefix, residual);
    let tail = |a: f64| measure.children(&state, a, f64::INFINITY);
    if level == ctx.last() {
        return (tail(r.hi), tail(r.lo));
    }
    if r.hi == 1.0 {
        let v = tail(1.0);
        return (v, v);
    }
    let t = ctx.t[level];
    let end = explicit_end(r.hi, ctx.cutoff);
    let (mut lo, mut hi) = sum_range(1, end, |a| {
        let af = a as f64;
        event_bounds(ctx, measure, state.push(a), prefix.with(af), residual - t * af.ln())
    });
    let remaining = (ctx.last() - level) as i32;
    let (blo, bhi) = sum_blocks(&blocks(end as f64 + 1.0, r.hi), |b, b2| {
        let mass = measure.children(&state, b, b2 - 1.0);
        let (pl, ph) = (prefix.with(b), prefix.with(b2 - 1.0));
        let (rl, rh) = (residual - t * b.ln(), residual - t * (b2 - 1.0).ln());
        // conditional Lebesgue measure of the residual event in a child cylinder
        let (mut cl, mut ch) = if remaining == 1 {
            let al = ctx.reach(&pl, rl).hi;
            let ar = ctx.reach(&ph, rh).lo;
            (1.0 / al, 2.0 / (ar + 1.0))
        } else {
            let (sl, _) = tail_bounds(ctx, pl, rl);
            let (_, sh) = tail_bounds(ctx, ph, rh);
            (sl * 2f64.powi(-(remaining + 3)), (sh * 2f64.powi(remaining + 1)).min(1.0))
        };
        if measure == Measure::Gauss {
            // the Gauss density varies by at most a factor 2 on [0, 1]
            cl *= 0.5;
            ch = (2.0 * ch).min(1.0);
        }
        (mass * cl, mass * ch)
    });
    lo.merge(blo);
    hi.merge(bhi);
    let v = tail(r.hi);
    lo.add(v);
    hi.add(v);
    (lo.value(), hi.value())
}

/// Bracket of `mu({x : prod a_i(x)^{t_{i-1}} >= g})` summed over cylinders of order `m`.
///
/// Unlike [`weighted_tail_sum`] the coordinates keep their given order, since
/// cylinder measures depend on it.
pub fn measure_of_event(t: &Weights, threshold: &Threshold, measure: Measure, cutoff: u64) -> Result<Bracket> {
    check_shape(t, cutoff)?;
    if threshold.is_trivial() {
        return Ok(Bracket::exact(BigRational::one()));
    }
    let ctx = Ctx::new(t.exponents(), threshold, cutoff);
    if measure == Measure::Lebesgue {
        if let Some(v) = exact_lebesgue_event(&ctx) {
            return Ok(Bracket::exact(v));
        }
    }
    let (lo, hi) = event_bounds(&ctx, measure, FloatConvergent::ROOT, Prefix::EMPTY, threshold.ln());
    Ok(padded(t.len(), lo, hi))
}

/// Exact Lebesgue measure for one coordinate, or two with a short outer range.
fn exact_lebesgue_event(ctx: &Ctx) -> Option<BigRational> {
    ctx.g_pow.as_ref()?;
    let r = ctx.reach(&Prefix::EMPTY, ctx.ln_g);
    if !r.is_certain() || r.hi > EXACT_TERMS * 1e6 {
        return None;
    }
    let outer = BigRational::new(BigInt::one(), BigInt::from(r.hi as u64));
    match ctx.t.len() {
        1 => Some(outer),
        2 if r.hi <= EXACT_TERMS => {
            let mut sum = outer;
            for a in 1..r.hi as u64 {
                let af = a as f64;
                let inner = ctx.reach(&Prefix::EMPTY.with(af), ctx.ln_g - ctx.t[0] * af.ln());
                if !inner.is_certain() {
                    return None;
                }
                // children of [a] with second digit >= A: length 1/(a(Aa + 1))
                let big_a = BigInt::from(inner.hi as u64);
                let q = BigInt::from(a);
                sum += BigRational::new(BigInt::one(), &q * (&big_a * &q + BigInt::one()));
            }
            Some(sum)
        }
        _ => None,
    }
}

/// Exact comparison of `prod a_i^{t_i}` against `g`, for near-ties.
///
/// Returns `None` when the exponents' common denominator is too large to
/// raise to.
pub(crate) fn weighted_product_reaches(digits: &[u64], t: &Weights, g: &BigRational) -> Option<bool> {
    let exps = &t.exponents()[..digits.len()];
    let th = Threshold { ln: ln_rational(g), exact: Some(g.clone()) };
    let ctx = Ctx::new(exps, &th, 2);
    let (last, head) = digits.split_last()?;
    let prefix = head.iter().fold(Prefix::EMPTY, |p, &d| p.with(d as f64));
    ctx.exact_reaches(&prefix, *last as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn w(s: &str) -> Weights {
        s.parse().unwrap()
    }

    fn g(x: f64) -> Threshold {
        Threshold::from_f64(x).unwrap()
    }

    #[test]
    fn one_dimensional_tails() {
        let one: Exponent = "1".parse().unwrap();
        let two: Exponent = "2".parse().unwrap();
        assert_eq!(tail_sum_1d(&one, &rat(10, 1)).unwrap(), rat(1, 10));
        assert_eq!(tail_sum_1d(&two, &rat(100, 1)).unwrap(), rat(1, 10));
        assert_eq!(tail_sum_1d(&two, &rat(101, 1)).unwrap(), rat(1, 11));
        assert_eq!(tail_sum_1d(&one, &rat(1, 1)).unwrap(), rat(1, 1));
        let half: Exponent = "0.5".parse().unwrap();
        assert_eq!(tail_sum_1d(&half, &rat(3, 1)).unwrap(), rat(1, 9));
        assert!(tail_sum_1d(&one, &rat(1, 2)).is_err());
    }

    #[test]
    fn envelope_values() {
        let e10 = 10f64.exp();
        let v = asymptotic_envelope(&w("1,1"), e10).unwrap();
        assert!((v - 10.0 * (-10f64).exp()).abs() < 1e-15);
        let v = asymptotic_envelope(&w("2,1"), e10).unwrap();
        assert!((v - (-5f64).exp()).abs() < 1e-15);
        let v = asymptotic_envelope(&w("1,1,1"), e10).unwrap();
        assert!((v - 100.0 * (-10f64).exp()).abs() < 1e-13);
        assert!(asymptotic_envelope(&w("1"), 2.0).is_err());
    }

    #[test]
    fn block_partition_is_contiguous() {
        let bs = blocks(10_001.0, 5e6);
        assert_eq!(bs[0].0, 10_001.0);
        assert_eq!(bs.last().unwrap().1, 5e6);
        assert!(bs.windows(2).all(|p| p[0].1 == p[1].0 && p[0].0 < p[0].1));
        assert!(bs.len() < 64 * 7);
    }

    #[test]
    fn tail_sum_reduces_to_one_dimension() {
        let b = weighted_tail_sum(&w("1"), &g(10.0), 100).unwrap();
        assert_eq!(b.exact, Some(rat(1, 10)));
        let b = weighted_tail_sum(&w("1,1"), &g(1.0), 100).unwrap();
        assert_eq!(b.exact, Some(rat(1, 1)));
    }

    #[test]
    fn small_pair_is_exact() {
        // oracle: direct double loop with exact rationals
        let mut oracle = BigRational::zero();
        for a in 1..=12i64 {
            let mut b = 1i64;
            while a * b < 12 {
                b += 1;
            }
            oracle += rat(1, a * (a + 1)) * rat(1, b);
        }
        oracle += rat(1, 13);
        let br = weighted_tail_sum(&w("1,1"), &g(12.0), 100).unwrap();
        assert_eq!(br.exact, Some(oracle));
    }

    #[test]
    fn float_bracket_contains_exact_value() {
        let exact = weighted_tail_sum(&w("1,1"), &g(400.5), 1000).unwrap();
        assert!(exact.exact.is_some());
        // force the float path through a threshold known only by its log
        let fl = weighted_tail_sum(&w("1,1"), &Threshold::from_ln(400.5f64.ln()).unwrap(), 1000).unwrap();
        assert!(fl.exact.is_none());
        assert!(fl.contains(exact.lo), "{fl:?} vs {}", exact.lo);
        assert!(fl.width() < 1e-12);
    }

    #[test]
    fn brackets_nest_as_cutoff_grows() {
        let t = w("1,1");
        let gg = g(1e6);
        let mut prev: Option<Bracket> = None;
        for cutoff in [10, 100, 1000, 10_000, 100_000, 1_000_000] {
            let b = weighted_tail_sum(&t, &gg, cutoff).unwrap();
            if let Some(p) = prev {
                let slack = 1e-14 * p.hi;
                assert!(b.lo >= p.lo - slack && b.hi <= p.hi + slack, "{p:?} -> {b:?}");
            }
            prev = Some(b);
        }
        assert!(prev.unwrap().width() < 1e-9);
    }

    #[test]
    fn permutation_invariance() {
        for (a, b) in [("2,1", "1,2"), ("1,2,1", "2,1,1"), ("0.5,1.5", "1.5,0.5")] {
            let x = weighted_tail_sum(&w(a), &g(1000.0), 1000).unwrap();
            let y = weighted_tail_sum(&w(b), &g(1000.0), 1000).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn event_examples() {
        let b = measure_of_event(&w("1"), &g(10.0), Measure::Lebesgue, 100).unwrap();
        assert_eq!(b.exact, Some(rat(1, 10)));
        assert_eq!(b.width(), 0.0);
        let b = measure_of_event(&w("1,1"), &g(1.0), Measure::Gauss, 100).unwrap();
        assert_eq!(b.exact, Some(rat(1, 1)));
    }

    #[test]
    fn pair_event_matches_cylinder_oracle() {
        // exhaustive sum of exact cylinder lengths 1/(q2 (q2 + q1)) over a1 a2 >= 100
        let mut oracle = BigRational::zero();
        for a1 in 1..100i64 {
            let a2_min = (100 + a1 - 1) / a1;
            // children of [a1] with a2 >= a2_min
            oracle += rat(1, a1 * (a2_min * a1 + 1));
        }
        oracle += rat(1, 100);
        let b = measure_of_event(&w("1,1"), &g(100.0), Measure::Lebesgue, 1000).unwrap();
        assert_eq!(b.exact, Some(oracle.clone()));
        let fl = measure_of_event(&w("1,1"), &Threshold::from_ln(100f64.ln()).unwrap(), Measure::Lebesgue, 1000)
            .unwrap();
        assert!(fl.contains_rational(&oracle));
    }

    #[test]
    fn gauss_and_lebesgue_within_density_ratio() {
        for (t, th) in [("1,1", 100.0), ("2,1", 1e4), ("1,2,1", 1e3)] {
            let l = measure_of_event(&w(t), &g(th), Measure::Lebesgue, 10_000).unwrap();
            let ga = measure_of_event(&w(t), &g(th), Measure::Gauss, 10_000).unwrap();
            let ln2 = std::f64::consts::LN_2;
            assert!(l.lo <= 2.0 * ln2 * ga.hi && l.hi >= ln2 * ga.lo, "{l:?} {ga:?}");
        }
    }

    #[test]
    fn truncated_event_brackets_are_consistent() {
        let t = w("1,1");
        let th = g(1e8);
        let coarse = measure_of_event(&t, &th, Measure::Lebesgue, 1000).unwrap();
        let fine = measure_of_event(&t, &th, Measure::Lebesgue, 100_000).unwrap();
        assert!(fine.width() < coarse.width());
        assert!(fine.lo <= coarse.hi && fine.hi >= coarse.lo);
        let three = measure_of_event(&w("1,1,1"), &g(1e4), Measure::Gauss, 100).unwrap();
        assert!(three.lo > 0.0 && three.lo < three.hi);
    }

    #[test]
    fn exact_product_comparison() {
        let t = w("2,1");
        assert_eq!(weighted_product_reaches(&[10, 1], &t, &rat(100, 1)), Some(true));
        assert_eq!(weighted_product_reaches(&[10, 1], &t, &rat(101, 1)), Some(false));
        let t = w("0.5,1.5");
        // 4^0.5 * 4^1.5 = 16
        assert_eq!(weighted_product_reaches(&[4, 4], &t, &rat(16, 1)), Some(true));
        assert_eq!(weighted_product_reaches(&[4, 4], &t, &rat(1601, 100)), Some(false));
    }
}
