//! Monte Carlo check of the zero-one law.
//!
//! Digits are drawn one at a time from their conditional law given the
//! digits so far. Under Lebesgue measure the remainder `y = T^n x` of a point
//! in the cylinder of `a_1 ... a_n` has density proportional to
//! `(1 + r y)^{-2}` with `r = q_{n-1} / q_n`; under the Gauss measure it is
//! proportional to `1 / ((1 + r y)(1 + r' y))` with
//! `r' = (p_{n-1} + q_{n-1}) / (p_n + q_n)`. Both ratios obey
//! `r <- 1 / (a + r)`, which contracts, so they carry no accumulated error
//! (unlike iterating the Gauss map on a float orbit, which loses a digit of
//! accuracy every step or two).

use num_rational::BigRational;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::cf::Word;
use crate::error::{Error, Result};
use crate::growth::{eval_log_growth, GrowthExpr};
use crate::tails::{measure_of_event, weighted_product_reaches, Acc, Bracket, Measure, Threshold, DEFAULT_CUTOFF};
use crate::weights::Weights;

/// Digits at or above this value are drawn by a second, rescaled draw.
pub const TAIL_START: u64 = 1_000_001;
/// Relative distance from equality below which a hit is decided exactly.
pub const GUARD_BAND: f64 = 1e-12;

/// Conditional state after a prefix: `r`, `r'` and `d = r' - r`.
///
/// `d` is updated by its own recurrence `d <- -d r r'` so that it keeps full
/// relative accuracy when `r` and `r'` agree to many digits.
#[derive(Clone, Copy, Debug)]
struct ChainState {
    r: f64,
    r2: f64,
    d: f64,
}

impl ChainState {
    const ROOT: Self = Self { r: 0.0, r2: 1.0, d: 1.0 };

    fn push(self, a: u64) -> Self {
        let af = a as f64;
        let r = 1.0 / (af + self.r);
        let r2 = 1.0 / (af + self.r2);
        Self { r, r2, d: -self.d * r * r2 }
    }
}

/// `ln(1 + z) / z`, continuous at 0.
fn log1p_ratio(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z.ln_1p() / z
    }
}

/// `(e^z - 1) / z`, continuous at 0.
fn expm1_ratio(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// Digit sampler for Lebesgue or Gauss measure.
///
/// Each sample owns the ChaCha20 stream numbered by its id and digit `k`
/// uses words `2k` and `2k + 1` of that stream, so a digit is a pure
/// function of `(seed, sample id, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DigitSampler {
    pub base: Measure,
    pub seed: u64,
}

impl DigitSampler {
    pub fn new(base: Measure, seed: u64) -> Self {
        Self { base, seed }
    }

    /// Unnormalised mass of remainders in `[0, y]`.
    fn mass(&self, s: ChainState, y: f64) -> f64 {
        let u = y / (1.0 + s.r * y);
        match self.base {
            Measure::Lebesgue => u,
            Measure::Gauss => u * log1p_ratio(s.d * u),
        }
    }

    /// Largest `y` with `mass(y) <= v`.
    fn inverse_mass(&self, s: ChainState, v: f64) -> f64 {
        let e = match self.base {
            Measure::Lebesgue => v,
            Measure::Gauss => v * expm1_ratio(s.d * v),
        };
        e / (1.0 - s.r * e)
    }

    /// `P(next digit >= a)`.
    fn at_least(&self, s: ChainState, a: f64) -> f64 {
        self.mass(s, 1.0 / a) / self.mass(s, 1.0)
    }

    /// The digit `a` with `P(>= a + 1) < v <= P(>= a)`.
    fn invert(&self, s: ChainState, v: f64) -> u64 {
        let y = self.inverse_mass(s, v * self.mass(s, 1.0));
        let guess = (1.0 / y).floor();
        if !(guess < 9.0e15) {
            // beyond exact f64 integers the neighbours cannot be told apart
            return if guess.is_finite() && guess < u64::MAX as f64 { guess as u64 } else { u64::MAX };
        }
        let mut a = (guess as u64).max(1);
        while a > 1 && self.at_least(s, a as f64) < v {
            a -= 1;
        }
        while self.at_least(s, (a + 1) as f64) >= v {
            a += 1;
        }
        a
    }

    fn draw(&self, s: ChainState, u1: f64, u2: f64) -> u64 {
        let tail = self.at_least(s, TAIL_START as f64);
        if u1 > tail {
            self.invert(s, u1)
        } else {
            // conditional draw inside the tail, at full relative resolution
            self.invert(s, u2 * tail).max(TAIL_START)
        }
    }

    /// Probabilities of the next digit being `1, ..., k`, followed by the
    /// mass of `{> k}`, after the given prefix. The entries are differences
    /// of one decreasing sequence starting at 1, so they telescope to 1.
    pub fn digit_law(&self, prefix: &[u64], k: u64) -> Vec<f64> {
        let s = prefix.iter().fold(ChainState::ROOT, |s, &a| s.push(a));
        let mut out = Vec::with_capacity(k as usize + 1);
        let mut prev = 1.0;
        for a in 1..=k {
            let next = self.at_least(s, (a + 1) as f64);
            out.push(prev - next);
            prev = next;
        }
        out.push(prev);
        out
    }
}

fn unit_interval(x: u64) -> f64 {
    // (0, 1] with 53 bits
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The first `n` digits of sample `sample_id`.
pub fn sample_digits(sampler: &DigitSampler, sample_id: u64, n: usize) -> Result<Word> {
    if n == 0 {
        return Err(Error::Domain("at least one digit must be sampled".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(sampler.seed);
    rng.set_stream(sample_id);
    let mut s = ChainState::ROOT;
    let mut digits = Vec::with_capacity(n);
    for _ in 0..n {
        let u1 = unit_interval(rng.next_u64());
        let u2 = unit_interval(rng.next_u64());
        let a = sampler.draw(s, u1, u2);
        digits.push(a);
        s = s.push(a);
    }
    Word::new(digits)
}

/// One index `n` with `prod a_{n+i}^{t_i} >= Psi(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub n: u64,
    pub log_product: f64,
    pub log_psi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitReport {
    pub sample_id: u64,
    /// Sorted by `n`.
    pub hits: Vec<Hit>,
    pub first_hit: Option<u64>,
    pub window: (u64, u64),
    /// Near-ties that could not be decided exactly and were settled in floating point.
    pub unresolved_ties: usize,
}

impl HitReport {
    pub fn indices(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.n).collect()
    }
}

fn check_window(len: usize, m: usize, n0: u64, n1: u64) -> Result<()> {
    if n0 < 1 || n1 < n0 {
        return Err(Error::Domain(format!("window [{n0}, {n1}] must satisfy 1 <= n0 <= n1")));
    }
    if n1 as u128 + m as u128 - 1 > len as u128 {
        return Err(Error::Domain(format!(
            "window end {n1} needs {} digits, the word has {len}",
            n1 as u128 + m as u128 - 1
        )));
    }
    Ok(())
}

/// `ln Psi(n)` for every `n` in the window.
fn log_psi_table(e: &GrowthExpr, n0: u64, n1: u64) -> Result<Vec<f64>> {
    (n0..=n1).map(|n| eval_log_growth(e, n)).collect()
}

fn scan(digits: &[u64], t: &Weights, e: &GrowthExpr, n0: u64, log_psi: &[f64], sample_id: u64) -> HitReport {
    let tv = t.values();
    let m = tv.len();
    let logs: Vec<f64> = digits.iter().map(|&a| (a as f64).ln()).collect();
    let mut hits = Vec::new();
    let mut unresolved_ties = 0;
    for (k, &lp) in log_psi.iter().enumerate() {
        let n = n0 + k as u64;
        let start = (n - 1) as usize;
        let lprod: f64 = tv.iter().zip(&logs[start..start + m]).map(|(t, l)| t * l).sum();
        let gap = lprod - lp;
        let hit = if gap.abs() <= GUARD_BAND * lp.abs().max(1.0) {
            let exact = e.eval_exact(n).and_then(|g| exact_reaches(&digits[start..start + m], t, &g));
            exact.unwrap_or_else(|| {
                unresolved_ties += 1;
                gap >= 0.0
            })
        } else {
            gap >= 0.0
        };
        if hit {
            hits.push(Hit { n, log_product: lprod, log_psi: lp });
        }
    }
    let window = (n0, n0 + log_psi.len() as u64 - 1);
    HitReport { sample_id, first_hit: hits.first().map(|h| h.n), hits, window, unresolved_ties }
}

fn exact_reaches(digits: &[u64], t: &Weights, g: &BigRational) -> Option<bool> {
    use num_traits::One;
    if *g <= BigRational::one() {
        return Some(true);
    }
    weighted_product_reaches(digits, t, g)
}

/// Indices `n` in `[n0, n1]` with `sum t_i ln a_{n+i} >= ln Psi(n)`.
///
/// Comparisons within [`GUARD_BAND`] of equality are redone exactly when
/// `Psi(n)` is rational.
pub fn hit_scan(w: &Word, t: &Weights, e: &GrowthExpr, n0: u64, n1: u64) -> Result<HitReport> {
    check_window(w.len(), t.len(), n0, n1)?;
    let table = log_psi_table(e, n0, n1)?;
    Ok(scan(w.digits(), t, e, n0, &table, 0))
}

#[derive(Clone, Debug)]
pub struct McConfig {
    pub samples: u64,
    /// Digits per sample; `None` takes the minimum the window needs.
    pub digits: Option<usize>,
    pub t: Weights,
    pub psi: GrowthExpr,
    pub base: Measure,
    pub seed: u64,
    pub window: (u64, u64),
    /// Per-coordinate enumeration cutoff for the analytic brackets.
    pub cutoff: u64,
    /// Keep every hit for a CSV dump.
    pub keep_hits: bool,
}

impl McConfig {
    pub fn new(t: Weights, psi: GrowthExpr, base: Measure, window: (u64, u64), samples: u64, seed: u64) -> Self {
        Self { samples, digits: None, t, psi, base, seed, window, cutoff: DEFAULT_CUTOFF, keep_hits: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McSummary {
    pub samples: u64,
    /// Samples with at least one hit in the window.
    pub hit_samples: u64,
    pub empirical_hit_prob: f64,
    /// Binomial standard error of `empirical_hit_prob`.
    pub hit_prob_sigma: f64,
    pub mean_hit_count: f64,
    /// Sum over the window of the per-index event brackets: brackets the
    /// expected hit count, and its upper end bounds the hit probability.
    pub analytic_bracket: Bracket,
    /// `min(1, analytic_bracket.hi)`.
    pub union_bound: f64,
    pub unresolved_ties: usize,
    /// `(sample id, hit)` in sample order when requested.
    pub hits: Vec<(u64, Hit)>,
}

/// Sum of per-index event brackets over the window.
///
/// The event at index `n` is the pullback of the order-`m` event under
/// `T^{n-1}`. Its Gauss measure does not depend on `n`; its Lebesgue measure
/// lies between `ln 2` and `2 ln 2` times that, by the bounds on the Gauss
/// density.
pub fn analytic_bracket(t: &Weights, e: &GrowthExpr, base: Measure, window: (u64, u64), cutoff: u64) -> Result<Bracket> {
    let (n0, n1) = window;
    let per_n: Vec<(f64, f64)> = (n0..=n1)
        .into_par_iter()
        .map(|n| -> Result<(f64, f64)> {
            let th = match e.eval_exact(n) {
                Some(g) => Threshold::from_rational(g)?,
                None => Threshold::from_ln(eval_log_growth(e, n)?)?,
            };
            let b = measure_of_event(t, &th, Measure::Gauss, cutoff)?;
            Ok(match base {
                Measure::Gauss => (b.lo, b.hi),
                Measure::Lebesgue => {
                    let ln2 = std::f64::consts::LN_2;
                    (b.lo * ln2, (b.hi * 2.0 * ln2).min(1.0))
                }
            })
        })
        .collect::<Result<_>>()?;
    let (mut lo, mut hi) = (Acc::default(), Acc::default());
    for (l, h) in per_n {
        lo.add(l);
        hi.add(h);
    }
    Ok(Bracket::new(lo.value(), hi.value()))
}

/// Sample, scan and aggregate. The result is a pure function of `cfg`.
pub fn mc_experiment(cfg: &McConfig) -> Result<McSummary> {
    if cfg.samples < 1 {
        return Err(Error::Domain("at least one sample is needed".into()));
    }
    let (n0, n1) = cfg.window;
    let m = cfg.t.len();
    let needed = (n1 as usize).saturating_add(m - 1);
    let n_digits = cfg.digits.unwrap_or(needed);
    check_window(n_digits, m, n0, n1)?;
    let table = log_psi_table(&cfg.psi, n0, n1)?;
    let sampler = DigitSampler::new(cfg.base, cfg.seed);
    let reports: Vec<HitReport> = (0..cfg.samples)
        .into_par_iter()
        .map(|id| -> Result<HitReport> {
            let w = sample_digits(&sampler, id, n_digits)?;
            Ok(scan(w.digits(), &cfg.t, &cfg.psi, n0, &table, id))
        })
        .collect::<Result<_>>()?;
    let hit_samples = reports.iter().filter(|r| r.first_hit.is_some()).count() as u64;
    let total_hits: u64 = reports.iter().map(|r| r.hits.len() as u64).sum();
    let p = hit_samples as f64 / cfg.samples as f64;
    let analytic = analytic_bracket(&cfg.t, &cfg.psi, cfg.base, cfg.window, cfg.cutoff)?;
    let hits = if cfg.keep_hits {
        reports.iter().flat_map(|r| r.hits.iter().map(move |h| (r.sample_id, *h))).collect()
    } else {
        Vec::new()
    };
    Ok(McSummary {
        samples: cfg.samples,
        hit_samples,
        empirical_hit_prob: p,
        hit_prob_sigma: (p * (1.0 - p) / cfg.samples as f64).sqrt(),
        mean_hit_count: total_hits as f64 / cfg.samples as f64,
        union_bound: analytic.hi.min(1.0),
        analytic_bracket: analytic,
        unresolved_ties: reports.iter().map(|r| r.unresolved_ties).sum(),
        hits,
    })
}
