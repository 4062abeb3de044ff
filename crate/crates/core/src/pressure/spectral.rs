//! Transfer-operator pressure on a Chebyshev grid.
//!
//! `(L f)(x) = sum_a (a + x)^{-2s} f(1 / (a + x))` is discretised on the
//! Chebyshev extreme points of `[0, 1]`. Digits up to [`EXPLICIT_DIGITS`] are
//! applied through barycentric interpolation. For larger digits the image
//! point `1 / (a + x)` is close to 0, so `f` is replaced by the Taylor
//! expansion of its interpolant at 0 and the digit sum collapses to power
//! sums `sum_a (a + x)^{-(2s + k)}`, evaluated by Euler-Maclaurin. The
//! alphabet may therefore be infinite as long as `s > 1/2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::Alphabet;
use crate::error::{Error, Result};

/// Digits applied through the interpolant itself.
pub const EXPLICIT_DIGITS: u64 = 40;
/// Digits summed term by term before switching to Euler-Maclaurin.
const DIRECT_TAIL: u64 = 100;
/// Taylor degree used for the tail digits.
const TAYLOR_DEGREE: usize = 20;
pub const DEFAULT_GRID: usize = 32;
const RESIDUAL_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 10_000;

/// Pressure estimate with its error budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureValue {
    pub value: f64,
    pub abs_error: f64,
    pub residual: f64,
    pub iterations: usize,
    pub grid: usize,
}

/// Grid data independent of `s`: nodes, barycentric weights and the map from
/// node values to Taylor coefficients at 0.
struct Grid {
    nodes: Vec<f64>,
    bary: Vec<f64>,
    /// `taylor[k][j]`: coefficient of `y^k` contributed by the value at node `j`.
    taylor: Vec<Vec<f64>>,
}

impl Grid {
    fn new(n: usize) -> Self {
        let nm1 = (n - 1) as f64;
        let theta: Vec<f64> = (0..n).map(|j| std::f64::consts::PI * j as f64 / nm1).collect();
        let nodes: Vec<f64> = theta.iter().map(|t| 0.5 * (1.0 + t.cos())).collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        // values -> Chebyshev coefficients (discrete cosine transform of type I)
        let mut cheb = vec![vec![0.0; n]; n];
        for (i, row) in cheb.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                let end = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                *c = 2.0 / nm1 * end * (i as f64 * theta[j]).cos();
            }
            if i == 0 || i == n - 1 {
                row.iter_mut().for_each(|c| *c *= 0.5);
            }
        }
        // Chebyshev coefficients -> Taylor coefficients at y = 0, using
        // T_i^{(k)}(-1) = (-1)^{i+k} prod_{l<k} (i^2 - l^2) / (2l + 1) and dy = 2 dxi
        let degree = TAYLOR_DEGREE.min(n);
        let mut taylor = vec![vec![0.0; n]; degree];
        for (k, row) in taylor.iter_mut().enumerate() {
            let mut scale = 1.0;
            for l in 1..=k {
                scale *= 2.0 / l as f64;
            }
            for (i, cheb_row) in cheb.iter().enumerate() {
                if k > i {
                    continue;
                }
                let mut d = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
                for l in 0..k {
                    d *= ((i * i - l * l) as f64) / (2 * l + 1) as f64;
                }
                let factor = scale * d;
                for (r, c) in row.iter_mut().zip(cheb_row) {
                    *r += factor * c;
                }
            }
        }
        Self { nodes, bary, taylor }
    }

    fn cached(n: usize) -> Arc<Grid> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Grid>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("grid cache poisoned");
        map.entry(n).or_insert_with(|| Arc::new(Grid::new(n))).clone()
    }

    /// Lagrange basis values at `y`.
    fn basis(&self, y: f64, out: &mut [f64]) {
        if let Some(j) = self.nodes.iter().position(|&x| x == y) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
        let mut total = 0.0;
        for ((o, &x), &w) in out.iter_mut().zip(&self.nodes).zip(&self.bary) {
            *o = w / (y - x);
            total += *o;
        }
        out.iter_mut().for_each(|v| *v /= total);
    }
}

const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];

/// `sum_{a=lo}^{hi} (a + x)^{-sigma}` by Euler-Maclaurin (`hi` may be infinite).
fn power_sum_em(lo: f64, hi: f64, x: f64, sigma: f64) -> f64 {
    let a = lo + x;
    let g = |z: f64| z.powf(-sigma);
    // r-th derivative of z^{-sigma} is (-1)^r (sigma)_r z^{-sigma-r}
    let deriv = |z: f64, r: usize| {
        let mut p = 1.0;
        for i in 0..r {
            p *= sigma + i as f64;
        }
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        sign * p * z.powf(-sigma - r as f64)
    };
    let mut factorial = 1.0;
    let mut corrections = 0.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let r = 2 * j + 1;
        factorial *= (r * (r + 1)) as f64;
        let mut diff = -deriv(a, r);
        if hi.is_finite() {
            diff += deriv(hi + x, r);
        }
        corrections += b / factorial * diff;
    }
    let (integral, ends) = if hi.is_finite() {
        let b = hi + x;
        let u = 1.0 - sigma;
        let lr = (b / a).ln();
        let z = u * lr;
        let phi = if z.abs() < 1e-12 { 1.0 + 0.5 * z } else { z.exp_m1() / z };
        (a.powf(u) * lr * phi, 0.5 * (g(a) + g(b)))
    } else {
        (a.powf(1.0 - sigma) / (sigma - 1.0), 0.5 * g(a))
    };
    integral + ends + corrections
}

/// `H_k(x) = sum_{a = EXPLICIT_DIGITS + 1}^{M} (a + x)^{-(2s + k)}` for `k < degree`.
fn tail_power_sums(alphabet: Alphabet, x: f64, s: f64, degree: usize) -> Vec<f64> {
    let mut h = vec![0.0; degree];
    let last = match alphabet {
        Alphabet::Finite(m) => m as f64,
        Alphabet::Full => f64::INFINITY,
    };
    let direct_end = (EXPLICIT_DIGITS + DIRECT_TAIL) as f64;
    let mut a = EXPLICIT_DIGITS as f64 + 1.0;
    while a <= direct_end.min(last) {
        let z = a + x;
        let mut p = z.powf(-2.0 * s);
        for hk in h.iter_mut() {
            *hk += p;
            p /= z;
        }
        a += 1.0;
    }
    if last > direct_end {
        for (k, hk) in h.iter_mut().enumerate() {
            *hk += power_sum_em(direct_end + 1.0, last, x, 2.0 * s + k as f64);
        }
    }
    h
}

/// The discretised operator as a dense row-major matrix.
fn operator_matrix(alphabet: Alphabet, s: f64, grid: &Grid) -> Vec<Vec<f64>> {
    let n = grid.nodes.len();
    let explicit = match alphabet {
        Alphabet::Finite(m) => m.min(EXPLICIT_DIGITS),
        Alphabet::Full => EXPLICIT_DIGITS,
    };
    let has_tail = match alphabet {
        Alphabet::Finite(m) => m > EXPLICIT_DIGITS,
        Alphabet::Full => true,
    };
    let mut basis = vec![0.0; n];
    grid.nodes
        .iter()
        .map(|&x| {
            let mut row = vec![0.0; n];
            for a in 1..=explicit {
                let z = a as f64 + x;
                let w = z.powf(-2.0 * s);
                grid.basis(1.0 / z, &mut basis);
                for (r, b) in row.iter_mut().zip(&basis) {
                    *r += w * b;
                }
            }
            if has_tail {
                let h = tail_power_sums(alphabet, x, s, grid.taylor.len());
                for (hk, coeffs) in h.iter().zip(&grid.taylor) {
                    for (r, c) in row.iter_mut().zip(coeffs) {
                        *r += hk * c;
                    }
                }
            }
            row
        })
        .collect()
}

fn apply(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Leading eigenvalue by power iteration, with the final residual.
fn leading_eigenvalue(a: &[Vec<f64>]) -> Result<(f64, f64, usize)> {
    let n = a.len();
    let mut v = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let w = apply(a, &v);
        let lambda = w.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() / v.iter().map(|y| y * y).sum::<f64>();
        let wn = norm_inf(&w);
        if !(wn > 0.0) || !lambda.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual });
        }
        residual = w.iter().zip(&v).map(|(x, y)| (x - lambda * y).abs()).fold(0.0, f64::max) / wn;
        v = w.iter().map(|x| x / wn).collect();
        if residual < RESIDUAL_TOL {
            return Ok((lambda, residual, it));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
}

fn check(alphabet: Alphabet, s: f64, grid: usize) -> Result<()> {
    if grid < 8 {
        return Err(Error::Domain(format!("grid size must be at least 8, got {grid}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s = {s} is outside [0, 1]")));
    }
    match alphabet {
        Alphabet::Finite(0) => Err(Error::Domain("alphabet must be nonempty".into())),
        Alphabet::Full if s <= 0.5 => Err(Error::Domain(format!("the full alphabet needs s > 1/2, got s = {s}"))),
        _ => Ok(()),
    }
}

fn log_eigenvalue(alphabet: Alphabet, s: f64, grid: usize) -> Result<(f64, f64, usize)> {
    let g = Grid::cached(grid);
    let a = operator_matrix(alphabet, s, &g);
    let (lambda, residual, it) = leading_eigenvalue(&a)?;
    Ok((lambda.ln(), residual, it))
}

/// `P(T, -s ln|T'| - c)` over the alphabet, as the log of the leading
/// eigenvalue minus `c`.
///
/// The error estimate adds the power-iteration residual to the change seen
/// when the grid is reduced by a quarter.
pub fn pressure_spectral(alphabet: Alphabet, s: f64, c: f64, grid: usize) -> Result<PressureValue> {
    check(alphabet, s, grid)?;
    let (p, residual, iterations) = log_eigenvalue(alphabet, s, grid)?;
    let coarse = (grid * 3 / 4).max(8);
    let (p_coarse, _, _) = log_eigenvalue(alphabet, s, coarse)?;
    let abs_error = residual + (p - p_coarse).abs() + 4.0 * f64::EPSILON * p.abs();
    Ok(PressureValue { value: p - c, abs_error, residual, iterations, grid })
}

/// `ln (L_N^n 1)(0)` for the discretised operator `L_N`.
pub fn spectral_iterate(alphabet: Alphabet, s: f64, n: usize, grid: usize) -> Result<f64> {
    check(alphabet, s, grid)?;
    let g = Grid::cached(grid);
    let a = operator_matrix(alphabet, s, &g);
    let mut v = vec![1.0; grid];
    let mut log_scale = 0.0;
    for _ in 0..n {
        v = apply(&a, &v);
        let m = norm_inf(&v);
        v.iter_mut().for_each(|x| *x /= m);
        log_scale += m.ln();
    }
    // x = 0 is the last node
    Ok(v[grid - 1].ln() + log_scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_map_reproduces_polynomials() {
        let g = Grid::new(16);
        // f(y) = 1 - 2y + 3y^3
        let vals: Vec<f64> = g.nodes.iter().map(|y| 1.0 - 2.0 * y + 3.0 * y * y * y).collect();
        let coeffs: Vec<f64> = g.taylor.iter().map(|row| row.iter().zip(&vals).map(|(a, b)| a * b).sum()).collect();
        let expect = [1.0, -2.0, 0.0, 3.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((coeffs[k] - e).abs() < 1e-9, "k = {k}: {}", coeffs[k]);
        }
        // high coefficients carry amplified rounding but are harmless where the tail is used
        for y in [1.0f64 / 41.0, 0.01, 0.0] {
            let series: f64 = coeffs.iter().enumerate().map(|(k, c)| c * y.powi(k as i32)).sum();
            assert!((series - (1.0 - 2.0 * y + 3.0 * y * y * y)).abs() < 1e-13, "y = {y}");
        }
    }

    #[test]
    fn euler_maclaurin_matches_direct_sums() {
        for &sigma in &[1.0, 1.3, 2.7, 9.0] {
            let direct: f64 = (141..=5000).map(|a| (a as f64 + 0.3).powf(-sigma)).sum();
            let em = power_sum_em(141.0, 5000.0, 0.3, sigma);
            assert!((direct - em).abs() <= 1e-13 * direct, "sigma {sigma}: {direct} {em}");
        }
        // zeta(2) - sum_{a<=140} a^-2
        let head: f64 = (1..=140).map(|a| (a as f64).powi(-2)).sum();
        let tail = std::f64::consts::PI.powi(2) / 6.0 - head;
        assert!((power_sum_em(141.0, f64::INFINITY, 0.0, 2.0) - tail).abs() < 1e-15);
    }

    #[test]
    fn single_branch_golden_mean() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for &s in &[0.3, 0.5, 0.8, 1.0] {
            let p = pressure_spectral(Alphabet::Finite(1), s, 0.0, DEFAULT_GRID).unwrap();
            assert!((p.value - 2.0 * s * g.ln()).abs() < 1e-11, "s {s}: {}", p.value);
        }
    }

    #[test]
    fn gauss_operator_has_zero_pressure_at_one() {
        let p = pressure_spectral(Alphabet::Full, 1.0, 0.0, DEFAULT_GRID).unwrap();
        assert!(p.value.abs() < 1e-10, "{p:?}");
        let p64 = pressure_spectral(Alphabet::Finite(64), 1.0, 0.0, DEFAULT_GRID).unwrap();
        let p128 = pressure_spectral(Alphabet::Finite(128), 1.0, 0.0, DEFAULT_GRID).unwrap();
        assert!(p64.value < p128.value && p128.value < 0.0);
    }

    #[test]
    fn shift_law() {
        let a = pressure_spectral(Alphabet::Finite(5), 0.6, 0.0, DEFAULT_GRID).unwrap();
        let b = pressure_spectral(Alphabet::Finite(5), 0.6, 0.75, DEFAULT_GRID).unwrap();
        assert!((a.value - b.value - 0.75).abs() < 1e-14);
    }

    #[test]
    fn finite_tail_agrees_with_explicit_digits() {
        // M = 300 runs through both the direct and Euler-Maclaurin tails
        let a = pressure_spectral(Alphabet::Finite(300), 0.7, 0.0, DEFAULT_GRID).unwrap();
        let g = Grid::cached(DEFAULT_GRID);
        let mut basis = vec![0.0; DEFAULT_GRID];
        let mat: Vec<Vec<f64>> = g
            .nodes
            .iter()
            .map(|&x| {
                let mut row = vec![0.0; DEFAULT_GRID];
                for d in 1..=300u64 {
                    let z = d as f64 + x;
                    g.basis(1.0 / z, &mut basis);
                    for (r, b) in row.iter_mut().zip(&basis) {
                        *r += z.powf(-1.4) * b;
                    }
                }
                row
            })
            .collect();
        let (lambda, _, _) = leading_eigenvalue(&mat).unwrap();
        assert!((lambda.ln() - a.value).abs() < 1e-10, "{} {}", lambda.ln(), a.value);
    }

    #[test]
    fn full_alphabet_needs_s_above_half() {
        assert!(pressure_spectral(Alphabet::Full, 0.5, 0.0, 32).is_err());
        assert!(pressure_spectral(Alphabet::Finite(3), 0.5, 0.0, 4).is_err());
    }
}
