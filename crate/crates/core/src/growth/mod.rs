//! Growth functions `Psi: N -> [1, inf)`: parsing, log-space evaluation,
//! finite-horizon exponent estimates and the zero-one-law series test.

mod expr;
mod parser;

pub use expr::{eval_log_growth, Expr, GrowthExpr, Number, Preset, Regime};
pub use parser::parse_growth;

use crate::error::{Error, Result};
use crate::weights::Weights;

/// Windowed estimate of `liminf g(n)` for `n` in `[N/2, N]`.
///
/// `windowed_minima` holds the running minima of the sampled sequence (in log
/// form), so it is nonincreasing; `value` is the exponential of its last entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentEstimate {
    pub value: f64,
    pub horizon: u64,
    pub windowed_minima: Vec<f64>,
    /// Indices skipped because `Psi(n) <= 1` there.
    pub skipped: usize,
}

impl ExponentEstimate {
    fn from_samples(horizon: u64, samples: impl Iterator<Item = Option<f64>>) -> Self {
        let mut minima = Vec::new();
        let mut skipped = 0;
        let mut current = f64::INFINITY;
        for s in samples {
            match s {
                Some(v) => {
                    current = current.min(v);
                    minima.push(current);
                }
                None => skipped += 1,
            }
        }
        let value = if minima.is_empty() { f64::NAN } else { current.exp() };
        Self { value, horizon, windowed_minima: minima, skipped }
    }
}

/// Estimates of `B` and `b` over the window `[N/2, N]`.
///
/// These are finite-horizon surrogates for the liminf and are never used to
/// pick a dimension branch without confirmation.
pub fn estimate_exponents(e: &GrowthExpr, horizon: u64) -> Result<(ExponentEstimate, ExponentEstimate)> {
    if horizon < 16 {
        return Err(Error::Domain(format!("estimation horizon {horizon} is below 16")));
    }
    let window = horizon / 2..=horizon;
    let logs = window
        .clone()
        .map(|n| eval_log_growth(e, n).map(|l| (n, l)))
        .collect::<Result<Vec<_>>>()?;
    let big_b = ExponentEstimate::from_samples(horizon, logs.iter().map(|&(n, l)| Some(l / n as f64)));
    let mut loglogs = Vec::with_capacity(logs.len());
    for &(n, l) in &logs {
        loglogs.push(if l > 0.0 { Some(e.eval_loglog(n)? / n as f64) } else { None });
    }
    let small_b = ExponentEstimate::from_samples(horizon, loglogs.into_iter());
    Ok((big_b, small_b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    Divergent,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    pub partial_sum: f64,
    pub horizon: u64,
    pub tail_evidence: String,
    /// Verdict of the window tests alone, before any closed-form certificate.
    pub window_verdict: Verdict,
}

/// `ln` of the term `(ln Psi)^(ell-1) / Psi^(1/t_max)`.
fn log_term(log_psi: f64, ell: usize, t_max: f64) -> f64 {
    if log_psi.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let log_factor = if ell == 1 {
        0.0
    } else if log_psi == 0.0 {
        f64::NEG_INFINITY
    } else {
        (ell - 1) as f64 * log_psi.ln()
    };
    log_factor - log_psi / t_max
}

const RATIO_LIMIT: f64 = 0.99;
const P_MARGIN: f64 = 0.05;

/// Convergence test for `sum_n (ln Psi(n))^(ell-1) / Psi(n)^(1/t_max)`.
///
/// The partial sum runs to `N`. The window `[N/2, N]` is checked against a
/// geometric-ratio bound and against comparison with `sum n^-p`; presets are
/// additionally classified in closed form, which takes precedence.
pub fn series_test(e: &GrowthExpr, t: &Weights, horizon: u64) -> Result<SeriesVerdict> {
    if horizon < 100 {
        return Err(Error::Domain(format!("series horizon {horizon} is below 100")));
    }
    let (ell, t_max) = (t.ell(), t.t_max());
    let mut partial = 0.0f64;
    let mut comp = 0.0f64;
    let mut window = Vec::new();
    for n in 1..=horizon {
        let lp = eval_log_growth(e, n)?;
        let lt = log_term(lp, ell, t_max);
        let term = lt.exp();
        // Neumaier summation
        let s = partial + term;
        comp += if partial.abs() >= term.abs() { (partial - s) + term } else { (term - s) + partial };
        partial = s;
        if n >= horizon / 2 {
            window.push((n, lp, lt));
        }
    }
    let partial_sum = partial + comp;
    let (window_verdict, evidence) = window_tests(&window, t_max);
    let (verdict, tail_evidence) = match e.preset().and_then(|p| preset_verdict(p, ell, t_max)) {
        Some((v, why)) => (v, format!("{why}; window: {evidence}")),
        None => (window_verdict, evidence),
    };
    Ok(SeriesVerdict { verdict, partial_sum, horizon, tail_evidence, window_verdict })
}

fn window_tests(window: &[(u64, f64, f64)], t_max: f64) -> (Verdict, String) {
    // geometric ratio
    let mut max_ratio = f64::NEG_INFINITY;
    for pair in window.windows(2) {
        let (a, b) = (pair[0].2, pair[1].2);
        let r = if b == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if a == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            b - a
        };
        max_ratio = max_ratio.max(r);
    }
    if max_ratio <= RATIO_LIMIT.ln() {
        let rho = max_ratio.exp();
        let last = window.last().map_or(0.0, |w| w.2.exp());
        let bound = last * rho / (1.0 - rho);
        return (
            Verdict::Convergent,
            format!("ratio test: term ratios <= {rho:.6e} on the window, tail <= {bound:.6e}"),
        );
    }

    let ln_n = |n: u64| (n as f64).ln();
    // exponents of the full term and of Psi^(1/t_max) alone
    let p_term: Vec<f64> = window.iter().map(|&(n, _, lt)| -lt / ln_n(n)).collect();
    let p_psi: Vec<f64> = window.iter().map(|&(n, lp, _)| lp / (t_max * ln_n(n))).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = p_term.len() / 2;
    let not_drifting_down = |v: &[f64]| min(&v[half..]) >= min(&v[..half]) - 1e-12;

    let p_hat = min(&p_term);
    if p_hat > 1.0 + P_MARGIN && not_drifting_down(&p_term) {
        return (
            Verdict::Convergent,
            format!("comparison with sum n^-p, p = {p_hat:.6} > 1 on the window"),
        );
    }
    let growth_ratio = max(&window.iter().map(|&(n, lp, _)| lp / ln_n(n)).collect::<Vec<_>>());
    let q_hat = min(&p_psi);
    if q_hat > 1.0 + P_MARGIN && not_drifting_down(&p_psi) && growth_ratio.is_finite() {
        return (
            Verdict::Convergent,
            format!(
                "comparison with sum (log n)^k n^-p, p = {q_hat:.6} > 1, ln Psi <= {growth_ratio:.3} ln n on the window"
            ),
        );
    }
    if max(&p_term) <= 1.0 + 1e-12 && max(&p_psi) <= 1.0 + 1e-12 {
        let c = window
            .iter()
            .map(|&(n, _, lt)| (lt + ln_n(n)).exp())
            .fold(f64::INFINITY, f64::min);
        return (
            Verdict::Divergent,
            format!("comparison with sum c/n: n * term >= {c:.6e} on the window"),
        );
    }
    (Verdict::Undecided, format!("no sufficient test fired (p estimate {p_hat:.6})"))
}

/// Closed-form classification of the preset families.
fn preset_verdict(p: &Preset, ell: usize, t_max: f64) -> Option<(Verdict, String)> {
    let psi_is_one = |v: Verdict| {
        // Psi = 1: terms are 0^(ell-1)
        if ell == 1 {
            (Verdict::Divergent, "Psi = 1, constant terms".to_string())
        } else {
            (v, "Psi = 1, zero terms".to_string())
        }
    };
    Some(match p.regime()? {
        Regime::Subexponential => match p {
            Preset::Poly(a) if a.value > 0.0 => {
                let q = a.value / t_max;
                if q > 1.0 {
                    (Verdict::Convergent, format!("closed form: (log n)^{} n^-{q}, exponent > 1", ell - 1))
                } else {
                    (Verdict::Divergent, format!("closed form: (log n)^{} n^-{q}, exponent <= 1", ell - 1))
                }
            }
            Preset::DoubleExp(c, beta) if c.value > 1.0 && beta.value < 1.0 => {
                if ell == 1 {
                    (Verdict::Divergent, "closed form: terms tend to 1".to_string())
                } else {
                    (Verdict::Convergent, "closed form: terms decay geometrically".to_string())
                }
            }
            _ => psi_is_one(Verdict::Convergent),
        },
        Regime::FiniteB { .. } | Regime::InfiniteB { .. } => {
            (Verdict::Convergent, "closed form: terms decay at least geometrically".to_string())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_growth_examples() {
        let l = eval_log_growth(&GrowthExpr::pow(2.0), 10).unwrap();
        assert!((l - 10.0 * 2f64.ln()).abs() < 1e-12);
        assert!((l - 6.9315).abs() < 1e-4);
        let l = eval_log_growth(&GrowthExpr::poly(3.0), 10).unwrap();
        assert!((l - 6.9078).abs() < 1e-4);
        let l = eval_log_growth(&GrowthExpr::double_exp(std::f64::consts::E, 2.0), 20).unwrap();
        assert!((l - 1048576.0).abs() < 1e-6);
        let l = eval_log_growth(&GrowthExpr::double_exp(std::f64::consts::E, 2.0), 2000).unwrap();
        assert!(l.is_infinite());
    }

    #[test]
    fn exponent_estimates() {
        let (b, small) = estimate_exponents(&GrowthExpr::pow(3.0), 1000).unwrap();
        assert!((b.value - 3.0).abs() < 1e-12);
        assert!((small.value - 1.0).abs() < 0.01);
        assert!(b.windowed_minima.windows(2).all(|w| w[1] <= w[0]));

        let (b, _) = estimate_exponents(&GrowthExpr::poly(2.0), 1000).unwrap();
        assert!(b.value >= 1.0 && b.value <= 1.02);

        let (b, small) = estimate_exponents(&GrowthExpr::double_exp(std::f64::consts::E, 1.5), 200).unwrap();
        assert!((small.value - 1.5).abs() < 1e-12);
        assert!(b.value.is_infinite() || b.value > 1e100);

        // loglog is computed symbolically past f64 range
        let (_, small) = estimate_exponents(&GrowthExpr::double_exp(std::f64::consts::E, 2.0), 4000).unwrap();
        assert!((small.value - 2.0).abs() < 1e-9);

        let (_, small) = estimate_exponents(&GrowthExpr::poly(0.0), 100).unwrap();
        assert_eq!(small.skipped, 51);
        assert!(small.value.is_nan());
        assert!(estimate_exponents(&GrowthExpr::pow(2.0), 15).is_err());
    }

    #[test]
    fn series_examples() {
        let t11: Weights = "1,1".parse().unwrap();
        let v = series_test(&GrowthExpr::poly(3.0), &t11, 1000).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert_eq!(v.window_verdict, Verdict::Convergent);

        let v = series_test(&GrowthExpr::poly(1.0), &t11, 1000).unwrap();
        assert_eq!(v.verdict, Verdict::Divergent);
        assert_eq!(v.window_verdict, Verdict::Divergent);

        let v = series_test(&GrowthExpr::pow(2.0), &"1".parse().unwrap(), 200).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert_eq!(v.window_verdict, Verdict::Convergent);
        assert!((v.partial_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn borderline_expression_is_undecided() {
        // sum 1/(n log n) diverges but the window cannot tell
        let e = parse_growth("n * log(n) + 1").unwrap();
        let v = series_test(&e, &"1".parse().unwrap(), 1000).unwrap();
        assert_ne!(v.verdict, Verdict::Convergent);
    }

    #[test]
    fn series_needs_horizon() {
        assert!(series_test(&GrowthExpr::pow(2.0), &"1".parse().unwrap(), 99).is_err());
    }
}
