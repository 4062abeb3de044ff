//! Pressure by direct enumeration of words over `{1, ..., M}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tails::Acc;

/// Default number of leaves a single enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

fn check_budget(m: u64, n: usize, budget: u64) -> Result<()> {
    let leaves = (m as f64).powi(n as i32);
    if leaves > budget as f64 {
        return Err(Error::Budget { requested: leaves, budget: budget as f64 });
    }
    Ok(())
}

fn check_args(m: u64, n: usize, s: f64, c: f64) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Domain(format!("need M >= 1 and n >= 1, got M = {m}, n = {n}")));
    }
    if !(0.0..=1.0).contains(&s) || c.is_nan() || c < 0.0 {
        return Err(Error::Domain(format!("need 0 <= s <= 1 and c >= 0, got s = {s}, c = {c}")));
    }
    Ok(())
}

/// Sum of `q_n^{-2s}` over the words below the node `(q_{k-1}, q_k)`.
fn descend(m: u64, left: usize, q_prev: f64, q: f64, s2: f64, acc: &mut Acc) {
    if left == 0 {
        acc.add(q.powf(-s2));
        return;
    }
    for a in 1..=m {
        descend(m, left - 1, q, a as f64 * q + q_prev, s2, acc);
    }
}

/// `ln sum_{w in {1..M}^n} e^{-n c} q_n(w)^{-2s}`.
pub fn wordsum(m: u64, n: usize, s: f64, c: f64) -> Result<f64> {
    wordsum_with_budget(m, n, s, c, DEFAULT_BUDGET)
}

pub fn wordsum_with_budget(m: u64, n: usize, s: f64, c: f64, budget: u64) -> Result<f64> {
    check_args(m, n, s, c)?;
    check_budget(m, n, budget)?;
    let s2 = 2.0 * s;
    // first digit a gives (q_0, q_1) = (1, a)
    let parts: Vec<Acc> = (1..=m)
        .into_par_iter()
        .map(|a| {
            let mut acc = Acc::default();
            descend(m, n - 1, 1.0, a as f64, s2, &mut acc);
            acc
        })
        .collect();
    let mut total = Acc::default();
    for p in parts {
        total.merge(p);
    }
    Ok(total.value().ln() - n as f64 * c)
}

/// `(L^n 1)(x)` for `(L f)(x) = sum_{a <= M} (a + x)^{-2s} f(1 / (a + x))`,
/// evaluated by recursion on points; no continuants are involved.
pub fn transfer_iterate(m: u64, n: usize, s: f64, x: f64) -> Result<f64> {
    check_args(m, n.max(1), s, 0.0)?;
    check_budget(m, n, DEFAULT_BUDGET)?;
    fn go(m: u64, k: usize, s2: f64, x: f64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let mut acc = Acc::default();
        for a in 1..=m {
            let y = a as f64 + x;
            acc.add(y.powf(-s2) * go(m, k - 1, s2, 1.0 / y));
        }
        acc.value()
    }
    if n == 0 {
        return Ok(1.0);
    }
    let s2 = 2.0 * s;
    let parts: Vec<f64> = (1..=m)
        .into_par_iter()
        .map(|a| {
            let y = a as f64 + x;
            y.powf(-s2) * go(m, n - 1, s2, 1.0 / y)
        })
        .collect();
    let mut acc = Acc::default();
    for p in parts {
        acc.add(p);
    }
    Ok(acc.value())
}

/// Pressure estimate from the ratios `ln W_n - ln W_{n-1}`, Aitken-accelerated.
///
/// Returns the estimate and the size of the last correction as an error proxy.
pub fn extrapolate_pressure(m: u64, n_max: usize, s: f64) -> Result<(f64, f64)> {
    if n_max < 3 {
        return Err(Error::Domain(format!("extrapolation needs depth >= 3, got {n_max}")));
    }
    let logs = (1..=n_max).map(|n| wordsum(m, n, s, 0.0)).collect::<Result<Vec<_>>>()?;
    let mut d = vec![logs[0]];
    d.extend(logs.windows(2).map(|w| w[1] - w[0]));
    let k = d.len();
    let (a, b, c) = (d[k - 3], d[k - 2], d[k - 1]);
    let denom = c - 2.0 * b + a;
    let accel = if denom.abs() > 1e-300 && ((c - b) * (b - a)) != 0.0 { c - (c - b) * (c - b) / denom } else { c };
    Ok((accel, (accel - c).abs().max((c - b).abs() * 1e-3)))
}
