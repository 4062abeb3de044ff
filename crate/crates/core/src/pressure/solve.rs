//! Root of the pressure equation `P(T, -s ln|T'| - f(s) ln B) = 0`.

use super::ffun::FSpec;
use super::spectral::{pressure_spectral, PressureValue, DEFAULT_GRID};
use super::wordsum::wordsum;
use super::Alphabet;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Largest alphabet in the finite schedule of [`s_of_b`].
pub const DEFAULT_MAX_ALPHABET: u64 = 1 << 16;

/// How the pressure is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Transfer operator on a Chebyshev grid of the given size.
    Spectral { grid: usize },
    /// `(1/n) ln` of the word sum at a fixed depth.
    WordSum { depth: usize },
}

impl Default for Engine {
    fn default() -> Self {
        Self::Spectral { grid: DEFAULT_GRID }
    }
}

/// Pressure of `-s ln|T'| - c` with the chosen engine.
pub fn pressure(alphabet: Alphabet, s: f64, c: f64, engine: Engine) -> Result<PressureValue> {
    match engine {
        Engine::Spectral { grid } => pressure_spectral(alphabet, s, c, grid),
        Engine::WordSum { depth } => {
            let Alphabet::Finite(m) = alphabet else {
                return Err(Error::Config("word sums need a finite alphabet".into()));
            };
            let v = wordsum(m, depth, s, 0.0)? / depth as f64 - c;
            Ok(PressureValue { value: v, abs_error: 8.0 * f64::EPSILON * v.abs(), residual: 0.0, iterations: depth, grid: 0 })
        }
    }
}

/// A root located by bisection: `lo <= root <= hi` with `hi - lo <= tol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub s: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
    /// Largest engine error seen along the way.
    pub pressure_error: f64,
}

/// Solve `P(s) = f(s) ln B` for `s`.
///
/// The left side decreases and the right side increases in `s`, so the root
/// is unique. Finite alphabets bisect on `[0, 1]`; the full alphabet bisects
/// on `(1/2, 1]`, moving the left end toward 1/2 until the sign is positive.
pub fn solve_s(alphabet: Alphabet, b: f64, f: &FSpec, tol: f64, engine: Engine) -> Result<Root> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!("B must be finite and > 1, got {b}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let ln_b = (b - 1.0).ln_1p();
    let mut evaluations = 0;
    let mut worst = 0.0f64;
    let mut eval = |s: f64| -> Result<f64> {
        evaluations += 1;
        let p = pressure(alphabet, s, f.eval(s) * ln_b, engine)?;
        worst = worst.max(p.abs_error);
        Ok(p.value)
    };
    let (mut lo, mut hi) = match alphabet {
        Alphabet::Finite(_) => {
            let f0 = eval(0.0)?;
            if f0 == 0.0 {
                return Ok(Root { s: 0.0, lo: 0.0, hi: 0.0, evaluations, pressure_error: worst });
            }
            if f0 < 0.0 {
                return Err(Error::Config(format!("pressure equation is negative at s = 0 ({f0})")));
            }
            (0.0, 1.0)
        }
        Alphabet::Full => {
            let mut delta = 0.25;
            loop {
                if eval(0.5 + delta)? > 0.0 {
                    break;
                }
                delta *= 0.5;
                if delta < 1e-9 {
                    return Err(Error::Config("pressure equation has no positive value above s = 1/2".into()));
                }
            }
            (0.5 + delta, 1.0)
        }
    };
    if eval(hi)? > 0.0 {
        return Err(Error::Config(format!("pressure equation is positive at s = {hi}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root { s: 0.5 * (lo + hi), lo, hi, evaluations, pressure_error: worst })
}

/// Root of the pressure equation over all digits, with the finite-alphabet
/// roots that approach it from below.
#[derive(Clone, Debug, PartialEq)]
pub struct SofB {
    pub value: f64,
    pub abs_error: f64,
    /// `(M, root over {1..M})` for `M = 2, 4, 8, ...`.
    pub schedule: Vec<(u64, f64)>,
    /// Root over the full alphabet, when it could be computed.
    pub full_alphabet: Option<f64>,
    /// Set when only the finite schedule is available; `value` is then a lower bound.
    pub lower_bound_only: bool,
}

/// `s(B)` as the supremum of the finite-alphabet roots.
///
/// The schedule `M = 2, 4, 8, ...` runs until successive roots differ by less
/// than `tol / 2` or `max_alphabet` is reached; it must be nondecreasing. The
/// reported value is the full-alphabet root, which bounds the schedule from
/// above; if that solve fails, the last schedule root is returned as a lower
/// bound with the last increment as its error.
pub fn s_of_b(b: f64, f: &FSpec, tol: f64, grid: usize, max_alphabet: u64) -> Result<SofB> {
    let engine = Engine::Spectral { grid };
    let mut schedule: Vec<(u64, f64)> = Vec::new();
    let mut m = 2u64;
    while m <= max_alphabet {
        let r = solve_s(Alphabet::Finite(m), b, f, tol, engine)?;
        if let Some(&(pm, prev)) = schedule.last() {
            if r.s < prev - 2.0 * tol {
                return Err(Error::Config(format!(
                    "finite-alphabet roots decrease: s({pm}) = {prev}, s({m}) = {}",
                    r.s
                )));
            }
            if (r.s - prev).abs() < tol / 2.0 {
                schedule.push((m, r.s));
                break;
            }
        }
        schedule.push((m, r.s));
        m *= 2;
    }
    let last_increment = match schedule.as_slice() {
        [.., (_, a), (_, b)] => (b - a).abs(),
        _ => f64::INFINITY,
    };
    let last = schedule.last().map_or(f64::NAN, |&(_, s)| s);
    match solve_s(Alphabet::Full, b, f, tol, engine) {
        Ok(full) => {
            if let Some(&(m, s)) = schedule.last() {
                if s > full.hi + 2.0 * tol {
                    return Err(Error::Config(format!("root over {{1..{m}}} ({s}) exceeds the full-alphabet root ({})", full.s)));
                }
            }
            Ok(SofB {
                value: full.s,
                abs_error: 0.5 * (full.hi - full.lo) + full.pressure_error,
                schedule,
                full_alphabet: Some(full.s),
                lower_bound_only: false,
            })
        }
        Err(_) => Ok(SofB { value: last, abs_error: last_increment, schedule, full_alphabet: None, lower_bound_only: true }),
    }
}

#[cfg(test)]
mod tests {
    use super::super::ffun::FKind;
    use super::*;

    fn pair11() -> FSpec {
        FSpec::new("1,1".parse().unwrap(), FKind::Pair).unwrap()
    }

    #[test]
    fn depth_one_root() {
        // oracle: bisection on 4^{-s^2} (1 + 4^{-s}) = 1
        let h = |s: f64| 4f64.powf(-s * s) * (1.0 + 4f64.powf(-s)) - 1.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = solve_s(Alphabet::Finite(2), 4.0, &pair11(), 1e-10, Engine::WordSum { depth: 1 }).unwrap();
        assert!((r.s - lo).abs() < 1e-9);
        assert!((r.s - 0.531).abs() < 1e-3);
    }

    #[test]
    fn root_decreases_in_b() {
        let e = Engine::default();
        let a = solve_s(Alphabet::Finite(8), 16.0, &pair11(), 1e-8, e).unwrap();
        let b = solve_s(Alphabet::Finite(8), 2.0, &pair11(), 1e-8, e).unwrap();
        assert!(a.s < b.s);
    }

    #[test]
    fn b_near_one_recovers_the_plain_root() {
        // root of P(-s ln|T'|) = 0 over {1, 2}
        let e = Engine::default();
        let plain = {
            let (mut lo, mut hi) = (0.0, 1.0);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if pressure_spectral(Alphabet::Finite(2), mid, 0.0, DEFAULT_GRID).unwrap().value > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let r = solve_s(Alphabet::Finite(2), 1.0 + 1e-9, &pair11(), 1e-9, e).unwrap();
        assert!((r.s - plain).abs() < 1e-7);
        // the known dimension of the digits {1, 2} set
        assert!((plain - 0.531280506).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = Engine::default();
        assert!(solve_s(Alphabet::Finite(2), 1.0, &pair11(), 1e-8, e).is_err());
        assert!(solve_s(Alphabet::Finite(2), 4.0, &pair11(), 0.0, e).is_err());
        assert!(pressure(Alphabet::Full, 0.7, 0.0, Engine::WordSum { depth: 3 }).is_err());
    }

    #[test]
    fn schedule_is_monotone_and_bounded() {
        let r = s_of_b(4.0, &pair11(), 1e-8, DEFAULT_GRID, 64).unwrap();
        assert!(r.schedule.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(r.schedule.last().unwrap().1 <= r.value);
        assert!(!r.lower_bound_only);
        assert!(r.value > 0.5 && r.value < 1.0);
    }
}
