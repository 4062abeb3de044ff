//! Statistical checks of the digit sampler and the hit experiment.

use wpq::growth::GrowthExpr;
use wpq::mc::{mc_experiment, sample_digits, DigitSampler, McConfig};
use wpq::tails::Measure;
use wpq::Weights;

/// 0.999 quantile of the chi-square law with 20 degrees of freedom.
const CHI2_20_999: f64 = 45.315;

#[test]
fn first_digit_chi_square() {
    let n = 100_000u64;
    for base in [Measure::Lebesgue, Measure::Gauss] {
        let s = DigitSampler::new(base, 77);
        let mut counts = [0u64; 21];
        for id in 0..n {
            let a = sample_digits(&s, id, 1).unwrap().digits()[0];
            counts[(a.min(21) - 1) as usize] += 1;
        }
        // cylinder masses of {a = k} for k <= 20 and of {a > 20}
        let p = |k: f64| match base {
            Measure::Lebesgue => 1.0 / (k * (k + 1.0)),
            Measure::Gauss => (1.0 + 1.0 / (k * (k + 2.0))).log2(),
        };
        let tail = match base {
            Measure::Lebesgue => 1.0 / 21.0,
            Measure::Gauss => (22.0f64 / 21.0).log2(),
        };
        let chi2: f64 = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let e = n as f64 * if i < 20 { p(i as f64 + 1.0) } else { tail };
                (c as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < CHI2_20_999, "{base}: chi-square {chi2}");
    }
}

#[test]
fn second_digit_follows_the_measure() {
    // Gauss invariance: a_2 has the same law as a_1
    let s = DigitSampler::new(Measure::Gauss, 3);
    let n = 100_000;
    let ones = (0..n).filter(|&id| sample_digits(&s, id, 2).unwrap().digits()[1] == 1).count();
    let freq = ones as f64 / n as f64;
    assert!((freq - (4.0f64 / 3.0).log2()).abs() < 0.01, "{freq}");
}

#[test]
fn permuted_exponents_agree_statistically() {
    let run = |t: &str, seed| {
        let cfg = McConfig::new(t.parse::<Weights>().unwrap(), GrowthExpr::poly(2.0), Measure::Gauss, (50, 150), 2000, seed);
        mc_experiment(&cfg).unwrap()
    };
    let a = run("2,1", 1);
    let b = run("1,2", 2);
    let sigma = (a.hit_prob_sigma.powi(2) + b.hit_prob_sigma.powi(2)).sqrt();
    assert!(
        (a.empirical_hit_prob - b.empirical_hit_prob).abs() <= 4.0 * sigma,
        "{} vs {} (sigma {sigma})",
        a.empirical_hit_prob,
        b.empirical_hit_prob
    );
}

#[test]
fn gauss_mean_hits_inside_analytic_bracket() {
    // under the invariant measure the expected hit count is the bracket itself
    let cfg = McConfig::new(Weights::ones(2).unwrap(), GrowthExpr::poly(1.0), Measure::Gauss, (10, 400), 2000, 9);
    let s = mc_experiment(&cfg).unwrap();
    let b = &s.analytic_bracket;
    let slack = 0.1 * b.hi;
    assert!(b.lo - slack <= s.mean_hit_count && s.mean_hit_count <= b.hi + slack, "{} vs {b:?}", s.mean_hit_count);
}
