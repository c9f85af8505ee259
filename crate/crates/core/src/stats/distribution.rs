//! Chi-square distribution and the Kolmogorov–Smirnov goodness-of-fit test.

use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 10_000;

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Series for `P(a, x)`, accurate for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    let mut ap = a;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz continued fraction for `Q(a, x)`, accurate for `x ≥ a + 1`.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// Central chi-square CDF.
pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    gamma_p(0.5 * df, 0.5 * x)
}

/// Upper tail `1 − chi2_cdf(x, df)`, computed without cancellation.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

/// Inverse CDF by bisection on a bracketing interval.
pub fn chi2_quantile(p: f64, df: f64) -> f64 {
    assert!((0.0..1.0).contains(&p), "probability {p} outside [0, 1)");
    if p == 0.0 {
        return 0.0;
    }
    let mut hi = df.max(1.0);
    while chi2_cdf(hi, df) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sup |F_n − F|`.
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Asymptotic Kolmogorov tail `Pr(K > λ)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test of `sample` against `cdf`, with the
/// Stephens small-sample correction of the statistic.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let n = sample.len();
    assert!(n > 0, "empty sample");
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    }
    let root = nf.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn closed_forms() {
        assert_eq!(chi2_cdf(0.0, 3.0), 0.0);
        for x in [0.1, 1.0, 2.0, 5.0, 10.0] {
            assert_abs_diff_eq!(chi2_cdf(x, 2.0), 1.0 - (-x / 2.0).exp(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(chi2_cdf(1.0, 1.0), 0.682_689_492_137_085_9, epsilon = 1e-10);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-13);
    }

    #[test]
    fn matches_reference_implementation() {
        for df in [1.0, 3.0, 5.0, 17.0, 131.0, 174.0] {
            let reference = ChiSquared::new(df).unwrap();
            for x in [0.01, 0.5, 1.0, 4.0, 10.0, 50.0, 150.0, 200.0, 400.0] {
                assert_abs_diff_eq!(chi2_cdf(x, df), reference.cdf(x), epsilon = 1e-10);
                assert_abs_diff_eq!(chi2_sf(x, df), reference.sf(x), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for df in [1.0, 5.0, 131.0] {
            for p in [0.01, 0.5, 0.95, 0.999] {
                assert_abs_diff_eq!(chi2_cdf(chi2_quantile(p, df), df), p, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ks_detects_mismatch() {
        let uniform: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
        let good = ks_test(&uniform, |x| x.clamp(0.0, 1.0));
        assert!(good.statistic < 0.002 && good.p_value > 0.99);
        let bad = ks_test(&uniform, |x| (x * x).clamp(0.0, 1.0));
        assert!(bad.p_value < 1e-10);
    }

    proptest! {
        #[test]
        fn monotone_and_ordered_in_df(x in 0.0f64..300.0, dx in 0.0f64..10.0, df in 1u32..200) {
            let df = df as f64;
            prop_assert!(chi2_cdf(x + dx, df) >= chi2_cdf(x, df) - 1e-15);
            prop_assert!(chi2_cdf(x, df) >= chi2_cdf(x, df + 2.0) - 1e-15);
        }
    }
}
