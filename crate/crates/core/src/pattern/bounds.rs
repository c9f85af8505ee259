use serde::{Deserialize, Serialize};

use super::ObservationPattern;

/// Generic rank bound for an `n1 × n2` grid with `m` observations.
///
/// `r_value` is the smaller root of `r(n1 + n2 − r) = m`: ranks below it are
/// generically unattainable, ranks above it generically non-unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericBounds {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub r_value: f64,
    /// Smallest integer `r` with `r(n1 + n2 − r) ≥ m`; equals `⌈r_value⌉`
    /// without floating-point bumps at exact integers.
    pub r_ceil: usize,
}

impl GenericBounds {
    pub fn new(n1: usize, n2: usize, m: usize) -> Self {
        let half = (n1 + n2) as f64 / 2.0;
        let disc = (half * half - m as f64).max(0.0);
        // m / (half + √disc) is the same root without cancellation.
        let r_value = if m == 0 { 0.0 } else { m as f64 / (half + disc.sqrt()) };
        let r_value = r_value.min(n1.min(n2) as f64);
        let r_ceil = (0..=n1.min(n2))
            .find(|&r| manifold_dim(n1, n2, r) >= m)
            .unwrap_or(n1.min(n2));
        GenericBounds {
            n1,
            n2,
            m,
            r_value,
            r_ceil,
        }
    }

    /// Dimension `r(n1 + n2 − r)` of the rank-`r` manifold.
    pub fn manifold_dim(&self, r: usize) -> usize {
        manifold_dim(self.n1, self.n2, r)
    }

    /// `r(n1 + n2 − r) + n1·n2 − m`, the generic rank of the Jacobian of
    /// `(V, W, X) ↦ VWᵀ + X`.
    pub fn f_rm(&self, r: usize) -> usize {
        self.manifold_dim(r) + self.n1 * self.n2 - self.m
    }

    /// `m − r(n1 + n2 − r)`, negative when the model is saturated.
    pub fn degrees_of_freedom(&self, r: usize) -> i64 {
        self.m as i64 - self.manifold_dim(r) as i64
    }
}

pub(crate) fn manifold_dim(n1: usize, n2: usize, r: usize) -> usize {
    r * (n1 + n2 - r.min(n1 + n2))
}

pub fn generic_bound(p: &ObservationPattern) -> GenericBounds {
    GenericBounds::new(p.n1(), p.n2(), p.m())
}

/// Bound evaluated at the expected cardinality `n1·n2·p` of a Bernoulli(p)
/// sampling pattern.
pub fn estimated_bound(n1: usize, n2: usize, sampling_prob: f64) -> f64 {
    assert!(
        sampling_prob > 0.0 && sampling_prob <= 1.0,
        "sampling probability must lie in (0, 1]"
    );
    let half = (n1 + n2) as f64 / 2.0;
    let m = n1 as f64 * n2 as f64 * sampling_prob;
    let disc = (half * half - m).max(0.0);
    m / (half + disc.sqrt())
}

/// Generic rank bound for the minimum-rank factor analysis problem on a
/// `p × p` covariance matrix.
pub fn mrfa_bound(p_dim: usize) -> f64 {
    assert!(p_dim >= 1);
    let p = p_dim as f64;
    (2.0 * p + 1.0 - (8.0 * p + 1.0).sqrt()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_bound() {
        let b = GenericBounds::new(6, 6, 30);
        assert!((b.r_value - (6.0 - 6f64.sqrt())).abs() < 1e-12);
        assert_eq!(b.r_ceil, 4);
        assert_eq!(b.f_rm(3), 33);
    }

    #[test]
    fn large_square_bound() {
        let b = GenericBounds::new(1000, 1000, 20000);
        assert!((b.r_value - 10.05).abs() < 0.005, "{}", b.r_value);
        assert_eq!(b.r_ceil, 11);
    }

    #[test]
    fn full_observation_gives_min_dim() {
        for (n1, n2) in [(4, 4), (3, 7), (9, 2)] {
            let b = GenericBounds::new(n1, n2, n1 * n2);
            assert!((b.r_value - n1.min(n2) as f64).abs() < 1e-12);
            assert_eq!(b.r_ceil, n1.min(n2));
        }
    }

    #[test]
    fn exact_integer_root_not_bumped() {
        // m = r(n1 + n2 − r) exactly.
        let b = GenericBounds::new(40, 50, 10 * 80);
        assert_eq!(b.r_ceil, 10);
        assert!((b.r_value - 10.0).abs() < 1e-12);
    }

    #[test]
    fn estimated_bound_values() {
        assert!((estimated_bound(7, 5, 1.0) - 5.0).abs() < 1e-12);
        let v = estimated_bound(40, 50, 0.5);
        assert!((v - (45.0 - 1025f64.sqrt())).abs() < 1e-12);
        assert!((v - GenericBounds::new(40, 50, 1000).r_value).abs() < 1e-12);
        assert!(estimated_bound(40, 50, 1e-12) < 1e-9);
    }

    #[test]
    fn mrfa_values() {
        assert_eq!(mrfa_bound(6), 3.0);
        assert_eq!(mrfa_bound(1), 0.0);
        assert_eq!(mrfa_bound(10), 6.0);
    }
}
