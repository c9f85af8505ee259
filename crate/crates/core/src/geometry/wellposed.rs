use serde::{Deserialize, Serialize};

use super::{complements, resolve_tol, Complements};
use crate::error::{Error, Result};
use crate::linalg::{kron_column, singular_values, DenseMatrix};
use crate::pattern::{is_reducible, ObservationPattern};

/// Which rule settled the verdict of a [`WellPosednessReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// Every entry observed: Ω^c is empty.
    Vacuous,
    /// `(n1 − r)(n2 − r) < |Ω^c|`, so K cannot have full column rank.
    DimensionCount,
    /// Some row or column holds fewer than `r` observations.
    MinCount,
    /// Ω splits into several connected components.
    Reducible,
    /// Column rank of the Kronecker matrix K.
    KroneckerRank,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellPosednessOptions {
    /// Relative rank threshold for both `Y` and `K`.
    pub tol: f64,
    /// Compute rank(K) even when a necessary condition already fails.
    pub force_rank_test: bool,
}

impl Default for WellPosednessOptions {
    fn default() -> Self {
        WellPosednessOptions {
            tol: super::DEFAULT_RANK_TOL,
            force_rank_test: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPosednessReport {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub rank: usize,
    /// Column rank of K; `None` when a cheaper necessary condition decided.
    pub rank_of_k: Option<usize>,
    /// `n1·n2 − m`, the number of columns of K.
    pub required_rank: usize,
    pub well_posed: bool,
    pub dimension_ok: bool,
    pub min_counts_ok: bool,
    pub irreducible: bool,
    /// Some row or column has no observation.
    pub empty_lines: bool,
    pub decided_by: Decision,
    /// σ_min(K)/σ_max(K) when K was factorized; the margin of the verdict.
    pub k_sigma_ratio: Option<f64>,
    pub tol_used: f64,
}

/// Builds the `(n1 − r)(n2 − r) × |Ω^c|` matrix whose column for
/// `(i, j) ∈ Ω^c` is `G[j, :]ᵀ ⊗ F[:, i]`.
pub fn kronecker_matrix(c: &Complements, p: &ObservationPattern) -> DenseMatrix {
    let missing = p.complement();
    let rows = c.f.rows() * c.g.cols();
    let mut k = DenseMatrix::zeros(rows, missing.len());
    for (col, &(i, j)) in missing.iter().enumerate() {
        let column = kron_column(c.g.row(j), &c.f.col(i));
        for (row, v) in column.into_iter().enumerate() {
            k[(row, col)] = v;
        }
    }
    k
}

/// Well-posedness of `Y` (rank `r`) for completion from the entries in `p`,
/// with default options.
pub fn wellposedness_check(
    y: &DenseMatrix,
    r: usize,
    p: &ObservationPattern,
    tol: f64,
) -> Result<WellPosednessReport> {
    wellposedness_check_with(
        y,
        r,
        p,
        &WellPosednessOptions {
            tol: resolve_tol(tol),
            force_rank_test: false,
        },
    )
}

/// Certifies that no nonzero matrix supported on Ω^c lies in the tangent
/// space at `Y`, i.e. the columns of K are linearly independent.
///
/// Necessary conditions (dimension count, per-line counts, irreducibility)
/// are evaluated first; unless `force_rank_test` is set, a failing one
/// decides the verdict without factorizing K.
pub fn wellposedness_check_with(
    y: &DenseMatrix,
    r: usize,
    p: &ObservationPattern,
    opts: &WellPosednessOptions,
) -> Result<WellPosednessReport> {
    let (n1, n2) = (p.n1(), p.n2());
    if y.shape() != (n1, n2) {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but the pattern grid is {n1}x{n2}",
            y.rows(),
            y.cols()
        )));
    }
    let tol = resolve_tol(opts.tol);
    let c = complements(y, r, tol)?;
    let required = p.complement_len();
    let dimension_ok = (n1 - r) * (n2 - r) >= required;
    let min_counts_ok = p.min_count_check(r);
    let red = is_reducible(p);

    let mut report = WellPosednessReport {
        n1,
        n2,
        m: p.m(),
        rank: r,
        rank_of_k: None,
        required_rank: required,
        well_posed: false,
        dimension_ok,
        min_counts_ok,
        irreducible: !red.reducible,
        empty_lines: red.has_empty_lines(),
        decided_by: Decision::KroneckerRank,
        k_sigma_ratio: None,
        tol_used: tol,
    };

    if required == 0 {
        report.rank_of_k = Some(0);
        report.well_posed = true;
        report.decided_by = Decision::Vacuous;
        return Ok(report);
    }
    let necessary = if !dimension_ok {
        Some(Decision::DimensionCount)
    } else if !min_counts_ok {
        Some(Decision::MinCount)
    } else if red.reducible {
        Some(Decision::Reducible)
    } else {
        None
    };
    if let Some(rule) = necessary {
        report.decided_by = rule;
        if !opts.force_rank_test {
            return Ok(report);
        }
    }

    let k = kronecker_matrix(&c, p);
    let sv = singular_values(&k)?;
    let s1 = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > tol * s1).count();
    report.rank_of_k = Some(rank);
    if sv.len() == required && s1 > 0.0 {
        report.k_sigma_ratio = Some(sv[required - 1] / s1);
    }
    report.well_posed = rank == required;
    if necessary.is_none() {
        report.decided_by = Decision::KroneckerRank;
    }
    Ok(report)
}

/// Dual form of the certificate: the observed coordinate directions together
/// with the normal space `{f gᵀ}` at `Y` must span all of ℝ^{n1×n2}.
pub fn duality_check(
    y: &DenseMatrix,
    r: usize,
    p: &ObservationPattern,
    tol: f64,
) -> Result<bool> {
    let tol = resolve_tol(tol);
    let c = complements(y, r, tol)?;
    let (n1, n2) = (p.n1(), p.n2());
    let normal_dim = c.f.rows() * c.g.cols();
    let mut stacked = DenseMatrix::zeros(p.m() + normal_dim, n1 * n2);
    for (row, &(i, j)) in p.entries().iter().enumerate() {
        stacked[(row, i + j * n1)] = 1.0;
    }
    let mut row = p.m();
    for a in 0..c.f.rows() {
        for b in 0..c.g.cols() {
            for j in 0..n2 {
                for i in 0..n1 {
                    stacked[(row, i + j * n1)] = c.f[(a, i)] * c.g[(j, b)];
                }
            }
            row += 1;
        }
    }
    let sv = singular_values(&stacked)?;
    let s1 = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > tol * s1).count() == n1 * n2)
}
