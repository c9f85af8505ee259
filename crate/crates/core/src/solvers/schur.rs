use serde::{Deserialize, Serialize};

use super::ObservedMatrix;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, solve, DenseMatrix};

/// Pivot blocks with a larger condition number are treated as singular.
const MAX_CONDITION: f64 = 1e12;

/// Partially filled grid: values plus a known-mask.
struct Grid {
    values: DenseMatrix,
    known: Vec<bool>,
    n2: usize,
}

impl Grid {
    fn from_observed(m: &ObservedMatrix) -> Self {
        let (n1, n2) = m.shape();
        let mut known = vec![false; n1 * n2];
        for &(i, j) in m.pattern.entries() {
            known[i * n2 + j] = true;
        }
        Grid {
            values: m.zero_filled(),
            known,
            n2,
        }
    }

    fn is_known(&self, i: usize, j: usize) -> bool {
        self.known[i * self.n2 + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[(i, j)] = v;
        self.known[i * self.n2 + j] = true;
    }

    fn block_known(&self, rows: &[usize], cols: &[usize]) -> bool {
        rows.iter().all(|&i| cols.iter().all(|&j| self.is_known(i, j)))
    }
}

fn condition(a: &DenseMatrix) -> Result<f64> {
    let sv = singular_values(a)?;
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// `M[k, I2] · M[I1, I2]⁻¹ · M[I1, l]`, the value that makes the bordered
/// minor rank deficient.
fn schur_value(g: &Grid, k: usize, l: usize, i1: &[usize], i2: &[usize]) -> Result<f64> {
    let a = g.values.select(i1, i2);
    let cond = condition(&a)?;
    if cond > MAX_CONDITION {
        return Err(Error::SingularMinor { row: k, col: l, condition: cond });
    }
    let col: Vec<f64> = i1.iter().map(|&i| g.values[(i, l)]).collect();
    let x = solve(&a, &col)?;
    Ok(i2.iter().zip(&x).map(|(&j, xj)| g.values[(k, j)] * xj).sum())
}

/// Completes the missing entry `(k, l)` from an `r × r` observed block
/// `M[I1, I2]` bordered by observed `M[k, I2]` and `M[I1, l]`.
pub fn schur_complete_entry(
    m: &ObservedMatrix,
    k: usize,
    l: usize,
    i1: &[usize],
    i2: &[usize],
) -> Result<f64> {
    let (n1, n2) = m.shape();
    if k >= n1 || l >= n2 || i1.iter().any(|&i| i >= n1) || i2.iter().any(|&j| j >= n2) {
        return Err(Error::InvalidArgument("index outside the grid".into()));
    }
    if i1.is_empty() || i1.len() != i2.len() {
        return Err(Error::InvalidArgument(format!(
            "index sets must have equal positive size, got {} and {}",
            i1.len(),
            i2.len()
        )));
    }
    if i1.contains(&k) || i2.contains(&l) {
        return Err(Error::InvalidArgument("pivot block must exclude the target row and column".into()));
    }
    let g = Grid::from_observed(m);
    if !g.block_known(i1, i2) || !g.block_known(&[k], i2) || !g.block_known(i1, &[l]) {
        return Err(Error::Unobserved(format!(
            "pivot block for ({k}, {l}) is not fully observed"
        )));
    }
    schur_value(&g, k, l, i1, i2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    /// Observed entries, filled entries, zeros elsewhere.
    pub y: DenseMatrix,
    /// Entries filled by the cascade, in fill order.
    pub filled: Vec<(usize, usize)>,
    /// Entries of Ω^c left unfilled.
    pub unfilled: Vec<(usize, usize)>,
    pub passes: usize,
}

impl CascadeResult {
    pub fn complete(&self) -> bool {
        self.unfilled.is_empty()
    }
}

/// Repeatedly fills missing entries with [`schur_complete_entry`] using
/// already known values until no further entry admits a valid pivot block.
///
/// Pivot search is exhaustive (best conditioned block) for `r ≤ 2` and
/// greedy for larger `r`; at most `max_subset_search` candidates are tried
/// per entry.
pub fn schur_cascade(m: &ObservedMatrix, r: usize, max_subset_search: usize) -> Result<CascadeResult> {
    let (n1, n2) = m.shape();
    if r == 0 || r > n1.min(n2) - 1 {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..{}", n1.min(n2))));
    }
    let mut g = Grid::from_observed(m);
    let mut pending = m.pattern.complement();
    let mut filled = Vec::new();
    let mut passes = 0;
    loop {
        passes += 1;
        let mut progress = false;
        let mut still = Vec::new();
        for &(k, l) in &pending {
            let pivot = if r <= 2 {
                exhaustive_pivot(&g, k, l, r, max_subset_search)?
            } else {
                greedy_pivot(&g, k, l, r, max_subset_search)?
            };
            match pivot {
                Some((i1, i2)) => match schur_value(&g, k, l, &i1, &i2) {
                    Ok(v) => {
                        g.set(k, l, v);
                        filled.push((k, l));
                        progress = true;
                    }
                    Err(Error::SingularMinor { .. }) => still.push((k, l)),
                    Err(e) => return Err(e),
                },
                None => still.push((k, l)),
            }
        }
        pending = still;
        if !progress || pending.is_empty() {
            break;
        }
    }
    Ok(CascadeResult {
        y: g.values,
        filled,
        unfilled: pending,
        passes,
    })
}

/// Candidate rows (known in column `l`) and columns (known in row `k`).
fn candidates(g: &Grid, k: usize, l: usize) -> (Vec<usize>, Vec<usize>) {
    let n1 = g.values.rows();
    let rows = (0..n1).filter(|&i| i != k && g.is_known(i, l)).collect();
    let cols = (0..g.n2).filter(|&j| j != l && g.is_known(k, j)).collect();
    (rows, cols)
}

type Pivot = Option<(Vec<usize>, Vec<usize>)>;

fn exhaustive_pivot(g: &Grid, k: usize, l: usize, r: usize, cap: usize) -> Result<Pivot> {
    let (rows, cols) = candidates(g, k, l);
    if rows.len() < r || cols.len() < r {
        return Ok(None);
    }
    let row_sets = combinations(&rows, r);
    let col_sets = combinations(&cols, r);
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    let mut tried = 0;
    'outer: for i1 in &row_sets {
        for i2 in &col_sets {
            if tried >= cap {
                break 'outer;
            }
            if !g.block_known(i1, i2) {
                continue;
            }
            tried += 1;
            let cond = condition(&g.values.select(i1, i2))?;
            if cond <= MAX_CONDITION && best.as_ref().is_none_or(|b| cond < b.0) {
                best = Some((cond, i1.clone(), i2.clone()));
            }
        }
    }
    Ok(best.map(|(_, a, b)| (a, b)))
}

/// Builds the pivot block one row/column pair at a time, choosing the pair
/// with the largest Schur-complement pivot among fully known extensions.
fn greedy_pivot(g: &Grid, k: usize, l: usize, r: usize, cap: usize) -> Result<Pivot> {
    let (rows, cols) = candidates(g, k, l);
    if rows.len() < r || cols.len() < r {
        return Ok(None);
    }
    let scale = g.values.max_abs().max(f64::MIN_POSITIVE);
    let mut i1: Vec<usize> = Vec::new();
    let mut i2: Vec<usize> = Vec::new();
    let mut tried = 0;
    for _ in 0..r {
        let inverse_apply = |b: &[f64]| -> Result<Vec<f64>> {
            if i1.is_empty() {
                Ok(Vec::new())
            } else {
                solve(&g.values.select(&i1, &i2), b)
            }
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for &i in rows.iter().filter(|i| !i1.contains(i)) {
            if !g.block_known(&[i], &i2) {
                continue;
            }
            let row_part: Vec<f64> = i2.iter().map(|&j| g.values[(i, j)]).collect();
            for &j in cols.iter().filter(|j| !i2.contains(j)) {
                if tried >= cap {
                    break;
                }
                if !g.is_known(i, j) || !g.block_known(&i1, &[j]) {
                    continue;
                }
                tried += 1;
                let col_part: Vec<f64> = i1.iter().map(|&a| g.values[(a, j)]).collect();
                let x = inverse_apply(&col_part)?;
                let corr: f64 = row_part.iter().zip(&x).map(|(a, b)| a * b).sum();
                let pivot = (g.values[(i, j)] - corr).abs();
                if best.is_none_or(|b| pivot > b.0) {
                    best = Some((pivot, i, j));
                }
            }
        }
        match best {
            Some((pivot, i, j)) if pivot > 1e-12 * scale => {
                i1.push(i);
                i2.push(j);
            }
            _ => return Ok(None),
        }
    }
    Ok(Some((i1, i2)))
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&t| items[t]).collect());
        let mut t = k;
        while t > 0 && idx[t - 1] == n - k + t - 1 {
            t -= 1;
        }
        if t == 0 {
            return out;
        }
        idx[t - 1] += 1;
        for s in t..k {
            idx[s] = idx[s - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{example_one_blocks, off_diagonal, staircase, ObservationPattern};
    use crate::random::{gaussian_matrix, substream};
    use crate::solvers::rank_one_complete;

    fn low_rank(n1: usize, n2: usize, r: usize, seed: u64) -> DenseMatrix {
        let mut rng = substream(seed, 0);
        gaussian_matrix(n1, r, &mut rng).matmul(&gaussian_matrix(r, n2, &mut rng))
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(&[1, 2, 3, 4], 2).len(), 6);
        assert_eq!(combinations(&[5, 6, 7], 3), vec![vec![5, 6, 7]]);
        assert!(combinations(&[1], 2).is_empty());
    }

    #[test]
    fn rank_one_ratio_and_identity_block() {
        let p = ObservationPattern::new(2, 2, vec![(0, 1), (1, 0), (1, 1)]).unwrap();
        let m = ObservedMatrix::new(p, vec![2.0, 3.0, 6.0]).unwrap();
        assert_eq!(schur_complete_entry(&m, 0, 0, &[1], &[1]).unwrap(), 1.0);

        let r = 3;
        let n = r + 1;
        let p = ObservationPattern::from_predicate(n, n, |i, j| !(i == 0 && j == 0)).unwrap();
        let y = DenseMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 1) | (1, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ if i == j => 1.0,
            _ => 0.0,
        });
        let m = ObservedMatrix::from_dense(p, &y).unwrap();
        assert_eq!(schur_complete_entry(&m, 0, 0, &[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
    }

    #[test]
    fn recovers_generating_entry() {
        let y = low_rank(6, 6, 2, 1);
        let m = ObservedMatrix::from_dense(off_diagonal(6).unwrap(), &y).unwrap();
        let v = schur_complete_entry(&m, 0, 0, &[1, 2], &[3, 4]).unwrap();
        assert!((v - y[(0, 0)]).abs() < 1e-8 * y[(0, 0)].abs().max(1.0));
    }

    #[test]
    fn singular_block_rejected() {
        let p = ObservationPattern::new(2, 2, vec![(0, 1), (1, 0), (1, 1)]).unwrap();
        let m = ObservedMatrix::new(p, vec![2.0, 3.0, 0.0]).unwrap();
        assert!(matches!(
            schur_complete_entry(&m, 0, 0, &[1], &[1]),
            Err(Error::SingularMinor { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn example_one_cascade_fills_everything() {
        for r in [1, 2, 3] {
            let y = low_rank(7, 8, r, 10 + r as u64);
            let m = ObservedMatrix::from_dense(example_one_blocks(7, 8, r).unwrap(), &y).unwrap();
            let res = schur_cascade(&m, r, 10_000).unwrap();
            assert!(res.complete(), "r = {r}");
            assert!(res.y.sub(&y).max_abs() < 1e-8 * y.max_abs());
            for (&(i, j), &v) in m.pattern.entries().iter().zip(&m.values) {
                assert_eq!(res.y[(i, j)], v);
            }
        }
    }

    #[test]
    fn rank_one_cascade_matches_propagation() {
        let y = DenseMatrix::from_fn(5, 5, |i, j| (i as f64 + 1.0) * (0.5 + j as f64));
        let m = ObservedMatrix::from_dense(staircase(5).unwrap(), &y).unwrap();
        let res = schur_cascade(&m, 1, 1000).unwrap();
        assert!(res.complete());
        let exact = rank_one_complete(&m).unwrap();
        assert!(res.y.sub(&exact).max_abs() < 1e-9 * exact.max_abs());
    }

    #[test]
    fn nothing_fillable() {
        // A lone observed diagonal gives no 2x2 pivot anywhere.
        let p = ObservationPattern::from_predicate(3, 3, |i, j| i == j).unwrap();
        let m = ObservedMatrix::new(p, vec![1.0, 2.0, 3.0]).unwrap();
        let res = schur_cascade(&m, 1, 100).unwrap();
        assert!(res.filled.is_empty());
        assert_eq!(res.unfilled.len(), 6);
        assert_eq!(res.y, m.zero_filled());
    }
}
