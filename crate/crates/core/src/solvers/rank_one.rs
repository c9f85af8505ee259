use std::collections::VecDeque;

use super::ObservedMatrix;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::pattern::is_reducible;

const CONSISTENCY_TOL: f64 = 1e-9;

/// Exact rank-one completion by propagation.
///
/// Fixes `v₀ = 1` and walks the bipartite row/column graph of Ω breadth
/// first, setting `w_j = M_ij / v_i` and `v_i = M_ij / w_j` as entries are
/// reached. Every observed entry is then checked against `v_i w_j`.
pub fn rank_one_complete(m: &ObservedMatrix) -> Result<DenseMatrix> {
    let p = &m.pattern;
    let (n1, n2) = (p.n1(), p.n2());
    if let Some(k) = m.values.iter().position(|&x| x == 0.0) {
        let (row, col) = p.entries()[k];
        return Err(Error::ZeroObservation { row, col });
    }
    let red = is_reducible(p);
    if red.has_empty_lines() {
        return Err(Error::Unobserved(format!(
            "rows {:?}, columns {:?}",
            red.empty_rows, red.empty_cols
        )));
    }
    if red.reducible {
        return Err(Error::Reducible {
            components: red.component_count(),
        });
    }

    let mut v = vec![f64::NAN; n1];
    let mut w = vec![f64::NAN; n2];
    v[0] = 1.0;
    // Queue items: (is_row, index) whose value is already known.
    let mut queue = VecDeque::from([(true, 0usize)]);
    while let Some((is_row, a)) = queue.pop_front() {
        if is_row {
            for j in p.row_entries(a) {
                if w[j].is_nan() {
                    w[j] = m.get(a, j).expect("row entry observed") / v[a];
                    queue.push_back((false, j));
                }
            }
        } else {
            for i in p.col_entries(a) {
                if v[i].is_nan() {
                    v[i] = m.get(i, a).expect("column entry observed") / w[a];
                    queue.push_back((true, i));
                }
            }
        }
    }

    for (&(i, j), &observed) in p.entries().iter().zip(&m.values) {
        let propagated = v[i] * w[j];
        if (propagated - observed).abs() > CONSISTENCY_TOL * observed.abs() {
            return Err(Error::Inconsistent {
                row: i,
                col: j,
                observed,
                propagated,
            });
        }
    }
    Ok(DenseMatrix::from_fn(n1, n2, |i, j| v[i] * w[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{block_diagonal, staircase, ObservationPattern};
    use crate::random::substream;
    use rand::Rng;

    fn two_by_two(values: [f64; 3]) -> ObservedMatrix {
        let p = ObservationPattern::new(2, 2, vec![(0, 1), (1, 0), (1, 1)]).unwrap();
        ObservedMatrix::new(p, values.to_vec()).unwrap()
    }

    #[test]
    fn all_ones_and_ratio() {
        let y = rank_one_complete(&two_by_two([1.0, 1.0, 1.0])).unwrap();
        assert_eq!(y[(0, 0)], 1.0);
        let y = rank_one_complete(&two_by_two([2.0, 3.0, 6.0])).unwrap();
        assert_eq!(y[(0, 0)], 1.0);
    }

    #[test]
    fn staircase_exact_recovery() {
        let mut rng = substream(8, 0);
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(0.5..2.0) * if rng.random() { 1.0 } else { -1.0 }).collect();
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.5..2.0)).collect();
        let y = DenseMatrix::from_fn(4, 4, |i, j| v[i] * w[j]);
        let m = ObservedMatrix::from_dense(staircase(4).unwrap(), &y).unwrap();
        let got = rank_one_complete(&m).unwrap();
        assert!(got.sub(&y).max_abs() < 1e-10 * y.max_abs());
    }

    #[test]
    fn gauge_invariance() {
        let y = DenseMatrix::from_fn(3, 4, |i, j| (i as f64 + 1.5) * (j as f64 - 2.5));
        let scaled = DenseMatrix::from_fn(3, 4, |i, j| ((i as f64 + 1.5) * 4.0) * ((j as f64 - 2.5) / 4.0));
        let p = ObservationPattern::from_predicate(3, 4, |i, j| (i + j) % 3 != 0 || i == j).unwrap();
        let a = rank_one_complete(&ObservedMatrix::from_dense(p.clone(), &y).unwrap()).unwrap();
        let b = rank_one_complete(&ObservedMatrix::from_dense(p, &scaled).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failures() {
        assert!(matches!(
            rank_one_complete(&two_by_two([1.0, 0.0, 1.0])),
            Err(Error::ZeroObservation { row: 1, col: 0 })
        ));
        let p = block_diagonal(4, 4, 2, 2).unwrap();
        let m = ObservedMatrix::new(p, vec![1.0; 8]).unwrap();
        assert!(matches!(rank_one_complete(&m), Err(Error::Reducible { components: 2 })));
        let full = ObservationPattern::full(2, 2).unwrap();
        let m = ObservedMatrix::new(full, vec![1.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(matches!(rank_one_complete(&m), Err(Error::Inconsistent { row: 1, col: 1, .. })));
    }
}
