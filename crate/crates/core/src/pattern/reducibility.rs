use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ObservationPattern;

/// Connected components of the graph whose vertices are the observed cells,
/// with an edge between two cells that share a row or a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityReport {
    pub reducible: bool,
    /// Observed cells of each component, row-major within a component.
    /// Components are ordered by their first cell.
    pub components: Vec<Vec<(usize, usize)>>,
    /// Rows touched by each component (disjoint across components).
    pub row_groups: Vec<Vec<usize>>,
    /// Columns touched by each component (disjoint across components).
    pub col_groups: Vec<Vec<usize>>,
    /// Rows with no observation at all. Reported separately: such a row
    /// makes every completion non-unique regardless of connectivity.
    pub empty_rows: Vec<usize>,
    pub empty_cols: Vec<usize>,
}

impl ReducibilityReport {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn has_empty_lines(&self) -> bool {
        !self.empty_rows.is_empty() || !self.empty_cols.is_empty()
    }
}

/// Breadth-first search over the observed cells in `O(m + n1 + n2)`.
///
/// A row (column) is expanded once: the first time any cell in it is
/// reached, all its cells join the current component.
pub fn is_reducible(p: &ObservationPattern) -> ReducibilityReport {
    let (n1, n2) = (p.n1(), p.n2());
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); n1];
    let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); n2];
    for (k, &(i, j)) in p.entries().iter().enumerate() {
        by_row[i].push(k);
        by_col[j].push(k);
    }

    let mut label = vec![usize::MAX; p.m()];
    let mut row_done = vec![false; n1];
    let mut col_done = vec![false; n2];
    let mut components = Vec::new();
    let mut row_groups = Vec::new();
    let mut col_groups = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..p.m() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut cells = Vec::new();
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = p.entries()[k];
            cells.push((i, j));
            if !row_done[i] {
                row_done[i] = true;
                rows.push(i);
                for &nb in &by_row[i] {
                    if label[nb] == usize::MAX {
                        label[nb] = id;
                        queue.push_back(nb);
                    }
                }
            }
            if !col_done[j] {
                col_done[j] = true;
                cols.push(j);
                for &nb in &by_col[j] {
                    if label[nb] == usize::MAX {
                        label[nb] = id;
                        queue.push_back(nb);
                    }
                }
            }
        }
        cells.sort_unstable();
        rows.sort_unstable();
        cols.sort_unstable();
        components.push(cells);
        row_groups.push(rows);
        col_groups.push(cols);
    }

    let empty_rows = (0..n1).filter(|&i| by_row[i].is_empty()).collect();
    let empty_cols = (0..n2).filter(|&j| by_col[j].is_empty()).collect();
    ReducibilityReport {
        reducible: components.len() > 1,
        components,
        row_groups,
        col_groups,
        empty_rows,
        empty_cols,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{block_diagonal, staircase};
    use proptest::prelude::*;

    /// Union-find over rows and columns: cell (i, j) joins row i to column
    /// n1 + j. Independent of the BFS above.
    fn union_find_components(p: &ObservationPattern) -> usize {
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let n = p.n1() + p.n2();
        let mut parent: Vec<usize> = (0..n).collect();
        for &(i, j) in p.entries() {
            let a = find(&mut parent, i);
            let b = find(&mut parent, p.n1() + j);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut roots: Vec<usize> = p.entries().iter().map(|&(i, _)| find(&mut parent, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    #[test]
    fn block_pattern_is_reducible() {
        let p = block_diagonal(40, 50, 20, 20).unwrap();
        let rep = is_reducible(&p);
        assert!(rep.reducible);
        assert_eq!(rep.component_count(), 2);
        assert_eq!(rep.row_groups[0], (0..20).collect::<Vec<_>>());
        assert_eq!(rep.col_groups[1], (20..50).collect::<Vec<_>>());
        assert_eq!(rep.components[0].len(), 400);
        assert!(!rep.has_empty_lines());
    }

    #[test]
    fn staircase_is_irreducible() {
        let rep = is_reducible(&staircase(4).unwrap());
        assert!(!rep.reducible);
        assert_eq!(rep.component_count(), 1);
    }

    #[test]
    fn full_pattern_single_component() {
        let rep = is_reducible(&ObservationPattern::full(3, 5).unwrap());
        assert!(!rep.reducible);
        assert_eq!(rep.components[0].len(), 15);
    }

    #[test]
    fn empty_lines_flagged_not_counted() {
        let p = ObservationPattern::new(3, 3, [(0, 0), (0, 1), (1, 0)]).unwrap();
        let rep = is_reducible(&p);
        assert!(!rep.reducible);
        assert_eq!(rep.empty_rows, vec![2]);
        assert_eq!(rep.empty_cols, vec![2]);
    }

    fn arb_pattern() -> impl Strategy<Value = ObservationPattern> {
        (2usize..=20, 2usize..=20, 0.02f64..0.5, any::<u64>()).prop_filter_map(
            "non-empty",
            |(n1, n2, p, seed)| {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                ObservationPattern::from_predicate(n1, n2, |_, _| rng.random::<f64>() < p).ok()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn bfs_matches_union_find(p in arb_pattern()) {
            let rep = is_reducible(&p);
            prop_assert_eq!(rep.component_count(), union_find_components(&p));
            let total: usize = rep.components.iter().map(|c| c.len()).sum();
            prop_assert_eq!(total, p.m());
        }

        #[test]
        fn invariant_under_permutation(p in arb_pattern(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rp: Vec<usize> = (0..p.n1()).collect();
            let mut cp: Vec<usize> = (0..p.n2()).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let q = p.permuted(&rp, &cp).unwrap();
            let (a, b) = (is_reducible(&p), is_reducible(&q));
            prop_assert_eq!(a.reducible, b.reducible);
            prop_assert_eq!(a.component_count(), b.component_count());
            prop_assert_eq!(a.empty_rows.len(), b.empty_rows.len());
        }
    }
}
