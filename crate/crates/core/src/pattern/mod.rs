//! Observation patterns and their combinatorial diagnostics.
//!
//! Indices are 0-based in memory. File formats and printed reports use
//! 1-based indices (see the `formats` module).

mod bounds;
mod reducibility;

pub use bounds::{estimated_bound, generic_bound, mrfa_bound, GenericBounds};
pub use reducibility::{is_reducible, ReducibilityReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ABSENT: usize = usize::MAX;

/// The set Ω of observed index pairs on an `n1 × n2` grid.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternData", into = "PatternData")]
pub struct ObservationPattern {
    n1: usize,
    n2: usize,
    /// Sorted row-major, no duplicates.
    entries: Vec<(usize, usize)>,
    /// `slot[i * n2 + j]` is the position of (i, j) in `entries`, or ABSENT.
    slot: Vec<usize>,
}

/// Serialized form: the grid and the 0-based entry list.
#[derive(Serialize, Deserialize)]
struct PatternData {
    n1: usize,
    n2: usize,
    entries: Vec<(usize, usize)>,
}

impl From<ObservationPattern> for PatternData {
    fn from(p: ObservationPattern) -> Self {
        PatternData {
            n1: p.n1,
            n2: p.n2,
            entries: p.entries,
        }
    }
}

impl TryFrom<PatternData> for ObservationPattern {
    type Error = Error;

    fn try_from(d: PatternData) -> Result<Self> {
        ObservationPattern::new(d.n1, d.n2, d.entries)
    }
}

impl ObservationPattern {
    /// Builds a pattern from 0-based index pairs.
    pub fn new(
        n1: usize,
        n2: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::InvalidPattern(format!(
                "grid must be at least 2x2, got {n1}x{n2}"
            )));
        }
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (i, j) in entries {
            if i >= n1 || j >= n2 {
                return Err(Error::InvalidPattern(format!(
                    "index ({}, {}) outside the {n1}x{n2} grid",
                    i + 1,
                    j + 1
                )));
            }
            list.push((i, j));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPattern(format!(
                "duplicate index ({}, {})",
                w[0].0 + 1,
                w[0].1 + 1
            )));
        }
        if list.is_empty() {
            return Err(Error::InvalidPattern("pattern has no observed entries".into()));
        }
        let mut slot = vec![ABSENT; n1 * n2];
        for (k, &(i, j)) in list.iter().enumerate() {
            slot[i * n2 + j] = k;
        }
        Ok(ObservationPattern {
            n1,
            n2,
            entries: list,
            slot,
        })
    }

    /// Builds a pattern from 1-based index pairs.
    pub fn from_one_based(
        n1: usize,
        n2: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut zero = Vec::new();
        for (i, j) in entries {
            if i == 0 || j == 0 {
                return Err(Error::InvalidPattern(format!(
                    "1-based index ({i}, {j}) contains a zero"
                )));
            }
            zero.push((i - 1, j - 1));
        }
        Self::new(n1, n2, zero)
    }

    /// Every cell observed.
    pub fn full(n1: usize, n2: usize) -> Result<Self> {
        Self::new(n1, n2, (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))))
    }

    /// All cells for which `keep(i, j)` holds.
    pub fn from_predicate(
        n1: usize,
        n2: usize,
        mut keep: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        Self::new(
            n1,
            n2,
            (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).filter(|&(i, j)| keep(i, j)),
        )
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Cardinality |Ω|.
    pub fn m(&self) -> usize {
        self.entries.len()
    }

    /// Observed pairs in row-major order.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n1 && j < self.n2 && self.slot[i * self.n2 + j] != ABSENT
    }

    /// Position of (i, j) in [`ObservationPattern::entries`].
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n1 || j >= self.n2 {
            return None;
        }
        match self.slot[i * self.n2 + j] {
            ABSENT => None,
            k => Some(k),
        }
    }

    /// Unobserved pairs Ω^c in row-major order.
    pub fn complement(&self) -> Vec<(usize, usize)> {
        (0..self.n1)
            .flat_map(|i| (0..self.n2).map(move |j| (i, j)))
            .filter(|&(i, j)| self.slot[i * self.n2 + j] == ABSENT)
            .collect()
    }

    pub fn complement_len(&self) -> usize {
        self.n1 * self.n2 - self.m()
    }

    /// Observed column indices of row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n2).filter(move |&j| self.contains(i, j))
    }

    /// Observed row indices of column `j`.
    pub fn col_entries(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n1).filter(move |&i| self.contains(i, j))
    }

    /// Per-row and per-column observation counts.
    pub fn row_col_counts(&self) -> (Vec<usize>, Vec<usize>) {
        let mut rows = vec![0; self.n1];
        let mut cols = vec![0; self.n2];
        for &(i, j) in &self.entries {
            rows[i] += 1;
            cols[j] += 1;
        }
        (rows, cols)
    }

    /// Necessary condition for well-posedness at rank `r`: every row and
    /// every column holds at least `r` observations.
    pub fn min_count_check(&self, r: usize) -> bool {
        let (rows, cols) = self.row_col_counts();
        rows.iter().chain(&cols).all(|&c| c >= r)
    }

    pub fn is_subset_of(&self, other: &ObservationPattern) -> bool {
        self.n1 == other.n1
            && self.n2 == other.n2
            && self.entries.iter().all(|&(i, j)| other.contains(i, j))
    }

    /// Applies `row_perm[i]` / `col_perm[j]` to every index.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        Self::new(
            self.n1,
            self.n2,
            self.entries.iter().map(|&(i, j)| (row_perm[i], col_perm[j])),
        )
    }

    /// Row-major observation mask.
    pub fn mask(&self) -> Vec<bool> {
        self.slot.iter().map(|&s| s != ABSENT).collect()
    }

    pub fn bounds(&self) -> GenericBounds {
        generic_bound(self)
    }
}

impl std::fmt::Debug for ObservationPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ObservationPattern({}x{}, m={})", self.n1, self.n2, self.m())
    }
}

/// Pattern used in the Wilson–Worcester example: every off-diagonal cell of
/// an `n × n` grid.
pub fn off_diagonal(n: usize) -> Result<ObservationPattern> {
    ObservationPattern::from_predicate(n, n, |i, j| i != j)
}

/// Lower-triangular staircase `{(i, j) : i ≥ j}` minus the bottom-left corner.
/// Irreducible for every `n ≥ 3` although the corner-opposite cell admits no
/// rank-one Schur pivot.
pub fn staircase(n: usize) -> Result<ObservationPattern> {
    ObservationPattern::from_predicate(n, n, |i, j| i >= j && !(i == n - 1 && j == 0))
}

/// Two observed diagonal blocks `[0, k1) × [0, l1)` and `[k1, n1) × [l1, n2)`.
pub fn block_diagonal(n1: usize, n2: usize, k1: usize, l1: usize) -> Result<ObservationPattern> {
    ObservationPattern::from_predicate(n1, n2, |i, j| (i < k1 && j < l1) || (i >= k1 && j >= l1))
}

/// Observed blocks `[M1 M3; M2 ·]`: the first `r` rows and the first `r`
/// columns, so that m = r(n1 + n2 − r) and the generic bound equals `r`
/// exactly. With a nonsingular `r × r` block `M1` the rank-`r` completion is
/// unique.
pub fn example_one_blocks(n1: usize, n2: usize, r: usize) -> Result<ObservationPattern> {
    ObservationPattern::from_predicate(n1, n2, |i, j| i < r || j < r)
}
