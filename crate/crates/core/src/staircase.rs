use serde::{Deserialize, Serialize};

/// `(row, column)`, both from 1.
pub type Cell = (usize, usize);

/// The index set `S = {(i, j) : i, j >= 1, i + j <= 2n + 1}`, stored row
/// by row: row `i` holds `j = 1..=2n+1-i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Staircase {
    n: usize,
}

impl Staircase {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "staircase needs n >= 1");
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n(2n + 1)` cells.
    pub fn len(&self) -> usize {
        self.n * (2 * self.n + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cells with `i + j = 2n + 1` end every directed path.
    pub fn diagonal_sum(&self) -> usize {
        2 * self.n + 1
    }

    pub fn rows(&self) -> usize {
        2 * self.n
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.diagonal_sum() - i
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + j <= self.diagonal_sum()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.contains(i, j), "({i}, {j}) outside staircase");
        let before = (i - 1) * self.diagonal_sum() - (i - 1) * i / 2;
        before + j - 1
    }

    /// Row-major list of cells.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.rows()).flat_map(move |i| (1..=self.row_len(i)).map(move |j| (i, j)))
    }

    /// Cells `(n+1, n), (n, n), (n, n-1), ..., (1, 1)` along the diagonal
    /// band, one per level `1..=2n`.
    pub fn level_cells(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (1..=2 * n)
            .map(|t| if t % 2 == 1 { let j = (t - 1) / 2; (n + 1 - j, n - j) } else { let j = t / 2; (n + 1 - j, n + 1 - j) })
            .collect()
    }

    /// Row `i` read in increasing order: `(i, 2n+1-i), ..., (i, 1)`.
    pub fn row_cells(&self, i: usize) -> Vec<(usize, usize)> {
        (1..=self.row_len(i)).rev().map(|j| (i, j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_indexing() {
        for n in 1..6 {
            let s = Staircase::new(n);
            let cells: Vec<_> = s.cells().collect();
            assert_eq!(cells.len(), s.len());
            for (k, &(i, j)) in cells.iter().enumerate() {
                assert_eq!(s.index(i, j), k);
            }
        }
        assert_eq!(Staircase::new(1).len(), 3);
        assert_eq!(Staircase::new(2).len(), 10);
    }

    #[test]
    fn level_cells_small() {
        assert_eq!(Staircase::new(1).level_cells(), vec![(2, 1), (1, 1)]);
        assert_eq!(Staircase::new(2).level_cells(), vec![(3, 2), (2, 2), (2, 1), (1, 1)]);
        assert_eq!(Staircase::new(2).row_cells(1), vec![(1, 4), (1, 3), (1, 2), (1, 1)]);
    }
}
