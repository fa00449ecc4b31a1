//! Minimum-cost bipartite assignment.
//!
//! Dense O(n^3) shortest-augmenting-path Hungarian solver over `f64` costs.
//! Rectangular inputs are padded to square with `max entry + 1`; padded pairs
//! never appear in the output. Among equal-cost optima the solver returns the
//! one whose column sequence (rows in order) is lexicographically smallest.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("cost matrix must have at least one row and one column")]
    Empty,
    #[error("row {row} has {got} columns, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("cell ({row}, {col}) is {value}; costs must be finite and non-negative")]
    InvalidCell { row: usize, col: usize, value: f64 },
}

/// Dense row-major cost matrix with finite, non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssignmentError> {
        if rows == 0 || cols == 0 {
            return Err(AssignmentError::Empty);
        }
        assert_eq!(data.len(), rows * cols, "data length must be rows * cols");
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(AssignmentError::InvalidCell {
                row: i / cols,
                col: i % cols,
                value: data[i],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignmentError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(AssignmentError::Ragged {
                    row,
                    got: r.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Sum of the costs of the given pairs.
    pub fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(r, c)| self.get(r, c)).sum()
    }
}

/// Solves the assignment problem, returning `min(rows, cols)` disjoint
/// `(row, col)` pairs sorted by row.
pub fn solve(c: &CostMatrix) -> Vec<(usize, usize)> {
    let n = c.rows.max(c.cols);
    let pad = c.data.iter().cloned().fold(0.0f64, f64::max) + 1.0;
    let cost = |i: usize, j: usize| {
        if i < c.rows && j < c.cols {
            c.get(i, j)
        } else {
            pad
        }
    };

    // 1-based potentials and matching, index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    let mut col_to_row = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
        col_to_row[j - 1] = p[j] - 1;
    }

    // Any optimal assignment uses only edges with zero reduced cost under the
    // final potentials, so the lexicographic refinement searches that graph.
    let eps = 1e-9 * (1.0 + pad);
    let tight = |i: usize, j: usize| cost(i, j) - u[i + 1] - v[j + 1] <= eps;
    lexicographic_refine(n, &tight, &mut row_to_col, &mut col_to_row);

    (0..c.rows)
        .filter_map(|i| {
            let j = row_to_col[i];
            (j < c.cols).then_some((i, j))
        })
        .collect()
}

/// Rewrites a perfect matching on the tight graph into the lexicographically
/// smallest perfect matching on that graph.
fn lexicographic_refine(
    n: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
) {
    let mut fixed_col = vec![false; n];
    let mut visited = vec![false; n];
    for i in 0..n {
        for c in 0..n {
            if c == row_to_col[i] {
                break;
            }
            if fixed_col[c] || !tight(i, c) {
                continue;
            }
            // Row r currently owns c; look for an alternating path from r to
            // the column i gives up, avoiding fixed columns and c itself.
            visited.fill(false);
            visited[c] = true;
            let target = row_to_col[i];
            let r = col_to_row[c];
            let mut path = Vec::new();
            if alternating_path(
                r,
                target,
                tight,
                &fixed_col,
                &mut visited,
                col_to_row,
                &mut path,
            ) {
                // path holds (row, new_col) steps starting at r.
                for &(row, col) in &path {
                    row_to_col[row] = col;
                    col_to_row[col] = row;
                }
                row_to_col[i] = c;
                col_to_row[c] = i;
                break;
            }
        }
        fixed_col[row_to_col[i]] = true;
    }
}

fn alternating_path(
    row: usize,
    target: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    fixed_col: &[bool],
    visited: &mut [bool],
    col_to_row: &[usize],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for col in 0..visited.len() {
        if visited[col] || fixed_col[col] || !tight(row, col) {
            continue;
        }
        visited[col] = true;
        if col == target {
            path.push((row, col));
            return true;
        }
        let next = col_to_row[col];
        if alternating_path(next, target, tight, fixed_col, visited, col_to_row, path) {
            path.push((row, col));
            return true;
        }
    }
    false
}
