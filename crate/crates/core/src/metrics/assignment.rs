//! Minimum-cost assignment (Hungarian algorithm, shortest augmenting path
//! with row/column potentials). O(n² m) for an `n × m` matrix, `n <= m`.

/// Dense row-major cost matrix.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Optimal assignment: `row_to_col[r]` is the column given to row `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
}

/// Solves the rectangular assignment problem with `rows <= cols`.
///
/// # Panics
/// If the matrix has more rows than columns or contains a non-finite cost.
pub fn solve(cost: &CostMatrix) -> Assignment {
    let n = cost.rows;
    let m = cost.cols;
    assert!(n <= m, "assignment needs rows <= cols ({n} > {m})");
    assert!(cost.data.iter().all(|c| c.is_finite()), "non-finite cost");
    if n == 0 {
        return Assignment {
            row_to_col: Vec::new(),
            total_cost: 0.0,
        };
    }

    // 1-based: column 0 is a virtual column used as the augmenting path root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut min_slack = vec![f64::INFINITY; m + 1];
    let mut used = vec![false; m + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let costs = cost.row(i0 - 1);
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = costs[j - 1] - ui0 - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        // Flip the augmenting path.
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=m {
        if col_owner[j] != 0 {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
    }
    let total_cost = row_to_col.iter().enumerate().map(|(r, &c)| cost.get(r, c)).sum();
    Assignment { row_to_col, total_cost }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_instance() {
        let cost = CostMatrix::new(3, 3, vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let a = solve(&cost);
        assert_eq!(a.total_cost, 5.0);
        assert_eq!(a.row_to_col, vec![1, 0, 2]);
    }

    #[test]
    fn rectangular() {
        let cost = CostMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 1.0, 5.0, 0.5]);
        let a = solve(&cost);
        assert_eq!(a.total_cost, 1.5);
        assert_eq!(a.row_to_col, vec![0, 2]);
    }

    #[test]
    fn empty() {
        assert_eq!(solve(&CostMatrix::new(0, 0, vec![])).total_cost, 0.0);
    }

    #[test]
    fn assignment_is_a_permutation() {
        let cost = CostMatrix::from_fn(30, 30, |r, c| {
            ((r * 7 + c * 13) % 17) as f64 + 0.25 * ((r + c) % 3) as f64
        });
        let a = solve(&cost);
        let mut cols = a.row_to_col.clone();
        cols.sort_unstable();
        assert_eq!(cols, (0..30).collect::<Vec<_>>());
    }
}
