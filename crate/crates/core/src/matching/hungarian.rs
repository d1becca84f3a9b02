//! Minimum-cost bipartite assignment.

use serde::{Deserialize, Serialize};

use super::MatchingError;

/// Largest row count accepted by [`brute_force_matching`].
pub const BRUTE_FORCE_MAX_ROWS: usize = 8;

/// Row-to-column assignment. Rows mapped to `None` are unmatched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub mapping: Vec<Option<usize>>,
    /// Sum of matched entries, accumulated in row order.
    pub cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mapping.iter().enumerate().filter_map(|(r, c)| c.map(|c| (r, c)))
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.mapping.iter().flatten().all(|c| seen.insert(*c))
    }
}

fn check_matrix(cost: &[Vec<f64>]) -> Result<usize, MatchingError> {
    let cols = cost.first().map_or(0, Vec::len);
    for (r, row) in cost.iter().enumerate() {
        if row.len() != cols {
            return Err(MatchingError::Ragged { row: r, expected: cols, found: row.len() });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(MatchingError::NonFinite { row: r, col: c });
        }
    }
    Ok(cols)
}

fn row_order_cost(cost: &[Vec<f64>], mapping: &[Option<usize>]) -> f64 {
    mapping
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| cost[r][c]))
        .sum()
}

/// Optimal assignment via shortest augmenting paths with potentials, O(R²C).
///
/// When there are more rows than columns the matrix is padded with columns whose
/// entries exceed any achievable total; rows landing on padding stay unmatched.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment, MatchingError> {
    let rows = cost.len();
    let cols = check_matrix(cost)?;
    if rows == 0 {
        return Ok(Assignment { mapping: Vec::new(), cost: 0.0 });
    }
    let width = cols.max(rows);
    let sentinel = if cols < rows {
        let span: f64 = cost.iter().flatten().fold(0.0, |m, v| m.max(v.abs()));
        (span + 1.0) * (rows as f64 + 1.0)
    } else {
        0.0
    };
    let at = |r: usize, c: usize| if c < cols { cost[r][c] } else { sentinel };

    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; width + 1];
    let mut owner = vec![0usize; width + 1];
    let mut way = vec![0usize; width + 1];
    for r in 1..=rows {
        owner[0] = r;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; width + 1];
        let mut used = vec![false; width + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=width {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=width {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut mapping = vec![None; rows];
    for j in 1..=width {
        if owner[j] != 0 && j <= cols {
            mapping[owner[j] - 1] = Some(j - 1);
        }
    }
    let cost_sum = row_order_cost(cost, &mapping);
    Ok(Assignment { mapping, cost: cost_sum })
}

/// Exhaustive minimum over injections of rows into columns.
/// Ties resolve to the lexicographically smallest mapping.
pub fn brute_force_matching(cost: &[Vec<f64>]) -> Result<Assignment, MatchingError> {
    let rows = cost.len();
    let cols = check_matrix(cost)?;
    if rows > BRUTE_FORCE_MAX_ROWS {
        return Err(MatchingError::TooLarge { rows, max: BRUTE_FORCE_MAX_ROWS });
    }
    if rows > cols {
        return Err(MatchingError::MoreRowsThanColumns { rows, cols });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(rows);
    let mut used = vec![false; cols];
    search(cost, &mut current, &mut used, &mut best);
    let (total, perm) = best.unwrap_or((0.0, Vec::new()));
    Ok(Assignment { mapping: perm.into_iter().map(Some).collect(), cost: total })
}

fn search(cost: &[Vec<f64>], current: &mut Vec<usize>, used: &mut [bool], best: &mut Option<(f64, Vec<usize>)>) {
    if current.len() == cost.len() {
        let total: f64 = current.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            *best = Some((total, current.clone()));
        }
        return;
    }
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            current.push(c);
            search(cost, current, used, best);
            current.pop();
            used[c] = false;
        }
    }
}
