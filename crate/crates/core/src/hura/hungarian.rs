use crate::error::{Error, Result};

/// Square cost matrix. Entries at or above `big_value` mark inadmissible pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    size: usize,
    entries: Vec<f64>,
    pub big_value: f64,
}

impl AssignmentMatrix {
    /// Builds a matrix from rows; `big_value` of `f64::INFINITY` means every
    /// entry is admissible.
    pub fn from_rows(rows: Vec<Vec<f64>>, big_value: f64) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Dimension("assignment matrix must be square".into()));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("assignment matrix entries must be finite".into()));
        }
        Ok(AssignmentMatrix { size, entries, big_value })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.size + c]
    }

    pub fn is_admissible(&self, r: usize, c: usize) -> bool {
        self.get(r, c) < self.big_value
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.size..(r + 1) * self.size]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Column assigned to each row.
    pub columns: Vec<usize>,
    /// Sum of the chosen original entries.
    pub total: f64,
}

/// Minimum-cost perfect assignment (shortest augmenting paths with
/// potentials, O(n³)).
///
/// Inadmissible entries are replaced internally by a penalty just large
/// enough to lose against every admissible assignment, which keeps the
/// potentials well scaled; `total` is always summed from the original
/// entries.
pub fn hungarian(a: &AssignmentMatrix) -> Result<Assignment> {
    let n = a.size();
    for r in 0..n {
        if (0..n).all(|c| !a.is_admissible(r, c)) {
            return Err(Error::NoAssignment { row: r });
        }
    }
    let max_abs = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .filter(|&(r, c)| a.is_admissible(r, c))
        .map(|(r, c)| a.get(r, c).abs())
        .fold(0.0, f64::max);
    let penalty = 2.0 * n as f64 * max_abs + 1.0;
    let cost = |r: usize, c: usize| if a.is_admissible(r, c) { a.get(r, c) } else { penalty };

    // 1-based arrays; column 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
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
            }
            for j in 0..=n {
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
    let mut columns = vec![0; n];
    for j in 1..=n {
        columns[owner[j] - 1] = j - 1;
    }
    let total = columns.iter().enumerate().map(|(r, &c)| a.get(r, c)).sum();
    Ok(Assignment { columns, total })
}
