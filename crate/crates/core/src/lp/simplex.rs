//! Dense two-phase tableau simplex; Bland's rule guards against cycling.

use thiserror::Error;

use crate::linalg;

/// Reduced costs above `-REDUCED_COST_TOL` count as non-improving.
const REDUCED_COST_TOL: f64 = 1e-10;
/// Tableau entries at or below this are not used as pivots.
const PIVOT_TOL: f64 = 1e-11;
const PHASE1_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-12;
/// Objective gain below which a pivot counts as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;
const DEGENERATE_RUN: usize = 50;
const REFACTOR_EVERY: usize = 100;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("pivot limit reached")]
    PivotLimit,
}

/// `maximize c.z  s.t.  eq_lhs z = eq_rhs,  ub_lhs z <= ub_rhs,  z >= 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_lhs: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_lhs: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, ..Default::default() }
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_lhs.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn ub(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ub_lhs.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.eq_lhs.len() != self.eq_rhs.len() || self.ub_lhs.len() != self.ub_rhs.len() {
            return Err(LpError::Dimension("row count differs from rhs length".into()));
        }
        if let Some(r) = self.eq_lhs.iter().chain(&self.ub_lhs).find(|r| r.len() != n) {
            return Err(LpError::Dimension(format!("row has {} entries, expected {n}", r.len())));
        }
        if self.eq_rhs.iter().chain(&self.ub_rhs).chain(&self.objective).any(|v| !v.is_finite()) {
            return Err(LpError::Dimension("non-finite coefficient".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Basic columns; indices `>= num_vars` are slacks of the `<=` rows.
    pub basis: Vec<usize>,
    /// `z_j - c_j` for every structural and slack column; all `>= 0`
    /// (within tolerance) at a maximizing optimum.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    /// rows x (cols + 1); last entry of every row is the rhs
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// original row index of every live tableau row
    origin: Vec<usize>,
    /// columns that may enter the basis
    allowed: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.allowed.len()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width();
        let p = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for c in 0..=w {
                    row[c] -= f * prow[c];
                }
                row[j] = 0.0;
            }
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// `z_j - c_j` for every column, given a cost vector over all columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut d: Vec<f64> = cost.iter().map(|c| -c).collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(&row[..w]) {
                    *dj += cb * a;
                }
            }
        }
        d
    }

    /// Largest-coefficient pricing while the objective moves; after
    /// `DEGENERATE_RUN` pivots without progress, Bland's rule (lowest-index
    /// entering column, ratio ties to the lowest basic index) takes over
    /// until the next strict improvement, so cycling is impossible.
    fn optimize(&mut self, cost: &[f64], original: &[Vec<f64>], rhs: &[f64]) -> Result<(), LpError> {
        let w = self.width();
        let mut stalled = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::PivotLimit);
            }
            if since_refactor >= REFACTOR_EVERY {
                self.refactor(original, rhs);
                since_refactor = 0;
            }
            let d = self.reduced_costs(cost);
            let bland = stalled >= DEGENERATE_RUN;
            let entering = if bland {
                (0..w).find(|&j| self.allowed[j] && d[j] < -REDUCED_COST_TOL)
            } else {
                (0..w)
                    .filter(|&j| self.allowed[j] && d[j] < -REDUCED_COST_TOL)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if d[b] <= d[j] => Some(b),
                        _ => Some(j),
                    })
            };
            let Some(j) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[j];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[w].max(0.0) / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = (ratio - bratio).abs() <= RATIO_TOL;
                        let better_tie = if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            a > self.rows[br][j]
                        };
                        if ratio < bratio - RATIO_TOL || (tie && better_tie) {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = best else {
                return Err(LpError::Unbounded);
            };
            if ratio * -d[j] > DEGENERATE_STEP {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(r, j);
            since_refactor += 1;
        }
    }

    /// Rebuilds the tableau as `B^-1 [A | b]` from the original rows.
    fn refactor(&mut self, original: &[Vec<f64>], rhs: &[f64]) {
        let w = self.width();
        let basis_matrix: Vec<Vec<f64>> =
            self.origin.iter().map(|&o| self.basis.iter().map(|&b| original[o][b]).collect()).collect();
        let Some(inv) = linalg::inverse(&basis_matrix, 1e-13) else {
            return;
        };
        for (r, inv_row) in inv.iter().enumerate() {
            let mut row = vec![0.0; w + 1];
            for (k, &o) in self.origin.iter().enumerate() {
                let f = inv_row[k];
                if f != 0.0 {
                    for (v, a) in row[..w].iter_mut().zip(&original[o]) {
                        *v += f * a;
                    }
                    row[w] += f * rhs[o];
                }
            }
            for (c, v) in row.iter_mut().enumerate() {
                if c < w && v.abs() < 1e-14 {
                    *v = 0.0;
                }
            }
            row[self.basis[r]] = 1.0;
            self.rows[r] = row;
        }
    }
}

/// Indices of a maximal linearly independent subset of the equality rows.
/// A dependent row whose right-hand side disagrees makes the system
/// infeasible.
fn independent_rows(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<usize>, LpError> {
    let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-9 * scale;
    // echelon rows with their pivot column, rhs appended
    let mut echelon: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut keep = Vec::new();
    for (r, (row, &b)) in rows.iter().zip(rhs).enumerate() {
        let mut v = row.clone();
        v.push(b);
        for (col, e) in &echelon {
            let f = v[*col];
            if f != 0.0 {
                for (x, y) in v.iter_mut().zip(e) {
                    *x -= f * y;
                }
            }
        }
        let n = row.len();
        let pivot = (0..n).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()));
        match pivot {
            Some(col) if v[col].abs() > tol => {
                let p = v[col];
                v.iter_mut().for_each(|x| *x /= p);
                echelon.push((col, v));
                keep.push(r);
            }
            _ if v[n].abs() > PHASE1_TOL * b.abs().max(1.0) => return Err(LpError::Infeasible),
            _ => {}
        }
    }
    Ok(keep)
}

/// Solves the LP; the result is a basic feasible (vertex) solution.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let keep = independent_rows(&lp.eq_lhs, &lp.eq_rhs)?;
    let reduced;
    let lp = if keep.len() < lp.eq_lhs.len() {
        reduced = LinearProgram {
            eq_lhs: keep.iter().map(|&r| lp.eq_lhs[r].clone()).collect(),
            eq_rhs: keep.iter().map(|&r| lp.eq_rhs[r]).collect(),
            ..lp.clone()
        };
        &reduced
    } else {
        lp
    };
    let n = lp.num_vars();
    let m_eq = lp.eq_lhs.len();
    let m_ub = lp.ub_lhs.len();
    let m = m_eq + m_ub;

    // standard form rows over [x | slacks], rhs made non-negative
    let mut std_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut std_rhs: Vec<f64> = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    for (row, &b) in lp.eq_lhs.iter().zip(&lp.eq_rhs) {
        let mut r = row.clone();
        r.resize(n + m_ub, 0.0);
        std_rows.push(r);
        std_rhs.push(b);
        needs_artificial.push(true);
    }
    for (k, (row, &b)) in lp.ub_lhs.iter().zip(&lp.ub_rhs).enumerate() {
        let mut r = row.clone();
        r.resize(n + m_ub, 0.0);
        r[n + k] = 1.0;
        std_rows.push(r);
        std_rhs.push(b);
        needs_artificial.push(b < 0.0);
    }
    for (row, b) in std_rows.iter_mut().zip(std_rhs.iter_mut()) {
        if *b < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
        }
    }

    let n_std = n + m_ub;
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let width = n_std + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = n_std;
    for (r, (row, &b)) in std_rows.iter().zip(&std_rhs).enumerate() {
        let mut t = row.clone();
        t.resize(width + 1, 0.0);
        t[width] = b;
        if needs_artificial[r] {
            t[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + (r - m_eq));
        }
        rows.push(t);
    }
    let original: Vec<Vec<f64>> = rows.iter().map(|r| r[..width].to_vec()).collect();
    let mut tab = Tableau {
        rows,
        basis,
        origin: (0..m).collect(),
        allowed: vec![true; width],
        pivots: 0,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[n_std..].iter_mut().for_each(|c| *c = -1.0);
        tab.optimize(&phase1, &original, &std_rhs)?;
        let infeasibility: f64 = tab
            .rows
            .iter()
            .zip(&tab.basis)
            .filter(|(_, &b)| b >= n_std)
            .map(|(row, _)| row[width])
            .sum();
        if infeasibility > PHASE1_TOL {
            return Err(LpError::Infeasible);
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= n_std {
                let col = (0..n_std).find(|&j| tab.rows[r][j].abs() > 1e-9);
                match col {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        tab.origin.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        tab.allowed[n_std..].iter_mut().for_each(|a| *a = false);
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    tab.optimize(&cost, &original, &std_rhs)?;

    // recompute basic values from the original data for accuracy
    let mut x_full = vec![0.0; n_std];
    let basis_matrix: Vec<Vec<f64>> = tab
        .origin
        .iter()
        .map(|&o| tab.basis.iter().map(|&b| std_rows[o][b]).collect())
        .collect();
    let rhs: Vec<f64> = tab.origin.iter().map(|&o| std_rhs[o]).collect();
    match linalg::solve(&basis_matrix, &rhs, 1e-13) {
        Some(xb) => {
            for (&b, v) in tab.basis.iter().zip(xb) {
                x_full[b] = v;
            }
        }
        None => {
            for (row, &b) in tab.rows.iter().zip(&tab.basis) {
                x_full[b] = row[width];
            }
        }
    }
    for v in x_full.iter_mut() {
        if *v < 0.0 && *v > -1e-9 {
            *v = 0.0;
        }
    }

    let d = tab.reduced_costs(&cost);
    let x = x_full[..n].to_vec();
    let value = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
    Ok(LpSolution {
        x,
        value,
        basis: tab.basis.clone(),
        reduced_costs: d[..n_std].to_vec(),
        pivots: tab.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment() {
        let lp = LinearProgram::new(vec![1.0, 0.0]).eq(vec![1.0, 1.0], 1.0);
        let s = simplex_solve(&lp).unwrap();
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn textbook_inequalities() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let lp = LinearProgram::new(vec![3.0, 5.0])
            .ub(vec![1.0, 0.0], 4.0)
            .ub(vec![0.0, 2.0], 12.0)
            .ub(vec![3.0, 2.0], 18.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!(s.reduced_costs.iter().all(|&d| d >= -1e-10));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::new(vec![1.0]).eq(vec![1.0], 1.0).ub(vec![1.0], 0.5);
        assert_eq!(simplex_solve(&lp), Err(LpError::Infeasible));
        let lp = LinearProgram::new(vec![1.0, 0.0]).eq(vec![1.0, -1.0], 0.0);
        assert_eq!(simplex_solve(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn negative_rhs_inequality() {
        // x + y >= 1 written as -x - y <= -1, minimize x + 2y
        let lp = LinearProgram::new(vec![-1.0, -2.0]).ub(vec![-1.0, -1.0], -1.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LinearProgram::new(vec![1.0, 2.0, 0.0])
            .eq(vec![1.0, 1.0, 1.0], 1.0)
            .eq(vec![2.0, 2.0, 2.0], 2.0)
            .ub(vec![0.0, 1.0, 0.0], 0.25);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.value - 1.25).abs() < 1e-12);
        assert!((s.x[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the largest-coefficient rule
        let lp = LinearProgram::new(vec![0.75, -150.0, 0.02, -6.0])
            .ub(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .ub(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .ub(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = simplex_solve(&lp).unwrap();
        assert!((s.value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let lp = LinearProgram::new(vec![1.0, 0.0]).eq(vec![1.0], 1.0);
        assert!(matches!(simplex_solve(&lp), Err(LpError::Dimension(_))));
    }
}
