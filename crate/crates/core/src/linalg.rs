//! Small dense helpers: Gaussian elimination solve and numerical rank.

/// Solves `a x = b` for square `a` (row-major, `n x n`) with partial pivoting.
/// Returns `None` when a pivot falls below `tol`.
pub(crate) fn solve(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < tol {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - tail) / m[row][row];
    }
    Some(x)
}

/// Numerical rank by Gaussian elimination with full pivoting. Entries whose
/// magnitude drops below `tol * max|a|` count as zero.
/// Gauss-Jordan inverse of a square matrix; `None` when a pivot falls
/// below `tol`.
pub(crate) fn inverse(a: &[Vec<f64>], tol: f64) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < tol {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= p);
        let prow = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col] == 0.0 {
                continue;
            }
            let f = row[col];
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub(crate) fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let nrows = m.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = m[0].len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let threshold = tol * scale;

    let mut rank = 0;
    let mut col_alive: Vec<bool> = vec![true; ncols];
    for r in 0..nrows.min(ncols) {
        // full pivot search over the remaining submatrix
        let mut best = (0usize, 0usize, 0.0_f64);
        for (i, row) in m.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate() {
                if col_alive[j] && v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        let (pi, pj, _) = best;
        m.swap(r, pi);
        col_alive[pj] = false;
        let pivot_row = m[r].clone();
        for row in m.iter_mut().skip(r + 1) {
            let factor = row[pj] / pivot_row[pj];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Stationary distribution of a row-stochastic matrix. `None` when the
/// balance system does not have a unique solution.
pub(crate) fn stationary_distribution(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    // rows of (I - P^T) sum to zero, so replace the last with normalization
    let mut a = vec![vec![0.0; n]; n];
    for (y, row) in a.iter_mut().enumerate().take(n - 1) {
        for (x, v) in row.iter_mut().enumerate() {
            *v = if x == y { 1.0 } else { 0.0 } - p[x][y];
        }
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let pi = solve(&a, &b, 1e-12)?;
    Some(pi.into_iter().map(|v| v.max(0.0)).collect())
}
