//! Dense two-phase simplex for the tiny linear programs that show up in
//! set computations: least-infinity-norm zonotope membership and support
//! values over half-space polytopes.
//!
//! Problems here have at most a few hundred variables, so a plain tableau
//! with Bland's rule (no cycling, no scaling heuristics) is both adequate
//! and easy to audit.

use nalgebra::{DMatrix, DVector};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    /// Optimizer and optimal value.
    Optimal(DVector<f64>, f64),
    Infeasible,
    Unbounded,
}

/// min c'z  s.t.  A z = b, z >= 0.  Rows with negative b are negated up
/// front; phase 1 runs on artificial variables.
fn simplex_min(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpSolution {
    let m = a.nrows();
    let n = a.ncols();
    debug_assert_eq!(c.len(), n);
    debug_assert_eq!(b.len(), m);

    // tableau: columns [original n | artificial m | rhs]
    let width = n + m + 1;
    let mut t = DMatrix::zeros(m, width);
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = flip * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, width - 1)] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase-1 cost row: sum of artificials, canonicalized.
    let mut cost = vec![0.0; width];
    for j in n..n + m {
        cost[j] = 1.0;
    }
    for i in 0..m {
        for j in 0..width {
            cost[j] -= t[(i, j)];
        }
        cost[n + i] += 1.0; // keep artificial columns exact
    }

    if !run_simplex(&mut t, &mut cost, &mut basis, n + m) {
        return LpSolution::Unbounded; // cannot happen in phase 1
    }
    let phase1 = -cost[width - 1];
    if phase1 > 1e-7 {
        return LpSolution::Infeasible;
    }

    // drive leftover artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[(i, j)].abs() > TOL) {
                pivot(&mut t, &mut cost, &mut basis, i, j);
            }
        }
    }

    // phase-2 cost row
    let mut cost2 = vec![0.0; width];
    for j in 0..n {
        cost2[j] = c[j];
    }
    for i in 0..m {
        let j = basis[i];
        if j < n && cost2[j].abs() > 0.0 {
            let f = cost2[j];
            for k in 0..width {
                cost2[k] -= f * t[(i, k)];
            }
        }
    }

    if !run_simplex(&mut t, &mut cost2, &mut basis, n) {
        return LpSolution::Unbounded;
    }

    let mut x = DVector::zeros(n);
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[(i, width - 1)];
        }
    }
    let value = c.dot(&x);
    LpSolution::Optimal(x, value)
}

/// Bland-rule iterations on a canonical tableau. Columns >= `max_col` are
/// barred from entering. Returns false on unboundedness.
fn run_simplex(
    t: &mut DMatrix<f64>,
    cost: &mut [f64],
    basis: &mut [usize],
    max_col: usize,
) -> bool {
    let m = t.nrows();
    let width = t.ncols();
    loop {
        let entering = (0..max_col).find(|&j| cost[j] < -TOL);
        let Some(j) = entering else {
            return true;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let a = t[(i, j)];
            if a > TOL {
                let ratio = t[(i, width - 1)] / a;
                if ratio < best - TOL
                    || (ratio < best + TOL && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(i) = leave else {
            return false;
        };
        pivot(t, cost, basis, i, j);
    }
}

fn pivot(t: &mut DMatrix<f64>, cost: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let width = t.ncols();
    let p = t[(row, col)];
    for k in 0..width {
        t[(row, k)] /= p;
    }
    for i in 0..t.nrows() {
        if i != row {
            let f = t[(i, col)];
            if f != 0.0 {
                for k in 0..width {
                    t[(i, k)] -= f * t[(row, k)];
                }
            }
        }
    }
    let f = cost[col];
    if f != 0.0 {
        for k in 0..width {
            cost[k] -= f * t[(row, k)];
        }
    }
    basis[row] = col;
}

/// max c'x  s.t.  A x <= b, x free.
pub fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpSolution {
    let m = a.nrows();
    let n = a.ncols();
    // x = p - q, slack s: [A, -A, I] [p q s]' = b, minimize -c'(p - q)
    let mut a_std = DMatrix::zeros(m, 2 * n + m);
    for i in 0..m {
        for j in 0..n {
            a_std[(i, j)] = a[(i, j)];
            a_std[(i, n + j)] = -a[(i, j)];
        }
        a_std[(i, 2 * n + i)] = 1.0;
    }
    let mut c_std = DVector::zeros(2 * n + m);
    for j in 0..n {
        c_std[j] = -c[j];
        c_std[n + j] = c[j];
    }
    match simplex_min(&c_std, &a_std, b) {
        LpSolution::Optimal(z, _) => {
            let x = DVector::from_fn(n, |j, _| z[j] - z[n + j]);
            let value = c.dot(&x);
            LpSolution::Optimal(x, value)
        }
        other => other,
    }
}

/// min ||s||_inf  s.t.  G s = d.  Returns `(s, value)`; `None` when `d` is
/// not in the range of `G`.
pub fn min_infinity_norm(g: &DMatrix<f64>, d: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let n = g.nrows();
    let m = g.ncols();
    debug_assert_eq!(d.len(), n);
    if m == 0 {
        return if d.iter().all(|v| v.abs() <= TOL) {
            Some((DVector::zeros(0), 0.0))
        } else {
            None
        };
    }
    // variables: [s+ (m), s- (m), t, w (2m)]
    let nv = 2 * m + 1 + 2 * m;
    let rows = n + 2 * m;
    let mut a = DMatrix::zeros(rows, nv);
    let mut b = DVector::zeros(rows);
    for i in 0..n {
        for j in 0..m {
            a[(i, j)] = g[(i, j)];
            a[(i, m + j)] = -g[(i, j)];
        }
        b[i] = d[i];
    }
    let t_col = 2 * m;
    for j in 0..m {
        // s_j - t + w1_j = 0
        let r1 = n + j;
        a[(r1, j)] = 1.0;
        a[(r1, m + j)] = -1.0;
        a[(r1, t_col)] = -1.0;
        a[(r1, t_col + 1 + j)] = 1.0;
        // -s_j - t + w2_j = 0
        let r2 = n + m + j;
        a[(r2, j)] = -1.0;
        a[(r2, m + j)] = 1.0;
        a[(r2, t_col)] = -1.0;
        a[(r2, t_col + 1 + m + j)] = 1.0;
    }
    let mut c = DVector::zeros(nv);
    c[t_col] = 1.0;
    match simplex_min(&c, &a, &b) {
        LpSolution::Optimal(z, value) => {
            let s = DVector::from_fn(m, |j, _| z[j] - z[m + j]);
            Some((s, value))
        }
        _ => None,
    }
}
