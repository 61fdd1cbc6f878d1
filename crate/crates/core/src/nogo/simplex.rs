//! Dense phase-one simplex for small feasibility problems.
//!
//! Decides whether `{x ≥ 0 : A x = b}` is nonempty by minimizing the sum of
//! one artificial variable per row. Pivoting follows Bland's rule (lowest
//! eligible index enters, ties in the ratio test go to the lowest basic
//! index), which rules out cycling on degenerate problems such as the
//! rank-deficient equality systems of the local polytope.

const PIVOT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    /// A point satisfying the constraints (up to rounding).
    Feasible(Vec<f64>),
    /// Optimal phase-one objective; strictly positive means infeasible.
    Infeasible { residual: f64 },
}

/// `a` is row major with `m` rows of `n` entries. A problem is declared
/// feasible when the phase-one optimum is at most `tol`.
pub fn phase_one(a: &[Vec<f64>], b: &[f64], tol: f64) -> Feasibility {
    let m = a.len();
    assert_eq!(m, b.len(), "row count mismatch");
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1; // structural, artificial, rhs
    let rhs = width - 1;

    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for (row, &bi) in a.iter().zip(b) {
        assert_eq!(row.len(), n, "ragged constraint matrix");
        let s = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; width];
        for (j, v) in row.iter().enumerate() {
            r[j] = s * v;
        }
        r[n + t.len()] = 1.0;
        r[rhs] = s * bi;
        t.push(r);
    }
    // Reduced costs for minimizing the artificial sum: c_j - sum of rows.
    let mut cost = vec![0.0; width];
    for j in n..n + m {
        cost[j] = 1.0;
    }
    for r in &t {
        for j in 0..width {
            cost[j] -= r[j];
        }
    }
    t.push(cost);
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(enter) = (0..rhs).find(|&j| t[m][j] < -PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[i][enter];
            if coef > PIVOT_EPS {
                let ratio = t[i][rhs] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best - PIVOT_EPS || ((ratio - best).abs() <= PIVOT_EPS && basis[i] < basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
        }
        // Phase one is bounded below by zero, so an entering column always
        // has a positive entry; bail out defensively on numerical noise.
        let Some((row, _)) = leave else { break };
        pivot(&mut t, row, enter);
        basis[row] = enter;
    }

    let objective = -t[m][rhs];
    if objective > tol {
        return Feasibility::Infeasible { residual: objective };
    }
    let mut x = vec![0.0; n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[i][rhs].max(0.0);
        }
    }
    Feasibility::Feasible(x)
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
}
