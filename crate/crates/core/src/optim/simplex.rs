//! Dense two-phase simplex for small equality-constrained problems
//! `min c'x  s.t.  A x = b, x >= 0`.
//!
//! Pivoting uses Dantzig's rule (most negative reduced cost, lowest index on
//! ties) and falls back to Bland's rule permanently once the objective stops
//! improving, which keeps the pivot sequence deterministic and terminating on
//! the heavily degenerate zero-vibration systems (eight of nine right-hand
//! sides are zero). The returned basic solution is re-solved against the
//! original matrix, so accumulated tableau drift never reaches the caller.

use nalgebra::{DMatrix, DVector};

use super::OptimError;

/// Pivot entries smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-10;
/// Iterations without objective progress before switching to Bland's rule.
const STALL_WINDOW: usize = 200;

pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
}

/// Feasibility via phase 1 only: returns a basic feasible point when one
/// exists.
pub fn feasible_point(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
) -> Result<Option<DVector<f64>>, OptimError> {
    let mut t = Tableau::phase1(a, b);
    t.run()?;
    if t.objective() > tol {
        return Ok(None);
    }
    Ok(Some(t.extract(a, b)))
}

/// Full two-phase minimization. Returns None when infeasible.
pub fn minimize(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
) -> Result<Option<LpSolution>, OptimError> {
    assert_eq!(c.len(), a.ncols());
    let mut t = Tableau::phase1(a, b);
    t.run()?;
    if t.objective() > tol {
        return Ok(None);
    }
    t.to_phase2(c);
    t.run()?;
    let x = t.extract(a, b);
    let objective = c.dot(&x);
    Ok(Some(LpSolution { x, objective }))
}

#[derive(PartialEq)]
enum PivotRule {
    Dantzig,
    Bland,
}

/// Row-major dense tableau with the objective row kept separately.
struct Tableau {
    /// Constraint rows, n_real + n_artificial + 1 (rhs) wide.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row.
    cost: Vec<f64>,
    /// Negated running objective value.
    cost_rhs: f64,
    /// Basic variable of each row.
    basis: Vec<usize>,
    n_real: usize,
    n_total: usize,
    phase_one: bool,
}

impl Tableau {
    fn phase1(a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let m = a.nrows();
        let n = a.ncols();
        let n_total = n + m;
        let width = n_total + 1;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            // equilibrate and orient each row so the artificial starts
            // feasible
            let mut scale = b[i].abs();
            for j in 0..n {
                scale = scale.max(a[(i, j)].abs());
            }
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for j in 0..n {
                row[j] = flip * a[(i, j)] / scale;
            }
            row[n + i] = 1.0;
            row[n_total] = flip * b[i] / scale;
            rows.push(row);
            basis.push(n + i);
        }

        // phase-1 cost (sum of artificials) priced out in the nonbasics
        let mut cost = vec![0.0; width];
        let mut cost_rhs = 0.0;
        for row in &rows {
            for j in 0..n {
                cost[j] -= row[j];
            }
            cost_rhs -= row[n_total];
        }
        Self {
            rows,
            cost,
            cost_rhs,
            basis,
            n_real: n,
            n_total,
            phase_one: true,
        }
    }

    fn objective(&self) -> f64 {
        -self.cost_rhs
    }

    /// Swap in the real objective after a successful phase 1. Artificials
    /// still basic at zero level are pivoted out where possible; rows that
    /// cannot be cleared are redundant and dropped.
    fn to_phase2(&mut self, c: &DVector<f64>) {
        let n = self.n_real;
        let mut drop_rows: Vec<usize> = Vec::new();
        for i in 0..self.rows.len() {
            if self.basis[i] >= n {
                match (0..n).find(|&j| self.rows[i][j].abs() > PIVOT_TOL) {
                    Some(j) => self.pivot(i, j),
                    None => drop_rows.push(i),
                }
            }
        }
        for &i in drop_rows.iter().rev() {
            self.rows.remove(i);
            self.basis.remove(i);
        }

        self.phase_one = false;
        let width = self.n_total + 1;
        self.cost = vec![0.0; width];
        self.cost_rhs = 0.0;
        for j in 0..n {
            self.cost[j] = c[j];
        }
        for (i, &bv) in self.basis.iter().enumerate() {
            let coeff = self.cost[bv];
            if coeff != 0.0 {
                let row = self.rows[i].clone();
                for j in 0..width - 1 {
                    self.cost[j] -= coeff * row[j];
                }
                self.cost_rhs -= coeff * row[self.n_total];
            }
        }
    }

    fn run(&mut self) -> Result<(), OptimError> {
        let max_iter = 500 * (self.rows.len() + self.n_total) + 2000;
        let mut rule = PivotRule::Dantzig;
        let mut best = self.objective();
        let mut stalled = 0usize;
        for _ in 0..max_iter {
            let enter = match self.entering(&rule) {
                Some(j) => j,
                None => return Ok(()),
            };
            let leave = self.leaving(enter).ok_or(OptimError::Unbounded)?;
            self.pivot(leave, enter);

            let now = self.objective();
            if now < best - 1e-13 * (1.0 + best.abs()) {
                best = now;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > STALL_WINDOW && rule == PivotRule::Dantzig {
                    rule = PivotRule::Bland;
                }
            }
        }
        Err(OptimError::Cycling)
    }

    /// Artificial columns never re-enter in phase 2.
    fn entering(&self, rule: &PivotRule) -> Option<usize> {
        let limit = if self.phase_one {
            self.n_total
        } else {
            self.n_real
        };
        match rule {
            PivotRule::Bland => (0..limit).find(|&j| self.cost[j] < -PIVOT_TOL),
            PivotRule::Dantzig => {
                let mut best: Option<(f64, usize)> = None;
                for j in 0..limit {
                    let c = self.cost[j];
                    if c < -PIVOT_TOL && best.map_or(true, |(bc, _)| c < bc) {
                        best = Some((c, j));
                    }
                }
                best.map(|(_, j)| j)
            }
        }
    }

    /// Ratio test; ties resolve to the row whose basic variable has the
    /// lowest index.
    fn leaving(&self, enter: usize) -> Option<usize> {
        let rhs_col = self.n_total;
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let coeff = row[enter];
            if coeff > PIVOT_TOL {
                let ratio = row[rhs_col].max(0.0) / coeff;
                let candidate = (ratio, self.basis[i], i);
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        if ratio < cur.0 - PIVOT_TOL
                            || (ratio < cur.0 + PIVOT_TOL && candidate.1 < cur.1)
                        {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        best.map(|(_, _, i)| i)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.n_total + 1;
        let pivot = self.rows[row][col];
        for j in 0..width {
            self.rows[row][j] /= pivot;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row && r[col] != 0.0 {
                let f = r[col];
                for j in 0..width {
                    r[j] -= f * pivot_row[j];
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for j in 0..width - 1 {
                self.cost[j] -= f * pivot_row[j];
            }
            self.cost_rhs -= f * pivot_row[self.n_total];
        }
        self.basis[row] = col;
    }

    /// Basic solution re-solved against the original system to shed any
    /// accumulated tableau drift.
    fn extract(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = a.ncols();
        let mut x = DVector::zeros(n);
        let real_basics: Vec<(usize, usize)> = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &bv)| bv < n)
            .map(|(i, &bv)| (i, bv))
            .collect();

        let k = real_basics.len();
        let mut basis_cols = DMatrix::zeros(a.nrows(), k);
        for (col, &(_, bv)) in real_basics.iter().enumerate() {
            basis_cols.column_mut(col).copy_from(&a.column(bv));
        }
        let svd = basis_cols.svd(true, true);
        let tol = svd.singular_values.max() * 1e-12;
        if let Ok(xb) = svd.solve(b, tol) {
            for (col, &(_, bv)) in real_basics.iter().enumerate() {
                x[bv] = xb[col].max(0.0);
            }
            return x;
        }
        // unreachable in practice; keep the tableau values as a fallback
        for &(i, bv) in &real_basics {
            x[bv] = self.rows[i][self.n_total].max(0.0);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn simple_feasible_system() {
        // x1 + x2 = 1 has plenty of nonnegative solutions
        let a = mat(&[&[1.0, 1.0]]);
        let b = DVector::from_vec(vec![1.0]);
        let x = feasible_point(&a, &b, 1e-9).unwrap().unwrap();
        assert_relative_eq!(x.sum(), 1.0, epsilon = 1e-12);
        assert!(x.min() >= 0.0);
    }

    #[test]
    fn infeasible_system_detected() {
        // x1 + x2 = 1 and x1 + x2 = 2 cannot both hold
        let a = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(feasible_point(&a, &b, 1e-9).unwrap().is_none());
    }

    #[test]
    fn negative_rhs_is_flipped() {
        let a = mat(&[&[-1.0, 0.0]]);
        let b = DVector::from_vec(vec![-3.0]);
        let x = feasible_point(&a, &b, 1e-9).unwrap().unwrap();
        assert_relative_eq!(x[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sign_constrained_objective() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1: optimum at x = (1, 0)
        let a = mat(&[&[1.0, 1.0]]);
        let b = DVector::from_vec(vec![1.0]);
        let c = DVector::from_vec(vec![1.0, 2.0]);
        let sol = minimize(&c, &a, &b, 1e-9).unwrap().unwrap();
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = mat(&[&[1.0, 1.0], &[2.0, 2.0]]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let x = feasible_point(&a, &b, 1e-9).unwrap().unwrap();
        assert_relative_eq!(x.sum(), 1.0, epsilon = 1e-12);

        let c = DVector::from_vec(vec![3.0, 1.0]);
        let sol = minimize(&c, &a, &b, 1e-9).unwrap().unwrap();
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // multiple degenerate vertices; the stall fallback must not cycle
        let a = mat(&[
            &[1.0, 1.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        let b = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let c = DVector::from_vec(vec![-1.0, -1.0, 0.0, 0.0]);
        let sol = minimize(&c, &a, &b, 1e-9).unwrap().unwrap();
        assert_relative_eq!(sol.objective, -1.0, epsilon = 1e-9);
    }
}
