//! Primal active-set solver for the shaper-smoother problem
//! `min h'h  s.t.  A h = b, h >= 0`.
//!
//! The Hessian is twice the identity, so every equality-constrained
//! subproblem is a minimum-norm solve on the free variables: with the working
//! set W fixed at zero and F its complement, the subproblem optimum is
//! `h_F = A_F^T (A_F A_F^T)^+ b`. Iterates move along feasible segments
//! toward the subproblem optimum; blocking bounds join W, and bounds with a
//! negative multiplier leave it (lowest index first, which keeps the solver
//! deterministic and cycle-free).

use nalgebra::{DMatrix, DVector};

use super::{OptimError, FEASIBILITY_TOL};

/// The convex program: minimize `h' h` over `A_eq h = b_eq`, `h >= 0`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

/// Karush-Kuhn-Tucker residuals of the returned iterate.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub complementarity: f64,
    pub iterations: usize,
}

const ACTIVE_TOL: f64 = 1e-13;
const MULTIPLIER_TOL: f64 = 1e-10;

/// Solve from a feasible starting point (typically the phase-1 witness).
pub fn solve(qp: &QpProblem, start: &DVector<f64>) -> Result<(DVector<f64>, KktReport), OptimError> {
    let n = qp.a_eq.ncols();
    let m = qp.a_eq.nrows();
    assert_eq!(start.len(), n);

    let primal_residual = (&qp.a_eq * start - &qp.b_eq).amax();
    if primal_residual > 10.0 * FEASIBILITY_TOL || start.min() < -10.0 * FEASIBILITY_TOL {
        return Err(OptimError::InfeasibleStart {
            residual: primal_residual.max(-start.min()),
        });
    }

    let mut x = start.clone();
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut working: Vec<bool> = x.iter().map(|&v| v <= ACTIVE_TOL).collect();

    let max_iter = 20 * n + 200;
    for iter in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&j| !working[j]).collect();

        // minimum-norm subproblem on the free variables
        let mut a_free = DMatrix::zeros(m, free.len());
        for (col, &j) in free.iter().enumerate() {
            a_free.column_mut(col).copy_from(&qp.a_eq.column(j));
        }
        let svd = a_free.clone().svd(true, true);
        let max_sv = svd.singular_values.max();
        let rank_tol = max_sv * 1e-12;
        let x_free = svd
            .solve(&qp.b_eq, rank_tol)
            .map_err(|e| OptimError::Numerical(format!("QP subproblem SVD: {e}")))?;

        let mut target = DVector::zeros(n);
        for (col, &j) in free.iter().enumerate() {
            target[j] = x_free[col];
        }

        let min_target = free.iter().map(|&j| target[j]).fold(f64::INFINITY, f64::min);
        if free.is_empty() || min_target >= -ACTIVE_TOL {
            // candidate optimum for this working set; check bound multipliers
            for &j in &free {
                target[j] = target[j].max(0.0);
            }
            x = target;

            // equality multipliers from stationarity on the free variables:
            // 2 x_F = A_F' nu  =>  nu = 2 (A_F A_F')^+ A_F x_F
            let x_free_now = DVector::from_iterator(free.len(), free.iter().map(|&j| x[j]));
            let rhs = &a_free * &x_free_now;
            let gram = &a_free * a_free.transpose();
            let nu = gram
                .svd(true, true)
                .solve(&rhs, rank_tol.max(1e-300))
                .map_err(|e| OptimError::Numerical(format!("QP multiplier solve: {e}")))?
                * 2.0;

            let grad_minus_at = |j: usize| 2.0 * x[j] - qp.a_eq.column(j).dot(&nu);
            let blocking = (0..n)
                .filter(|&j| working[j])
                .find(|&j| grad_minus_at(j) < -MULTIPLIER_TOL);
            match blocking {
                Some(j) => {
                    working[j] = false;
                    continue;
                }
                None => {
                    let report = kkt_report(qp, &x, &nu, iter + 1);
                    return Ok((x, report));
                }
            }
        }

        // move toward the subproblem optimum until a bound blocks
        let mut beta = 1.0;
        let mut block: Option<usize> = None;
        for &j in &free {
            let d = target[j] - x[j];
            if d < -ACTIVE_TOL {
                let limit = x[j] / (-d);
                if limit < beta - 1e-15 {
                    beta = limit;
                    block = Some(j);
                }
            }
        }
        x = &x + (&target - &x) * beta;
        match block {
            Some(j) => {
                x[j] = 0.0;
                working[j] = true;
            }
            None => {
                // full step was feasible after all; loop re-checks optimality
            }
        }
    }
    Err(OptimError::MaxIterations {
        context: format!(
            "active-set QP did not converge in {max_iter} iterations \
             (n = {n}, working set size {})",
            working.iter().filter(|&&w| w).count()
        ),
    })
}

/// Minimum-norm solution of the equality-only problem `min h'h, A h = b`;
/// used directly and as the closed-form reference in tests.
pub fn solve_equality_only(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, OptimError> {
    let svd = a.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-12;
    svd.solve(b, tol)
        .map_err(|e| OptimError::Numerical(format!("equality QP SVD: {e}")))
}

fn kkt_report(qp: &QpProblem, x: &DVector<f64>, nu: &DVector<f64>, iterations: usize) -> KktReport {
    // mu = 2x - A' nu must be nonnegative with mu_j x_j = 0
    let mu = x * 2.0 - qp.a_eq.transpose() * nu;
    let stationarity = mu.iter().map(|&v| v.min(0.0).abs()).fold(0.0, f64::max);
    let primal = (&qp.a_eq * x - &qp.b_eq)
        .amax()
        .max(x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max));
    let complementarity = mu
        .iter()
        .zip(x.iter())
        .map(|(&m, &v)| (m * v).abs())
        .fold(0.0, f64::max);
    KktReport {
        stationarity,
        primal_feasibility: primal,
        complementarity,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_simplex_projection() {
        // min h'h s.t. sum h = 1, h >= 0 spreads mass evenly
        let a = DMatrix::from_element(1, 4, 1.0);
        let b = DVector::from_element(1, 1.0);
        let qp = QpProblem {
            a_eq: a,
            b_eq: b,
        };
        let start = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let (x, report) = solve(&qp, &start).unwrap();
        for &v in x.iter() {
            assert_relative_eq!(v, 0.25, epsilon = 1e-12);
        }
        assert!(report.stationarity < 1e-10);
        assert!(report.primal_feasibility < 1e-12);
        assert!(report.complementarity < 1e-12);
    }

    #[test]
    fn equality_only_matches_closed_form() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.5, -1.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 0.3]);
        let x = solve_equality_only(&a, &b).unwrap();
        // closed form: x = A' (A A')^-1 b
        let gram = &a * a.transpose();
        let expected = a.transpose() * gram.try_inverse().unwrap() * &b;
        assert_relative_eq!(x, expected, epsilon = 1e-10);
    }

    #[test]
    fn active_bound_gets_positive_multiplier() {
        // min h'h s.t. h1 - h2 = 1: unconstrained optimum has h2 < 0, so the
        // bound must activate and h = (1, 0)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let b = DVector::from_element(1, 1.0);
        let qp = QpProblem { a_eq: a, b_eq: b };
        let start = DVector::from_vec(vec![1.0, 0.0]);
        let (x, report) = solve(&qp, &start).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-12);
        assert!(report.stationarity < 1e-10);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let a = DMatrix::from_element(1, 3, 1.0);
        let b = DVector::from_element(1, 1.0);
        let qp = QpProblem { a_eq: a, b_eq: b };
        let start = DVector::from_vec(vec![5.0, 0.0, 0.0]);
        assert!(matches!(
            solve(&qp, &start),
            Err(OptimError::InfeasibleStart { .. })
        ));
    }
}
