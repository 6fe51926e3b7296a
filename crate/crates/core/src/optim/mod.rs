//! Shaper synthesis: feasibility, minimum duration and the H2-optimal
//! smoother.

pub mod qp;
pub mod simplex;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modal::ModalSet;
use crate::shaper::{ConstraintSystem, ShaperFir};

pub use qp::{KktReport, QpProblem};

/// Feasibility tolerance shared by the LP verdicts and the QP KKT checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Hard cap on the bisection upper bound, in multiples of the slow-mode
/// period.
const NMAX_PERIODS: usize = 10;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("LP did not terminate (cycling safeguard exceeded)")]
    Cycling,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("no feasible shaper up to n = {n_max} (cap {cap} samples)")]
    NoFeasibleLength { n_max: usize, cap: usize },
    #[error("monotone feasibility violated near n = {n}")]
    NonMonotone { n: usize },
    #[error("QP start is infeasible (residual {residual:.3e})")]
    InfeasibleStart { residual: f64 },
    #[error("{context}")]
    MaxIterations { context: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid design request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Modal(#[from] crate::modal::ModalError),
    #[error(transparent)]
    Shaper(#[from] crate::shaper::ShaperError),
}

/// Equality system with implicit nonnegativity bounds, with an optional
/// linear objective.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub a_eq: nalgebra::DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub objective: Option<DVector<f64>>,
}

impl LpProblem {
    pub fn feasibility(cs: &ConstraintSystem) -> Self {
        Self {
            a_eq: cs.a_eq.clone(),
            b_eq: cs.b_eq.clone(),
            objective: None,
        }
    }
}

/// Phase-1 verdict for the zero-vibration system; the witness satisfies every
/// constraint to within [`FEASIBILITY_TOL`].
pub fn lp_feasible(cs: &ConstraintSystem) -> Result<Option<DVector<f64>>, OptimError> {
    let witness = simplex::feasible_point(&cs.a_eq, &cs.b_eq, FEASIBILITY_TOL)?;
    if let Some(h) = &witness {
        debug_assert!(cs.residual(h) < FEASIBILITY_TOL);
    }
    Ok(witness)
}

/// Solve a general LP with optional objective; used by the harness and tests
/// to generate random feasible points.
pub fn lp_solve(problem: &LpProblem) -> Result<Option<DVector<f64>>, OptimError> {
    match &problem.objective {
        None => simplex::feasible_point(&problem.a_eq, &problem.b_eq, FEASIBILITY_TOL),
        Some(c) => Ok(
            simplex::minimize(c, &problem.a_eq, &problem.b_eq, FEASIBILITY_TOL)?
                .map(|sol| sol.x),
        ),
    }
}

/// Smallest filter length for which the zero-vibration system admits a
/// nonnegative unit-gain impulse sequence, found by bisection.
///
/// Feasibility is monotone in n (any feasible sequence zero-pads to a longer
/// one), which the result certifies by checking both n and n - 1.
pub fn find_nmin(modal: &ModalSet, ts: f64) -> Result<usize, OptimError> {
    modal.validate()?;
    if !(ts > 0.0) {
        return Err(OptimError::InvalidRequest(format!(
            "sampling period must be positive, got {ts}"
        )));
    }
    let feasible = |n: usize| -> Result<bool, OptimError> {
        Ok(lp_feasible(&ConstraintSystem::build(modal, n, ts))?.is_some())
    };

    let slow_period = (2.0 * std::f64::consts::PI / (modal.omega1 * ts)).ceil() as usize;
    let cap = NMAX_PERIODS * slow_period;

    let mut lo = 2usize; // largest length known infeasible (or the floor)
    if feasible(lo)? {
        return Ok(lo);
    }
    let mut hi = slow_period.max(lo + 1);
    while !feasible(hi)? {
        lo = hi;
        hi *= 2;
        if hi > cap {
            return Err(OptimError::NoFeasibleLength { n_max: hi, cap });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi > 2 && feasible(hi - 1)? {
        return Err(OptimError::NonMonotone { n: hi });
    }
    Ok(hi)
}

/// Shaper design request: modal set, sampling period and the smoothing factor
/// mapping the filter length from n_min (s_f = 0) to 2 n_min (s_f = 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DesignRequest {
    pub modal: ModalSet,
    pub ts: f64,
    pub smoothing: f64,
}

impl DesignRequest {
    pub fn validate(&self) -> Result<(), OptimError> {
        self.modal.validate()?;
        if !(self.ts > 0.0) {
            return Err(OptimError::InvalidRequest(format!(
                "sampling period must be positive, got {}",
                self.ts
            )));
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(OptimError::InvalidRequest(format!(
                "smoothing factor must lie in [0, 1], got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

/// Dual-mode robust shaper-smoother synthesis: build the nine-row system,
/// find the minimal duration by LP bisection, stretch it by the smoothing
/// factor and return the minimum-H2-norm impulse sequence from the QP.
pub fn design_shaper(req: &DesignRequest) -> Result<ShaperFir, OptimError> {
    req.validate()?;
    let n_min = find_nmin(&req.modal, req.ts)?;
    let n = n_min + (req.smoothing * n_min as f64).round() as usize;
    design_shaper_with_length(&req.modal, req.ts, n)
}

/// QP-optimal shaper at an explicit length; the building block of
/// [`design_shaper`] and of length-sweep studies.
pub fn design_shaper_with_length(
    modal: &ModalSet,
    ts: f64,
    n: usize,
) -> Result<ShaperFir, OptimError> {
    let cs = ConstraintSystem::build(modal, n, ts);
    let witness = lp_feasible(&cs)?.ok_or(OptimError::NoFeasibleLength {
        n_max: n,
        cap: n,
    })?;
    let qp = QpProblem {
        a_eq: cs.a_eq.clone(),
        b_eq: cs.b_eq.clone(),
    };
    let (h, report) = qp::solve(&qp, &witness)?;
    if report.stationarity > 1e-8
        || report.primal_feasibility > FEASIBILITY_TOL
        || report.complementarity > FEASIBILITY_TOL
    {
        return Err(OptimError::Numerical(format!(
            "QP terminated with weak KKT residuals: stationarity {:.2e}, \
             primal {:.2e}, complementarity {:.2e}",
            report.stationarity, report.primal_feasibility, report.complementarity
        )));
    }
    // exact unit gain; zero rows and nonnegativity are scale invariant
    let sum: f64 = h.iter().sum();
    let h: Vec<f64> = h.iter().map(|a| (a / sum).max(0.0)).collect();
    Ok(ShaperFir::new(ts, h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaper::{cos_row, sin_row};
    use nalgebra::DMatrix;

    #[test]
    fn dual_mode_system_is_infeasible_at_n2() {
        let m = ModalSet::undamped(2.58, 3.55).unwrap();
        let cs = ConstraintSystem::build(&m, 2, 0.01);
        assert!(lp_feasible(&cs).unwrap().is_none());
    }

    #[test]
    fn single_mode_zv_feasible_just_above_half_period() {
        // with only the cos, sin and gain rows, a ZV-style sequence exists
        // once the duration reaches half the mode period
        let omega = 4.0;
        let ts = 0.01;
        let half_period_samples = (std::f64::consts::PI / (omega * ts)).ceil() as usize + 1;
        let n = half_period_samples + 1;
        let mut a = DMatrix::zeros(3, n);
        for (j, v) in cos_row(omega, 0.0, n, ts).into_iter().enumerate() {
            a[(0, j)] = v;
        }
        for (j, v) in sin_row(omega, 0.0, n, ts).into_iter().enumerate() {
            a[(1, j)] = v;
        }
        for j in 0..n {
            a[(2, j)] = 1.0;
        }
        let b = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let x = simplex::feasible_point(&a, &b, FEASIBILITY_TOL).unwrap();
        assert!(x.is_some());
    }

    #[test]
    fn nmin_certificate_holds() {
        let m = ModalSet::undamped(2.58, 3.55).unwrap();
        let ts = 0.01;
        let n_min = find_nmin(&m, ts).unwrap();
        assert!(lp_feasible(&ConstraintSystem::build(&m, n_min, ts))
            .unwrap()
            .is_some());
        assert!(lp_feasible(&ConstraintSystem::build(&m, n_min - 1, ts))
            .unwrap()
            .is_none());
    }

    #[test]
    fn smoothing_factor_maps_length() {
        let m = ModalSet::undamped(2.58, 3.55).unwrap();
        let ts = 0.01;
        let n_min = find_nmin(&m, ts).unwrap();
        for (sf, expect) in [
            (0.0, n_min),
            (1.0, 2 * n_min),
            (0.5, n_min + (0.5 * n_min as f64).round() as usize),
        ] {
            let sh = design_shaper(&DesignRequest {
                modal: m,
                ts,
                smoothing: sf,
            })
            .unwrap();
            assert_eq!(sh.len(), expect, "sf = {sf}");
        }
    }

    #[test]
    fn request_validation() {
        let m = ModalSet::undamped(2.58, 3.55).unwrap();
        for bad in [-0.1, 1.1] {
            assert!(DesignRequest {
                modal: m,
                ts: 0.01,
                smoothing: bad
            }
            .validate()
            .is_err());
        }
        assert!(DesignRequest {
            modal: m,
            ts: -0.01,
            smoothing: 0.5
        }
        .validate()
        .is_err());
    }
}
