//! Fixed-step integration with post-step coordinate projection.

use nalgebra::{DMatrix, DVector, SVector};

use super::dynamics::{
    cable_tensions, eval_constraints, eval_constraints_full, eval_jacobian_full,
    solve_accelerations, MOTOR_ROW, NC_FULL,
};
use super::params::PlantParams;
use super::state::{QVec, SystemState, BODY1, BODY2, NQ};
use super::MultibodyError;
use crate::motion::MotionProfile;

/// Constraint residual enforced by the post-step projection.
const PROJECTION_TOL: f64 = 1e-11;
const PROJECTION_MAX_ITER: usize = 25;

/// Level-hang assembly: body 1 at the origin with axes aligned to the global
/// frame, the belt level directly below it at the unique drop admitted by the
/// cable lengths, anchors aligned under the arms, everything at rest.
pub fn build_initial_state(p: &PlantParams) -> Result<SystemState, MultibodyError> {
    p.validate()?;
    let l = p.cable_lengths[0];
    let spread = (p.cable_lengths[1] - l).abs().max((p.cable_lengths[2] - l).abs());
    if spread > 1e-12 * l.max(1.0) {
        return Err(MultibodyError::InfeasibleGeometry(format!(
            "level hang requires equal cable lengths, got {:?}",
            p.cable_lengths
        )));
    }
    let dr = p.arm_radius - p.belt_radius;
    let drop_sq = l * l - dr * dr;
    if drop_sq <= 0.0 {
        return Err(MultibodyError::InfeasibleGeometry(format!(
            "cables of length {l} m cannot span the radial offset {} m",
            dr.abs()
        )));
    }
    let mut q = QVec::zeros();
    q[BODY2 + 2] = -drop_sq.sqrt();
    // rotate the belt so its anchors sit under the arms regardless of the
    // buckle angle
    q[BODY2 + 5] = -p.buckle_angle;
    let state = SystemState::new(q, QVec::zeros());
    debug_assert!(eval_constraints(&state, p).amax() < 1e-12);
    Ok(state)
}

/// Locally quadratic model of the motor trajectory over one step.
#[derive(Debug, Clone, Copy)]
pub struct MotorSegment {
    pub alpha: f64,
    pub alpha_dot: f64,
    pub alpha_ddot: f64,
}

impl MotorSegment {
    pub fn at_rest(alpha: f64) -> Self {
        Self {
            alpha,
            alpha_dot: 0.0,
            alpha_ddot: 0.0,
        }
    }

    fn alpha_at(&self, tau: f64) -> f64 {
        self.alpha + self.alpha_dot * tau + 0.5 * self.alpha_ddot * tau * tau
    }

    fn alpha_dot_at(&self, tau: f64) -> f64 {
        self.alpha_dot + self.alpha_ddot * tau
    }
}

/// Advance one fixed RK4 step with prescribed motor motion, then project the
/// coordinates and velocities back onto the constraint manifold.
pub fn step(
    state: &SystemState,
    p: &PlantParams,
    alpha: f64,
    alpha_dot: f64,
    alpha_ddot: f64,
    dt: f64,
) -> Result<SystemState, MultibodyError> {
    if !(dt > 0.0) {
        return Err(MultibodyError::InvalidParams(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let motor = MotorSegment {
        alpha,
        alpha_dot,
        alpha_ddot,
    };
    step_segment(state, p, &motor, dt)
}

/// One RK4 step followed by projection; the motor follows `motor` over
/// `tau in [0, dt]`.
pub(crate) fn step_segment(
    state: &SystemState,
    p: &PlantParams,
    motor: &MotorSegment,
    dt: f64,
) -> Result<SystemState, MultibodyError> {
    let deriv = |s: &SystemState, tau: f64| -> Result<(QVec, QVec), MultibodyError> {
        let ws = solve_accelerations(s, p, motor.alpha_ddot)?;
        let _ = tau;
        Ok((s.qdot, ws.qddot))
    };

    let (k1q, k1v) = deriv(state, 0.0)?;
    let mid1 = SystemState::new(state.q + k1q * (dt / 2.0), state.qdot + k1v * (dt / 2.0));
    let (k2q, k2v) = deriv(&mid1, dt / 2.0)?;
    let mid2 = SystemState::new(state.q + k2q * (dt / 2.0), state.qdot + k2v * (dt / 2.0));
    let (k3q, k3v) = deriv(&mid2, dt / 2.0)?;
    let end = SystemState::new(state.q + k3q * dt, state.qdot + k3v * dt);
    let (k4q, k4v) = deriv(&end, dt)?;

    let q = state.q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (dt / 6.0);
    let qdot = state.qdot + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
    let mut next = SystemState::new(q, qdot);

    project_position(&mut next, p, motor.alpha_at(dt))?;
    project_velocity(&mut next, p, motor.alpha_dot_at(dt));
    Ok(next)
}

/// Gauss-Newton projection of the coordinates onto `c(q) = 0` with the motor
/// row held at `alpha`.
pub(crate) fn project_position(
    state: &mut SystemState,
    p: &PlantParams,
    alpha: f64,
) -> Result<(), MultibodyError> {
    for _ in 0..PROJECTION_MAX_ITER {
        let c = eval_constraints_full(state, p, alpha);
        if c.amax() < PROJECTION_TOL {
            return Ok(());
        }
        let jac = eval_jacobian_full(state, p);
        let jjt = jac * jac.transpose();
        let delta = match jjt.cholesky() {
            Some(ch) => jac.transpose() * ch.solve(&(-c)),
            None => {
                return Err(MultibodyError::ProjectionFailed(
                    "constraint Jacobian is rank deficient".into(),
                ))
            }
        };
        state.q += delta;
    }
    Err(MultibodyError::ProjectionFailed(format!(
        "no convergence in {PROJECTION_MAX_ITER} iterations (residual {:.3e})",
        eval_constraints_full(state, p, alpha).amax()
    )))
}

/// Project velocities onto the velocity-level constraints
/// `Jc qdot = d/dt` terms, which only the motor row carries.
pub(crate) fn project_velocity(state: &mut SystemState, p: &PlantParams, alpha_dot: f64) {
    let jac = eval_jacobian_full(state, p);
    let mut rhs = SVector::<f64, NC_FULL>::zeros();
    rhs[MOTOR_ROW] = alpha_dot;
    let defect = rhs - jac * state.qdot;
    let jjt = jac * jac.transpose();
    if let Some(ch) = jjt.cholesky() {
        state.qdot += jac.transpose() * ch.solve(&defect);
    }
}

/// Time histories produced by [`simulate`].
#[derive(Debug, Clone)]
pub struct SimOutput {
    /// Uniform integrator time grid, seconds.
    pub time: Vec<f64>,
    /// Commanded motor position on the grid, radians.
    pub alpha: Vec<f64>,
    /// Torsion angle of the buckle about the vertical axis, unwrapped,
    /// radians.
    pub eps2: Vec<f64>,
    /// Belt nutation angle, radians.
    pub theta2: Vec<f64>,
    /// Cable tensions, newtons.
    pub tension: [Vec<f64>; 3],
    /// Largest holonomic constraint residual seen after any accepted step.
    pub max_constraint_residual: f64,
    /// Smallest cable tension seen; negative values indicate the rigid-cable
    /// assumption was violated (flagged, not an error).
    pub min_tension: f64,
    /// Full state trace, recorded when requested.
    pub states: Option<Vec<SystemState>>,
}

impl SimOutput {
    pub fn compression_flagged(&self) -> bool {
        self.min_tension < 0.0
    }

    /// Sampling period of the trace.
    pub fn dt(&self) -> f64 {
        if self.time.len() > 1 {
            self.time[1] - self.time[0]
        } else {
            0.0
        }
    }
}

/// Integrate the plant along a commanded motor profile.
///
/// The profile is interpolated linearly between its samples; the integrator
/// step must divide the profile sampling period so segment boundaries align
/// with step boundaries. The torsion output is the azimuth of the buckle
/// point, unwrapped to a continuous signal; it is never derived from Euler
/// angles.
pub fn simulate(
    profile: &MotionProfile,
    state0: &SystemState,
    p: &PlantParams,
    dt: f64,
    record_states: bool,
) -> Result<SimOutput, MultibodyError> {
    if profile.alpha.is_empty() {
        return Err(MultibodyError::InvalidParams("empty motion profile".into()));
    }
    let substeps = (profile.ts / dt).round() as usize;
    if substeps == 0 || (profile.ts - substeps as f64 * dt).abs() > 1e-9 * profile.ts {
        return Err(MultibodyError::InvalidParams(format!(
            "integrator step {dt} must divide the profile period {}",
            profile.ts
        )));
    }

    let n_steps = (profile.alpha.len() - 1) * substeps;
    let mut out = SimOutput {
        time: Vec::with_capacity(n_steps + 1),
        alpha: Vec::with_capacity(n_steps + 1),
        eps2: Vec::with_capacity(n_steps + 1),
        theta2: Vec::with_capacity(n_steps + 1),
        tension: [
            Vec::with_capacity(n_steps + 1),
            Vec::with_capacity(n_steps + 1),
            Vec::with_capacity(n_steps + 1),
        ],
        max_constraint_residual: 0.0,
        min_tension: f64::INFINITY,
        states: record_states.then(Vec::new),
    };

    let buckle = p.buckle_point();
    let mut state = state0.clone();
    let mut prev_azimuth: Option<f64> = None;
    let mut unwrap_offset = 0.0;

    let record = |state: &SystemState,
                      t: f64,
                      alpha: f64,
                      out: &mut SimOutput,
                      prev_azimuth: &mut Option<f64>,
                      unwrap_offset: &mut f64|
     -> Result<(), MultibodyError> {
        let ws = solve_accelerations(state, p, 0.0)?;
        let tensions = cable_tensions(&ws);
        let p2 = state.point_position(BODY2, &buckle);
        let azimuth = p2.y.atan2(p2.x);
        if let Some(prev) = *prev_azimuth {
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut d = azimuth + *unwrap_offset - prev;
            while d > std::f64::consts::PI {
                *unwrap_offset -= two_pi;
                d -= two_pi;
            }
            while d < -std::f64::consts::PI {
                *unwrap_offset += two_pi;
                d += two_pi;
            }
        }
        let eps2 = azimuth + *unwrap_offset;
        *prev_azimuth = Some(eps2);

        out.time.push(t);
        out.alpha.push(alpha);
        out.eps2.push(eps2);
        out.theta2.push(state.belt_nutation());
        for (k, tr) in out.tension.iter_mut().enumerate() {
            tr.push(tensions[k]);
            out.min_tension = out.min_tension.min(tensions[k]);
        }
        let residual = eval_constraints(state, p).amax();
        out.max_constraint_residual = out.max_constraint_residual.max(residual);
        if let Some(states) = out.states.as_mut() {
            states.push(state.clone());
        }
        Ok(())
    };

    record(
        &state,
        0.0,
        profile.alpha[0],
        &mut out,
        &mut prev_azimuth,
        &mut unwrap_offset,
    )?;

    for seg in 0..profile.alpha.len() - 1 {
        let a0 = profile.alpha[seg];
        let a1 = profile.alpha[seg + 1];
        let slope = (a1 - a0) / profile.ts;
        // the commanded rate jumps at segment boundaries; realign the
        // velocity-level constraint before integrating into the segment
        project_velocity(&mut state, p, slope);
        for sub in 0..substeps {
            let tau0 = sub as f64 * dt;
            let motor = MotorSegment {
                alpha: a0 + slope * tau0,
                alpha_dot: slope,
                alpha_ddot: 0.0,
            };
            state = step_segment(&state, p, &motor, dt)?;
            let t = (seg * substeps + sub + 1) as f64 * dt;
            let alpha_cmd = a0 + slope * (tau0 + dt);
            record(
                &state,
                t,
                alpha_cmd,
                &mut out,
                &mut prev_azimuth,
                &mut unwrap_offset,
            )?;
        }
    }
    Ok(out)
}

/// Rest pose of the plant with the motor held at `alpha`.
///
/// Newton iteration on the stationarity conditions over the constraint
/// manifold: find q and multipliers mu with `gradV(q) + Jc^T mu = 0` and
/// `c(q) = 0`. The Jacobian of the system is formed by finite differences;
/// this runs once per scenario, not inside the integration loop.
pub fn find_equilibrium(p: &PlantParams, alpha: f64) -> Result<SystemState, MultibodyError> {
    let mut state = build_initial_state(p)?;
    // pre-rotate both bodies so Newton starts near the rotated rest pose
    state.q[BODY1 + 5] = alpha;
    state.q[BODY2 + 5] += alpha;
    project_position(&mut state, p, alpha)?;

    let n = NQ + NC_FULL;
    let residual = |q: &QVec, mu: &DVector<f64>| -> DVector<f64> {
        let s = SystemState::new(*q, QVec::zeros());
        let grad_v = -super::dynamics::applied_forces(&s, p);
        let jac = eval_jacobian_full(&s, p);
        let mut r = DVector::zeros(n);
        for i in 0..NQ {
            let mut v = grad_v[i];
            for k in 0..NC_FULL {
                v += jac[(k, i)] * mu[k];
            }
            r[i] = v;
        }
        let c = eval_constraints_full(&s, p, alpha);
        for k in 0..NC_FULL {
            r[NQ + k] = c[k];
        }
        r
    };

    // least-squares multipliers at the starting pose
    let jac0 = eval_jacobian_full(&state, p);
    let grad0 = -super::dynamics::applied_forces(&state, p);
    let jjt = jac0 * jac0.transpose();
    let mut mu = DVector::zeros(NC_FULL);
    if let Some(ch) = jjt.cholesky() {
        let sol = ch.solve(&(jac0 * (-grad0)));
        for k in 0..NC_FULL {
            mu[k] = sol[k];
        }
    }

    let mut q = state.q;
    let h = 1e-6;
    for _ in 0..50 {
        let r = residual(&q, &mu);
        if r.amax() < 1e-12 {
            let mut eq = SystemState::new(q, QVec::zeros());
            project_position(&mut eq, p, alpha)?;
            return Ok(eq);
        }
        let mut jac_sys = DMatrix::zeros(n, n);
        for col in 0..NQ {
            let mut hi = q;
            let mut lo = q;
            hi[col] += h;
            lo[col] -= h;
            let d = (residual(&hi, &mu) - residual(&lo, &mu)) / (2.0 * h);
            jac_sys.column_mut(col).copy_from(&d);
        }
        for col in 0..NC_FULL {
            let mut hi = mu.clone();
            let mut lo = mu.clone();
            hi[col] += h;
            lo[col] -= h;
            let d = (residual(&q, &hi) - residual(&q, &lo)) / (2.0 * h);
            jac_sys.column_mut(NQ + col).copy_from(&d);
        }
        let delta = jac_sys
            .lu()
            .solve(&(-r))
            .ok_or_else(|| MultibodyError::SingularKkt("equilibrium Newton step".into()))?;
        for i in 0..NQ {
            q[i] += delta[i];
        }
        for k in 0..NC_FULL {
            mu[k] += delta[NQ + k];
        }
    }
    Err(MultibodyError::ProjectionFailed(
        "equilibrium search did not converge".into(),
    ))
}

/// Perturb a state and project it back onto the constraint manifold; used to
/// seed free-decay experiments.
pub fn perturbed_release(
    base: &SystemState,
    p: &PlantParams,
    twist: f64,
    lateral: f64,
) -> Result<SystemState, MultibodyError> {
    let mut state = base.clone();
    state.q[BODY2 + 5] += twist;
    state.q[BODY2] += lateral;
    state.qdot = QVec::zeros();
    let alpha = state.q[BODY1 + 5];
    project_position(&mut state, p, alpha)?;
    Ok(state)
}
