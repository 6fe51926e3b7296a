//! Constraint equations, mass matrix and the index-1 saddle-point solve.
//!
//! The equations of motion are
//!
//! ```text
//! [ M   Jc^T ] [ qddot  ]   [ f_E + f_V ]
//! [ Jc   0   ] [ lambda ] = [ f_D       ]
//! ```
//!
//! with nine constraint rows: five locks pinning body 1 to a single rotation
//! about the vertical axis, three cable distance constraints, and one
//! rheonomic row prescribing the motor angle.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use super::params::PlantParams;
use super::rotation::{
    body_rate_map, body_rate_map_partials, rotation, rotation_partials, rotation_quadratic_rate,
    skew,
};
use super::state::{QVec, SystemState, BODY1, BODY2, NQ};
use super::MultibodyError;

/// Number of holonomic constraints exposed to callers (locks + cables).
pub const NC: usize = 8;
/// Total constraint rows including the prescribed motor angle.
pub const NC_FULL: usize = 9;
/// Index of the motor row.
pub const MOTOR_ROW: usize = 8;

const NKKT: usize = NQ + NC_FULL;

/// Pitch cosine below which the saddle-point solve falls back to an SVD
/// pseudo-inverse. Never reached while the belt hangs; guards edge-on poses.
const CHART_GUARD: f64 = 1e-6;

pub type ConstraintVec = SVector<f64, NC>;
pub type ConstraintJac = SMatrix<f64, NC, NQ>;
pub type FullJac = SMatrix<f64, NC_FULL, NQ>;
pub type MassMatrix = SMatrix<f64, NQ, NQ>;

/// Placeholder mass of body 1; inert because its translations are locked.
const BODY1_MASS: f64 = 1.0;
/// Placeholder roll/pitch inertia of body 1; inert because both are locked.
const BODY1_INERTIA_XY: f64 = 0.01;

/// Intermediate quantities of one evaluation of the equations of motion.
pub struct DaeWorkspace {
    pub mass: MassMatrix,
    pub constraints: SVector<f64, NC_FULL>,
    pub jacobian: FullJac,
    pub lambda: SVector<f64, NC_FULL>,
    pub applied_forces: QVec,
    pub velocity_forces: QVec,
    pub constraint_rhs: SVector<f64, NC_FULL>,
    pub qddot: QVec,
}

/// Residuals of the eight holonomic constraints, ordered: five body-1 locks
/// (X1, Y1, Z1, roll1, pitch1), then cables A, B, C.
pub fn eval_constraints(state: &SystemState, p: &PlantParams) -> ConstraintVec {
    let mut c = ConstraintVec::zeros();
    for k in 0..5 {
        c[k] = state.q[BODY1 + k];
    }
    let arms = p.arm_points();
    let anchors = p.belt_points();
    for j in 0..3 {
        let r1 = state.point_position(BODY1, &arms[j]);
        let r2 = state.point_position(BODY2, &anchors[j]);
        c[5 + j] = (r1 - r2).norm() - p.cable_lengths[j];
    }
    c
}

/// Jacobian of [`eval_constraints`] with respect to the twelve generalized
/// coordinates.
pub fn eval_jacobian(state: &SystemState, p: &PlantParams) -> ConstraintJac {
    let mut jac = ConstraintJac::zeros();
    for k in 0..5 {
        jac[(k, BODY1 + k)] = 1.0;
    }
    let arms = p.arm_points();
    let anchors = p.belt_points();
    let t1_parts = rotation_partials(&state.ypr(BODY1));
    let t2_parts = rotation_partials(&state.ypr(BODY2));
    for j in 0..3 {
        let r1 = state.point_position(BODY1, &arms[j]);
        let r2 = state.point_position(BODY2, &anchors[j]);
        let d = r1 - r2;
        let u = d / d.norm();
        let row = 5 + j;
        for k in 0..3 {
            jac[(row, BODY1 + k)] = u[k];
            jac[(row, BODY2 + k)] = -u[k];
        }
        for k in 0..3 {
            jac[(row, BODY1 + 3 + k)] = u.dot(&(t1_parts[k] * arms[j]));
            jac[(row, BODY2 + 3 + k)] = -u.dot(&(t2_parts[k] * anchors[j]));
        }
    }
    jac
}

/// Full nine-row residual including the motor row `yaw1 - alpha`.
pub fn eval_constraints_full(
    state: &SystemState,
    p: &PlantParams,
    alpha: f64,
) -> SVector<f64, NC_FULL> {
    let c8 = eval_constraints(state, p);
    let mut c = SVector::<f64, NC_FULL>::zeros();
    c.fixed_rows_mut::<NC>(0).copy_from(&c8);
    c[MOTOR_ROW] = state.q[BODY1 + 5] - alpha;
    c
}

/// Full nine-row Jacobian.
pub fn eval_jacobian_full(state: &SystemState, p: &PlantParams) -> FullJac {
    let j8 = eval_jacobian(state, p);
    let mut j = FullJac::zeros();
    j.fixed_rows_mut::<NC>(0).copy_from(&j8);
    j[(MOTOR_ROW, BODY1 + 5)] = 1.0;
    j
}

struct BodyInertia {
    mass: f64,
    /// Inertia about the referential point, body frame (parallel-axis shift
    /// of the center-of-mass inertia).
    inertia_ref: Matrix3<f64>,
    com: Vector3<f64>,
}

fn body_inertias(p: &PlantParams) -> [BodyInertia; 2] {
    let i1 = Matrix3::from_diagonal(&Vector3::new(
        BODY1_INERTIA_XY,
        BODY1_INERTIA_XY,
        p.mcsu_inertia_zz,
    ));
    let com2 = p.com_point();
    let sk = skew(&com2);
    let i2_com = Matrix3::from_diagonal(&Vector3::from(p.belt_inertia));
    let i2_ref = i2_com - (sk * sk) * p.belt_mass;
    [
        BodyInertia {
            mass: BODY1_MASS,
            inertia_ref: i1,
            com: Vector3::zeros(),
        },
        BodyInertia {
            mass: p.belt_mass,
            inertia_ref: i2_ref,
            com: com2,
        },
    ]
}

/// 6x6 body mass matrix and its partials w.r.t. the three angles.
fn body_mass(
    ypr: &Vector3<f64>,
    inertia: &BodyInertia,
) -> (SMatrix<f64, 6, 6>, [SMatrix<f64, 6, 6>; 3]) {
    let t = rotation(ypr);
    let dt = rotation_partials(ypr);
    let g = body_rate_map(ypr);
    let dg = body_rate_map_partials(ypr);
    let sk = skew(&inertia.com);
    let m = inertia.mass;

    let coupling = |t: &Matrix3<f64>, g: &Matrix3<f64>| -> Matrix3<f64> { -(t * sk * g) * m };

    let mut mm = SMatrix::<f64, 6, 6>::zeros();
    mm.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&Matrix3::from_diagonal_element(m));
    let m_rt = coupling(&t, &g);
    mm.fixed_view_mut::<3, 3>(0, 3).copy_from(&m_rt);
    mm.fixed_view_mut::<3, 3>(3, 0).copy_from(&m_rt.transpose());
    let m_tt = g.transpose() * inertia.inertia_ref * g;
    mm.fixed_view_mut::<3, 3>(3, 3).copy_from(&m_tt);

    let mut dmm = [SMatrix::<f64, 6, 6>::zeros(); 3];
    for k in 0..3 {
        let d_rt = coupling(&dt[k], &g) + coupling(&t, &dg[k]);
        let d_tt = dg[k].transpose() * inertia.inertia_ref * g
            + g.transpose() * inertia.inertia_ref * dg[k];
        dmm[k].fixed_view_mut::<3, 3>(0, 3).copy_from(&d_rt);
        dmm[k]
            .fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&d_rt.transpose());
        dmm[k].fixed_view_mut::<3, 3>(3, 3).copy_from(&d_tt);
    }
    (mm, dmm)
}

/// Assemble the 12x12 mass matrix.
pub fn mass_matrix(state: &SystemState, p: &PlantParams) -> MassMatrix {
    let inertias = body_inertias(p);
    let mut mm = MassMatrix::zeros();
    for (b, offset) in [(0, BODY1), (1, BODY2)] {
        let (mb, _) = body_mass(&state.ypr(offset), &inertias[b]);
        mm.fixed_view_mut::<6, 6>(offset, offset).copy_from(&mb);
    }
    mm
}

/// Gravity plus optional viscous damping, as generalized forces.
pub fn applied_forces(state: &SystemState, p: &PlantParams) -> QVec {
    let inertias = body_inertias(p);
    let mut f = QVec::zeros();
    for (b, offset) in [(0, BODY1), (1, BODY2)] {
        let inertia = &inertias[b];
        f[offset + 2] -= inertia.mass * p.gravity;
        let dt = rotation_partials(&state.ypr(offset));
        for k in 0..3 {
            f[offset + 3 + k] -= inertia.mass * p.gravity * (dt[k] * inertia.com).z;
        }
    }
    if p.damping_torsion > 0.0 || p.damping_nutation > 0.0 {
        let g = body_rate_map(&state.ypr(BODY2));
        let omega = g * state.ypr_rate(BODY2);
        let torque = Vector3::new(
            -p.damping_nutation * omega.x,
            -p.damping_nutation * omega.y,
            -p.damping_torsion * omega.z,
        );
        let gen_torque = g.transpose() * torque;
        for k in 0..3 {
            f[BODY2 + 3 + k] += gen_torque[k];
        }
    }
    f
}

/// Quadratic-velocity forces from the configuration dependence of the mass
/// matrix: `f_V[j] = 1/2 qdot^T dM/dq_j qdot - sum_k qdot_k (dM/dq_k qdot)[j]`.
pub fn velocity_forces(state: &SystemState, p: &PlantParams) -> QVec {
    let inertias = body_inertias(p);
    let mut f = QVec::zeros();
    for (b, offset) in [(0, BODY1), (1, BODY2)] {
        let (_, dmb) = body_mass(&state.ypr(offset), &inertias[b]);
        let v: SVector<f64, 6> = state.qdot.fixed_rows::<6>(offset).into_owned();
        for k in 0..3 {
            let dmv = dmb[k] * v;
            // dM/dtheta_k contributes +1/2 v'dM v to the theta_k slot and
            // -thetadot_k * dM v to every slot.
            f[offset + 3 + k] += 0.5 * v.dot(&dmv);
            let rate = v[3 + k];
            for j in 0..6 {
                f[offset + j] -= rate * dmv[j];
            }
        }
    }
    f
}

/// Right-hand side of the acceleration-level constraints, `Jc qddot = f_D`.
///
/// Lock rows are linear (zero), the motor row carries the prescribed
/// acceleration, and the cable rows absorb the quadratic-velocity terms of
/// the distance constraints.
pub fn constraint_rhs(
    state: &SystemState,
    p: &PlantParams,
    alpha_ddot: f64,
) -> SVector<f64, NC_FULL> {
    let mut rhs = SVector::<f64, NC_FULL>::zeros();
    rhs[MOTOR_ROW] = alpha_ddot;

    let arms = p.arm_points();
    let anchors = p.belt_points();
    let ypr1 = state.ypr(BODY1);
    let ypr2 = state.ypr(BODY2);
    let t1_parts = rotation_partials(&ypr1);
    let t2_parts = rotation_partials(&ypr2);
    let t1_quad = rotation_quadratic_rate(&ypr1, &state.ypr_rate(BODY1));
    let t2_quad = rotation_quadratic_rate(&ypr2, &state.ypr_rate(BODY2));

    let vel = |offset: usize, parts: &[Matrix3<f64>; 3], local: &Vector3<f64>| -> Vector3<f64> {
        let mut v = Vector3::new(
            state.qdot[offset],
            state.qdot[offset + 1],
            state.qdot[offset + 2],
        );
        for k in 0..3 {
            v += parts[k] * local * state.qdot[offset + 3 + k];
        }
        v
    };

    for j in 0..3 {
        let r1 = state.point_position(BODY1, &arms[j]);
        let r2 = state.point_position(BODY2, &anchors[j]);
        let d = r1 - r2;
        let len = d.norm();
        let u = d / len;
        let ddot = vel(BODY1, &t1_parts, &arms[j]) - vel(BODY2, &t2_parts, &anchors[j]);
        // point accelerations at zero generalized acceleration
        let eta = t1_quad * arms[j] - t2_quad * anchors[j];
        let gamma = (ddot.norm_squared() - u.dot(&ddot).powi(2)) / len + u.dot(&eta);
        rhs[5 + j] = -gamma;
    }
    rhs
}

/// Solve the saddle-point system for accelerations and multipliers.
pub fn solve_accelerations(
    state: &SystemState,
    p: &PlantParams,
    alpha_ddot: f64,
) -> Result<DaeWorkspace, MultibodyError> {
    let mass = mass_matrix(state, p);
    let jac = eval_jacobian_full(state, p);
    let f_e = applied_forces(state, p);
    let f_v = velocity_forces(state, p);
    let rhs_c = constraint_rhs(state, p, alpha_ddot);

    let mut kkt = SMatrix::<f64, NKKT, NKKT>::zeros();
    kkt.fixed_view_mut::<NQ, NQ>(0, 0).copy_from(&mass);
    kkt.fixed_view_mut::<NQ, NC_FULL>(0, NQ)
        .copy_from(&jac.transpose());
    kkt.fixed_view_mut::<NC_FULL, NQ>(NQ, 0).copy_from(&jac);

    let mut rhs = SVector::<f64, NKKT>::zeros();
    rhs.fixed_rows_mut::<NQ>(0).copy_from(&(f_e + f_v));
    rhs.fixed_rows_mut::<NC_FULL>(NQ).copy_from(&rhs_c);

    let near_gimbal = state.ypr(BODY2)[1].cos().abs() < CHART_GUARD
        || state.ypr(BODY1)[1].cos().abs() < CHART_GUARD;

    let sol = if near_gimbal {
        None
    } else {
        kkt.lu().solve(&rhs)
    };
    let sol = match sol {
        Some(x) => x,
        None => {
            // rank-revealing fallback; consistent systems get the
            // minimum-norm solution
            let svd = kkt.svd(true, true);
            let eps = svd.singular_values.max() * 1e-12;
            let x = svd
                .solve(&rhs, eps)
                .map_err(|e| MultibodyError::SingularKkt(format!("SVD solve failed: {e}")))?;
            let residual = (kkt * x - rhs).amax();
            let scale = rhs.amax().max(1.0);
            if residual > 1e-6 * scale {
                return Err(MultibodyError::SingularKkt(format!(
                    "saddle-point system inconsistent at q = {:?} (residual {residual:.3e})",
                    state.q
                )));
            }
            x
        }
    };

    let qddot: QVec = sol.fixed_rows::<NQ>(0).into_owned();
    let lambda: SVector<f64, NC_FULL> = sol.fixed_rows::<NC_FULL>(NQ).into_owned();
    Ok(DaeWorkspace {
        mass,
        constraints: eval_constraints_full(state, p, state.q[BODY1 + 5]),
        jacobian: jac,
        lambda,
        applied_forces: f_e,
        velocity_forces: f_v,
        constraint_rhs: rhs_c,
        qddot,
    })
}

/// Cable tensions from the multipliers of the three distance rows. Positive
/// values mean the cable pulls; negative values would mean compression.
pub fn cable_tensions(ws: &DaeWorkspace) -> [f64; 3] {
    [ws.lambda[5], ws.lambda[6], ws.lambda[7]]
}

/// Total mechanical energy: kinetic plus gravity potential.
pub fn total_energy(state: &SystemState, p: &PlantParams) -> f64 {
    let m = mass_matrix(state, p);
    let kinetic = 0.5 * state.qdot.dot(&(m * state.qdot));
    let inertias = body_inertias(p);
    let mut potential = 0.0;
    for (b, offset) in [(0, BODY1), (1, BODY2)] {
        let com_z = state.point_position(offset, &inertias[b].com).z;
        potential += inertias[b].mass * p.gravity * com_z;
    }
    kinetic + potential
}
