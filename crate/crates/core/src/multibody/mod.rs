//! First-principles model of the cable-suspended flying belt.
//!
//! Two rigid bodies: the motorized suspension unit (body 1), pinned to the
//! frame by a revolute joint about the vertical axis, and the belt (body 2),
//! hanging from it on three rigid cables. The motor angle is prescribed as a
//! rheonomic constraint, the resulting index-1 DAE is integrated with
//! classical RK4, and every accepted step is projected back onto the
//! constraint manifold.

mod dynamics;
mod integrator;
mod params;
pub mod rotation;
mod state;

use thiserror::Error;

pub use dynamics::{
    applied_forces, cable_tensions, eval_constraints, eval_constraints_full, eval_jacobian,
    eval_jacobian_full, mass_matrix, solve_accelerations, total_energy, velocity_forces,
    ConstraintJac, ConstraintVec, DaeWorkspace, MassMatrix, MOTOR_ROW, NC, NC_FULL,
};
pub use integrator::{
    build_initial_state, find_equilibrium, perturbed_release, simulate, step, MotorSegment,
    SimOutput,
};
pub use params::PlantParams;
pub use state::{BodyCoords, QVec, SystemState, BODY1, BODY2, NQ};

#[derive(Debug, Error)]
pub enum MultibodyError {
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("singular saddle-point system: {0}")]
    SingularKkt(String),
    #[error("constraint projection failed: {0}")]
    ProjectionFailed(String),
}
