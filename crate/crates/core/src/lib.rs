//! Motion control toolkit for a cable-suspended rotating belt.
//!
//! The crate covers the full pipeline of the installation's motion stack:
//!
//! - [`multibody`]: first-principles index-1 DAE model of the two-body
//!   cable-suspended system with prescribed motor motion,
//! - [`modal`]: numerical extraction of the two dominant oscillatory modes
//!   and empirical frequency responses,
//! - [`shaper`]: input-shaping FIR filters and the residual-vibration
//!   sensitivity function,
//! - [`optim`]: LP-feasibility minimum-duration search and the H2-optimal
//!   shaper-smoother QP,
//! - [`motion`]: point-to-point planning strategies and the firmware-style
//!   command pipeline,
//! - [`io`]: CSV exchange formats.

pub mod io;
pub mod modal;
pub mod motion;
pub mod multibody;
pub mod optim;
pub mod shaper;

pub use modal::ModalSet;
pub use motion::MotionProfile;
pub use multibody::{PlantParams, SimOutput, SystemState};
pub use optim::DesignRequest;
pub use shaper::ShaperFir;
