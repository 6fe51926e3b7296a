//! Generalized coordinates of the two-body system.

use nalgebra::{Matrix3, SVector, Vector3};

use super::rotation::{euler_zxz, rotation, Ypr};

/// Number of generalized coordinates (6 per body).
pub const NQ: usize = 12;

/// Coordinate layout of one body inside the 12-vector: translation of the
/// referential point followed by (roll, pitch, yaw).
pub const BODY1: usize = 0;
pub const BODY2: usize = 6;

pub type QVec = SVector<f64, NQ>;

/// Position and orientation of one body expressed with the classic
/// precession-nutation-spin Euler angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyCoords {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Precession about the global Z axis, radians.
    pub psi: f64,
    /// Nutation from the global Z axis, radians.
    pub theta: f64,
    /// Spin about the body z axis, radians.
    pub phi: f64,
}

/// Generalized coordinates and velocities of both bodies.
///
/// Internally the orientation of each body is stored as yaw-pitch-roll, which
/// is regular at the hanging equilibrium; [`SystemState::body_coords`] exposes
/// the precession-nutation-spin view.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub q: QVec,
    pub qdot: QVec,
}

impl SystemState {
    pub fn new(q: QVec, qdot: QVec) -> Self {
        Self { q, qdot }
    }

    pub fn position(&self, body: usize) -> Vector3<f64> {
        Vector3::new(self.q[body], self.q[body + 1], self.q[body + 2])
    }

    pub fn ypr(&self, body: usize) -> Ypr {
        Vector3::new(self.q[body + 3], self.q[body + 4], self.q[body + 5])
    }

    pub fn ypr_rate(&self, body: usize) -> Ypr {
        Vector3::new(self.qdot[body + 3], self.qdot[body + 4], self.qdot[body + 5])
    }

    /// Local-to-global rotation matrix of a body.
    pub fn rotation(&self, body: usize) -> Matrix3<f64> {
        rotation(&self.ypr(body))
    }

    /// Euler-angle view (precession, nutation, spin) of a body.
    pub fn body_coords(&self, body: usize) -> BodyCoords {
        let (psi, theta, phi) = euler_zxz(&self.rotation(body));
        BodyCoords {
            x: self.q[body],
            y: self.q[body + 1],
            z: self.q[body + 2],
            psi,
            theta,
            phi,
        }
    }

    /// Motor angle, i.e. the spin of body 1 about the vertical axis.
    pub fn motor_angle(&self) -> f64 {
        self.q[BODY1 + 5]
    }

    /// Nutation angle of the belt, computed from the rotation matrix.
    pub fn belt_nutation(&self) -> f64 {
        let t = self.rotation(BODY2);
        let st = (t[(2, 0)] * t[(2, 0)] + t[(2, 1)] * t[(2, 1)]).sqrt();
        st.atan2(t[(2, 2)])
    }

    /// Global position of an arbitrary body-fixed point.
    pub fn point_position(&self, body: usize, local: &Vector3<f64>) -> Vector3<f64> {
        self.position(body) + self.rotation(body) * local
    }
}
