//! Elementary rotations, the yaw-pitch-roll body chart and its derivatives.
//!
//! Body orientation is parameterised as `T = Rz(yaw) * Ry(pitch) * Rx(roll)`,
//! which is regular everywhere except pitch = ±90°. The hanging belt operates
//! near roll = pitch = 0, so the chart stays well conditioned throughout a
//! maneuver. Classic precession-nutation-spin angles are available as a view
//! through [`euler_zxz`] for consumers that want them; they are never used in
//! the dynamics loop because that sequence is singular at the equilibrium.

use nalgebra::{Matrix3, Vector3};

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn drot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn drot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn drot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

fn ddrot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -c, s, 0.0, -s, -c)
}

fn ddrot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-c, 0.0, -s, 0.0, 0.0, 0.0, s, 0.0, -c)
}

fn ddrot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-c, s, 0.0, -s, -c, 0.0, 0.0, 0.0, 0.0)
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Yaw-pitch-roll angles of one body, ordered (roll, pitch, yaw) to match the
/// generalized-coordinate layout.
pub type Ypr = Vector3<f64>;

/// Local-to-global rotation matrix.
pub fn rotation(ypr: &Ypr) -> Matrix3<f64> {
    rot_z(ypr[2]) * rot_y(ypr[1]) * rot_x(ypr[0])
}

/// Partial derivatives of the rotation matrix w.r.t. (roll, pitch, yaw).
pub fn rotation_partials(ypr: &Ypr) -> [Matrix3<f64>; 3] {
    let rx = rot_x(ypr[0]);
    let ry = rot_y(ypr[1]);
    let rz = rot_z(ypr[2]);
    [
        rz * ry * drot_x(ypr[0]),
        rz * drot_y(ypr[1]) * rx,
        drot_z(ypr[2]) * ry * rx,
    ]
}

/// Second time derivative of the rotation matrix evaluated at zero angular
/// acceleration, i.e. the quadratic-velocity part of `d²T/dt²`.
pub fn rotation_quadratic_rate(ypr: &Ypr, ypr_dot: &Ypr) -> Matrix3<f64> {
    let rx = rot_x(ypr[0]);
    let ry = rot_y(ypr[1]);
    let rz = rot_z(ypr[2]);
    let drx = drot_x(ypr[0]);
    let dry = drot_y(ypr[1]);
    let drz = drot_z(ypr[2]);
    let (rd, pd, yd) = (ypr_dot[0], ypr_dot[1], ypr_dot[2]);

    rz * ry * ddrot_x(ypr[0]) * (rd * rd)
        + rz * ddrot_y(ypr[1]) * rx * (pd * pd)
        + ddrot_z(ypr[2]) * ry * rx * (yd * yd)
        + rz * dry * drx * (2.0 * pd * rd)
        + drz * ry * drx * (2.0 * yd * rd)
        + drz * dry * rx * (2.0 * yd * pd)
}

/// Map from (roll, pitch, yaw) rates to the body-frame angular velocity:
/// `omega_body = G(roll, pitch) * ypr_dot`.
pub fn body_rate_map(ypr: &Ypr) -> Matrix3<f64> {
    let (sr, cr) = ypr[0].sin_cos();
    let (sp, cp) = ypr[1].sin_cos();
    Matrix3::new(1.0, 0.0, -sp, 0.0, cr, sr * cp, 0.0, -sr, cr * cp)
}

/// Partials of [`body_rate_map`] w.r.t. (roll, pitch, yaw); the yaw partial is
/// identically zero.
pub fn body_rate_map_partials(ypr: &Ypr) -> [Matrix3<f64>; 3] {
    let (sr, cr) = ypr[0].sin_cos();
    let (sp, cp) = ypr[1].sin_cos();
    let d_roll = Matrix3::new(0.0, 0.0, 0.0, 0.0, -sr, cr * cp, 0.0, -cr, -sr * cp);
    let d_pitch = Matrix3::new(0.0, 0.0, -cp, 0.0, 0.0, -sr * sp, 0.0, 0.0, -cr * sp);
    [d_roll, d_pitch, Matrix3::zeros()]
}

/// Precession-nutation-spin (z-x-z) angles of a rotation matrix.
///
/// At the nutation singularity (theta ~ 0 or pi) the split between psi and phi
/// is undefined; the convention here is psi = 0 with phi carrying the full
/// rotation about Z.
pub fn euler_zxz(t: &Matrix3<f64>) -> (f64, f64, f64) {
    let st = (t[(2, 0)] * t[(2, 0)] + t[(2, 1)] * t[(2, 1)]).sqrt();
    let theta = st.atan2(t[(2, 2)]);
    if st < 1e-12 {
        // sign of T33 decides whether the z axes are aligned or flipped
        let phi = t[(1, 0)].atan2(t[(0, 0)]);
        if t[(2, 2)] > 0.0 {
            (0.0, 0.0, phi)
        } else {
            (0.0, std::f64::consts::PI, phi)
        }
    } else {
        let psi = t[(0, 2)].atan2(-t[(1, 2)]);
        let phi = t[(2, 0)].atan2(t[(2, 1)]);
        (psi, theta, phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_matrix(f: impl Fn(f64) -> Matrix3<f64>, a: f64) -> Matrix3<f64> {
        let h = 1e-6;
        (f(a + h) - f(a - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        for &a in &[0.0, 0.3, -1.2, 2.9] {
            assert_relative_eq!(drot_x(a), fd_matrix(rot_x, a), epsilon = 1e-9);
            assert_relative_eq!(drot_y(a), fd_matrix(rot_y, a), epsilon = 1e-9);
            assert_relative_eq!(drot_z(a), fd_matrix(rot_z, a), epsilon = 1e-9);
            assert_relative_eq!(ddrot_x(a), fd_matrix(drot_x, a), epsilon = 1e-9);
            assert_relative_eq!(ddrot_y(a), fd_matrix(drot_y, a), epsilon = 1e-9);
            assert_relative_eq!(ddrot_z(a), fd_matrix(drot_z, a), epsilon = 1e-9);
        }
    }

    #[test]
    fn rotation_partials_match_finite_differences() {
        let ypr = Ypr::new(0.21, -0.37, 1.44);
        let parts = rotation_partials(&ypr);
        let h = 1e-6;
        for k in 0..3 {
            let mut hi = ypr;
            let mut lo = ypr;
            hi[k] += h;
            lo[k] -= h;
            let fd = (rotation(&hi) - rotation(&lo)) / (2.0 * h);
            assert_relative_eq!(parts[k], fd, epsilon = 1e-9);
        }
    }

    #[test]
    fn body_rate_map_matches_rotation_kinematics() {
        // omega_body^ = T^T * dT/dt for an arbitrary rate
        let ypr = Ypr::new(0.15, -0.52, 0.83);
        let rate = Ypr::new(0.7, -0.4, 1.1);
        let parts = rotation_partials(&ypr);
        let tdot = parts[0] * rate[0] + parts[1] * rate[1] + parts[2] * rate[2];
        let w_skew = rotation(&ypr).transpose() * tdot;
        let w = Vector3::new(w_skew[(2, 1)], w_skew[(0, 2)], w_skew[(1, 0)]);
        assert_relative_eq!(w, body_rate_map(&ypr) * rate, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_rate_matches_finite_differences() {
        let ypr = Ypr::new(0.3, 0.2, -0.9);
        let rate = Ypr::new(-0.8, 0.5, 1.3);
        let h = 1e-5;
        let at = |tau: f64| rotation(&(ypr + rate * tau));
        let fd = (at(h) - at(0.0) * 2.0 + at(-h)) / (h * h);
        assert_relative_eq!(rotation_quadratic_rate(&ypr, &rate), fd, epsilon = 1e-5);
    }

    #[test]
    fn zxz_roundtrip() {
        let t = rot_z(0.4) * rot_x(0.7) * rot_z(-1.1);
        let (psi, theta, phi) = euler_zxz(&t);
        assert_relative_eq!(psi, 0.4, epsilon = 1e-12);
        assert_relative_eq!(theta, 0.7, epsilon = 1e-12);
        assert_relative_eq!(phi, -1.1, epsilon = 1e-12);

        // degenerate case: pure spin about z
        let (psi, theta, phi) = euler_zxz(&rot_z(0.9));
        assert_eq!(psi, 0.0);
        assert_eq!(theta, 0.0);
        assert_relative_eq!(phi, 0.9, epsilon = 1e-12);
    }
}
