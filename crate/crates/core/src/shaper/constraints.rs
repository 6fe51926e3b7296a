//! Zero-vibration equality constraints for dual-mode shaper design.

use nalgebra::{DMatrix, DVector};

use crate::modal::ModalSet;

/// Damped cosine row: `c_i = exp(xi omega t_i) cos(omega_d t_i)`.
pub fn cos_row(omega: f64, xi: f64, n: usize, ts: f64) -> Vec<f64> {
    row(omega, xi, n, ts, false, false)
}

/// Damped sine row: `s_i = exp(xi omega t_i) sin(omega_d t_i)`.
pub fn sin_row(omega: f64, xi: f64, n: usize, ts: f64) -> Vec<f64> {
    row(omega, xi, n, ts, true, false)
}

/// Time-weighted cosine row `t_i c_i`, the frequency-flatness condition.
pub fn weighted_cos_row(omega: f64, xi: f64, n: usize, ts: f64) -> Vec<f64> {
    row(omega, xi, n, ts, false, true)
}

/// Time-weighted sine row `t_i s_i`.
pub fn weighted_sin_row(omega: f64, xi: f64, n: usize, ts: f64) -> Vec<f64> {
    row(omega, xi, n, ts, true, true)
}

fn row(omega: f64, xi: f64, n: usize, ts: f64, sine: bool, weighted: bool) -> Vec<f64> {
    let omega_d = omega * (1.0 - xi * xi).sqrt();
    (0..n)
        .map(|i| {
            let t_i = i as f64 * ts;
            let e = (xi * omega * t_i).exp();
            let trig = if sine {
                (omega_d * t_i).sin()
            } else {
                (omega_d * t_i).cos()
            };
            let w = if weighted { t_i } else { 1.0 };
            w * e * trig
        })
        .collect()
}

/// The nine-row equality system of the dual-mode robust design:
/// rows 1..8 are the cosine, sine and time-weighted cosine/sine rows for each
/// of the two modes, row 9 is all ones with right-hand side 1 (unit static
/// gain). Amplitude nonnegativity `h >= 0` is carried implicitly as variable
/// lower bounds.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl ConstraintSystem {
    pub fn build(modal: &ModalSet, n: usize, ts: f64) -> Self {
        assert!(n >= 2, "a shaper needs at least two impulses");
        assert!(ts > 0.0);
        let mut a = DMatrix::zeros(9, n);
        let modes = [(modal.omega1, modal.xi1), (modal.omega2, modal.xi2)];
        for (k, &(w, xi)) in modes.iter().enumerate() {
            let base = 4 * k;
            set_row(&mut a, base, &cos_row(w, xi, n, ts));
            set_row(&mut a, base + 1, &sin_row(w, xi, n, ts));
            set_row(&mut a, base + 2, &weighted_cos_row(w, xi, n, ts));
            set_row(&mut a, base + 3, &weighted_sin_row(w, xi, n, ts));
        }
        for j in 0..n {
            a[(8, j)] = 1.0;
        }
        let mut b = DVector::zeros(9);
        b[8] = 1.0;
        Self { a_eq: a, b_eq: b }
    }

    pub fn n(&self) -> usize {
        self.a_eq.ncols()
    }

    /// Largest equality violation of a candidate impulse sequence.
    pub fn residual(&self, h: &DVector<f64>) -> f64 {
        (&self.a_eq * h - &self.b_eq).amax()
    }
}

fn set_row(a: &mut DMatrix<f64>, row: usize, values: &[f64]) {
    for (j, &v) in values.iter().enumerate() {
        a[(row, j)] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn undamped_rows_are_pure_trigonometric_samples() {
        let r = cos_row(2.0, 0.0, 5, 0.1);
        for (i, &v) in r.iter().enumerate() {
            assert_relative_eq!(v, (2.0 * 0.1 * i as f64).cos(), epsilon = 1e-15);
        }
        let s = sin_row(2.0, 0.0, 5, 0.1);
        for (i, &v) in s.iter().enumerate() {
            assert_relative_eq!(v, (2.0 * 0.1 * i as f64).sin(), epsilon = 1e-15);
        }
    }

    #[test]
    fn cos_row_repeats_when_period_is_grid_aligned() {
        // omega chosen so the period is exactly 20 samples
        let ts = 0.01;
        let omega = 2.0 * std::f64::consts::PI / (20.0 * ts);
        let r = cos_row(omega, 0.0, 60, ts);
        for i in 0..40 {
            assert_relative_eq!(r[i], r[i + 20], epsilon = 1e-12);
        }
    }

    #[test]
    fn system_shape_and_gain_row() {
        let m = ModalSet::undamped(2.58, 3.55).unwrap();
        let cs = ConstraintSystem::build(&m, 40, 0.01);
        assert_eq!(cs.a_eq.nrows(), 9);
        assert_eq!(cs.a_eq.ncols(), 40);
        assert!(cs.a_eq.row(8).iter().all(|&v| v == 1.0));
        assert_eq!(cs.b_eq[8], 1.0);
        assert!(cs.b_eq.rows(0, 8).iter().all(|&v| v == 0.0));
    }
}
