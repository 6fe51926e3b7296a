//! Discrete input-shaping FIR filters and the residual-vibration sensitivity
//! function.

mod constraints;
pub mod xml;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use constraints::{cos_row, sin_row, weighted_cos_row, weighted_sin_row, ConstraintSystem};

#[derive(Debug, Error)]
pub enum ShaperError {
    #[error("invalid shaper: {0}")]
    Invalid(String),
    #[error("malformed coefficient file: {0}")]
    Parse(String),
}

/// Sampled impulse response of a shaping filter on a uniform grid.
///
/// Amplitudes are nonnegative and sum to one, so the filter has unit static
/// gain and maps monotone commands to monotone commands. Impulse `i` acts at
/// `t_i = (i - 1) * Ts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaperFir {
    /// Sampling period, seconds.
    pub ts: f64,
    /// Impulse amplitudes A_1..A_n.
    pub h: Vec<f64>,
}

impl ShaperFir {
    pub fn new(ts: f64, h: Vec<f64>) -> Result<Self, ShaperError> {
        if !(ts > 0.0) {
            return Err(ShaperError::Invalid(format!(
                "sampling period must be positive, got {ts}"
            )));
        }
        if h.is_empty() {
            return Err(ShaperError::Invalid("empty impulse sequence".into()));
        }
        let sum: f64 = h.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ShaperError::Invalid(format!(
                "amplitudes must sum to 1, got {sum}"
            )));
        }
        if let Some(neg) = h.iter().copied().find(|a| *a < -1e-12) {
            return Err(ShaperError::Invalid(format!(
                "amplitudes must be nonnegative, got {neg}"
            )));
        }
        Ok(Self { ts, h })
    }

    /// Single unit impulse; passes commands through unchanged.
    pub fn identity(ts: f64) -> Self {
        Self { ts, h: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Filter duration t_n, seconds.
    pub fn duration(&self) -> f64 {
        (self.h.len() - 1) as f64 * self.ts
    }

    pub fn l2_norm(&self) -> f64 {
        self.h.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Residual-vibration sensitivity of a mode with natural frequency
    /// `omega` and damping ratio `xi`:
    ///
    /// `V = exp(-xi omega t_n) sqrt(C^2 + S^2)` with
    /// `C = sum A_i exp(xi omega t_i) cos(omega_d t_i)` and the matching sine
    /// sum, `omega_d = omega sqrt(1 - xi^2)`.
    pub fn sensitivity(&self, omega: f64, xi: f64) -> f64 {
        assert!(omega > 0.0, "mode frequency must be positive");
        assert!((0.0..1.0).contains(&xi), "damping ratio must be in [0, 1)");
        let omega_d = omega * (1.0 - xi * xi).sqrt();
        let mut c = 0.0;
        let mut s = 0.0;
        for (i, a) in self.h.iter().enumerate() {
            let t_i = i as f64 * self.ts;
            let w = a * (xi * omega * t_i).exp();
            c += w * (omega_d * t_i).cos();
            s += w * (omega_d * t_i).sin();
        }
        (-xi * omega * self.duration()).exp() * (c * c + s * s).sqrt()
    }

    /// Discrete convolution with zero-prefix initial condition:
    /// `y[k] = sum_i A_i u[k - i + 1]`. Output length equals input length.
    pub fn convolve(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; u.len()];
        for (i, &a) in self.h.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for k in i..u.len() {
                y[k] += a * u[k - i];
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn single_impulse_has_unit_sensitivity() {
        let sh = ShaperFir::identity(0.01);
        for &w in &[0.5, 2.58, 3.55, 10.0] {
            assert_relative_eq!(sh.sensitivity(w, 0.0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn classic_zv_shaper_cancels_its_mode() {
        // two half impulses separated by half the mode period
        let omega = 3.0;
        let half_period = PI / omega;
        let sh = ShaperFir::new(half_period, vec![0.5, 0.5]).unwrap();
        assert!(sh.sensitivity(omega, 0.0) < 1e-15);
        // independent evaluation: C = 0.5 + 0.5 cos(pi) = 0, S = 0.5 sin(pi)
        assert!(sh.sensitivity(2.0 * omega, 0.0) > 0.9);
    }

    #[test]
    fn convolution_identity_and_unity_gain() {
        let sh = ShaperFir::identity(0.01);
        let u = vec![1.0, -2.0, 3.5, 0.0];
        assert_eq!(sh.convolve(&u), u);

        let sh = ShaperFir::new(0.01, vec![0.2, 0.3, 0.5]).unwrap();
        let u = vec![5.0; 10];
        let y = sh.convolve(&u);
        for &v in &y[sh.len() - 1..] {
            assert_relative_eq!(v, 5.0, epsilon = 1e-12);
        }
        assert_eq!(y.len(), u.len());
    }

    #[test]
    fn rejects_bad_amplitudes() {
        assert!(ShaperFir::new(0.01, vec![0.7, 0.7]).is_err());
        assert!(ShaperFir::new(0.01, vec![1.5, -0.5]).is_err());
        assert!(ShaperFir::new(0.0, vec![1.0]).is_err());
        assert!(ShaperFir::new(0.01, vec![]).is_err());
    }
}
