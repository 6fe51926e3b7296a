//! Modal parameter extraction from simulated responses.
//!
//! The hanging equilibrium is a coordinate singularity of the classic Euler
//! parametrization, so instead of symbolic linearization the two dominant
//! modes are identified numerically: natural frequencies from the spectral
//! peaks of a free-decay record, damping from the logarithmic decrement of
//! the band-passed signal.

mod frf;
pub mod spectrum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multibody::SimOutput;
use spectrum::{find_peaks, spectrum, Peak};

pub use frf::{compute_frf, FrfConfig, FrfCurve};

#[derive(Debug, Error)]
pub enum ModalError {
    #[error("invalid modal set: {0}")]
    Invalid(String),
    #[error(
        "found {found} distinguishable spectral peaks, need 2; \
         use a longer or more strongly excited free-decay record"
    )]
    TooFewPeaks { found: usize },
    #[error("invalid frequency grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Simulation(#[from] crate::multibody::MultibodyError),
}

/// The parametric model set: two natural frequencies with damping ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalSet {
    /// Lower natural frequency, rad/s.
    pub omega1: f64,
    pub xi1: f64,
    /// Upper natural frequency, rad/s.
    pub omega2: f64,
    pub xi2: f64,
}

impl ModalSet {
    pub fn new(omega1: f64, xi1: f64, omega2: f64, xi2: f64) -> Result<Self, ModalError> {
        let set = Self {
            omega1,
            xi1,
            omega2,
            xi2,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn undamped(omega1: f64, omega2: f64) -> Result<Self, ModalError> {
        Self::new(omega1, 0.0, omega2, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModalError> {
        if !(self.omega1 > 0.0 && self.omega2 > self.omega1) {
            return Err(ModalError::Invalid(format!(
                "need 0 < omega1 < omega2, got {} and {}",
                self.omega1, self.omega2
            )));
        }
        for (name, xi) in [("xi1", self.xi1), ("xi2", self.xi2)] {
            if !(0.0..1.0).contains(&xi) {
                return Err(ModalError::Invalid(format!(
                    "{name} must lie in [0, 1), got {xi}"
                )));
            }
        }
        Ok(())
    }
}

/// Identify the two dominant modes from a free-decay record (motor at rest,
/// belt released from a perturbed pose).
///
/// Frequencies come from the two strongest spectral peaks across the torsion
/// and nutation channels; damping ratios from the logarithmic decrement of
/// each band-passed channel, reported as zero below the numerical floor.
pub fn identify_modes(free_decay: &SimOutput) -> Result<ModalSet, ModalError> {
    let dt = free_decay.dt();
    if dt <= 0.0 || free_decay.time.len() < 64 {
        return Err(ModalError::Invalid(
            "free-decay record too short for identification".into(),
        ));
    }

    let spec_eps = spectrum(&free_decay.eps2, dt, 16);
    let spec_theta = spectrum(&free_decay.theta2, dt, 16);
    let peaks_eps = find_peaks(&spec_eps, 0.03, 0.25);
    let peaks_theta = find_peaks(&spec_theta, 0.03, 0.25);

    // merge candidates from both channels; a peak present in both counts once
    let mut merged: Vec<Peak> = Vec::new();
    let norm_eps = peaks_eps.first().map_or(1.0, |p| p.magnitude);
    let norm_theta = peaks_theta.first().map_or(1.0, |p| p.magnitude);
    for (peaks, norm) in [(&peaks_eps, norm_eps), (&peaks_theta, norm_theta)] {
        for p in peaks.iter() {
            let scaled = Peak {
                omega: p.omega,
                magnitude: p.magnitude / norm,
            };
            match merged
                .iter_mut()
                .find(|q| (q.omega - scaled.omega).abs() < 0.02 * q.omega.max(scaled.omega))
            {
                Some(q) => {
                    if scaled.magnitude > q.magnitude {
                        *q = scaled;
                    }
                }
                None => merged.push(scaled),
            }
        }
    }
    merged.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    if merged.len() < 2 {
        return Err(ModalError::TooFewPeaks {
            found: merged.len(),
        });
    }
    let mut freqs = [merged[0].omega, merged[1].omega];
    freqs.sort_by(f64::total_cmp);
    let [omega1, omega2] = freqs;

    let damping = |omega: f64| -> f64 {
        // estimate from the channel where this mode is stronger
        let pick = |peaks: &[Peak]| {
            peaks
                .iter()
                .find(|p| (p.omega - omega).abs() < 0.02 * omega)
                .map(|p| p.magnitude)
        };
        let from_eps = pick(&peaks_eps).unwrap_or(0.0) / norm_eps;
        let from_theta = pick(&peaks_theta).unwrap_or(0.0) / norm_theta;
        let signal = if from_eps >= from_theta {
            &free_decay.eps2
        } else {
            &free_decay.theta2
        };
        let filtered = spectrum::bandpass(signal, dt, 0.8 * omega, 1.2 * omega);
        spectrum::log_decrement_damping(&filtered, dt, omega)
            .map(|(xi, _)| xi)
            .unwrap_or(0.0)
    };

    ModalSet::new(omega1, damping(omega1), omega2, damping(omega2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic_output(signals: (Vec<f64>, Vec<f64>), dt: f64) -> SimOutput {
        let n = signals.0.len();
        SimOutput {
            time: (0..n).map(|k| k as f64 * dt).collect(),
            alpha: vec![0.0; n],
            eps2: signals.0,
            theta2: signals.1,
            tension: [vec![1.0; n], vec![1.0; n], vec![1.0; n]],
            max_constraint_residual: 0.0,
            min_tension: 1.0,
            states: None,
        }
    }

    #[test]
    fn synthetic_two_tone_identified_within_half_percent() {
        let dt = 0.002;
        let n = 40000;
        let (w1, w2) = (2.58, 3.55);
        let eps: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                0.2 * (w2 * t).sin() + 0.05 * (w1 * t).sin()
            })
            .collect();
        let theta: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                0.02 * (w1 * t + 0.3).sin() + 0.002 * (w2 * t).sin()
            })
            .collect();
        let m = identify_modes(&synthetic_output((eps, theta), dt)).unwrap();
        assert_relative_eq!(m.omega1, w1, max_relative = 5e-3);
        assert_relative_eq!(m.omega2, w2, max_relative = 5e-3);
        assert_eq!(m.xi1, 0.0);
        assert_eq!(m.xi2, 0.0);
    }

    #[test]
    fn damped_synthetic_tone_reports_damping() {
        let dt = 0.002;
        let n = 50000;
        let (w1, w2, xi) = (2.0, 3.4, 0.05);
        let eps: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (-xi * w2 * t).exp() * (w2 * t).sin() * 0.3
            })
            .collect();
        let theta: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (-xi * w1 * t).exp() * (w1 * t).sin() * 0.05
            })
            .collect();
        let m = identify_modes(&synthetic_output((eps, theta), dt)).unwrap();
        assert_relative_eq!(m.xi1, xi, max_relative = 0.1);
        assert_relative_eq!(m.xi2, xi, max_relative = 0.1);
    }

    #[test]
    fn single_tone_record_is_rejected() {
        let dt = 0.002;
        let n = 30000;
        let eps: Vec<f64> = (0..n).map(|k| (2.5 * k as f64 * dt).sin()).collect();
        let theta = vec![0.0; n];
        match identify_modes(&synthetic_output((eps, theta), dt)) {
            Err(ModalError::TooFewPeaks { found }) => assert_eq!(found, 1),
            other => panic!("expected TooFewPeaks, got {other:?}"),
        }
    }

    #[test]
    fn modal_set_validation() {
        assert!(ModalSet::new(3.0, 0.0, 2.0, 0.0).is_err());
        assert!(ModalSet::new(2.0, 0.0, 3.0, 1.0).is_err());
        assert!(ModalSet::new(2.0, 0.0, 3.0, 0.0).is_ok());
    }
}
