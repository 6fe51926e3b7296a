//! Empirical frequency response of the plant from small sinusoidal sweeps.

use crate::multibody::{find_equilibrium, simulate, PlantParams};
use crate::motion::{MotionProfile, Strategy};

use super::ModalError;

/// Sweep settings; the defaults keep the drive amplitude well inside the
/// linear regime.
#[derive(Debug, Clone, Copy)]
pub struct FrfConfig {
    /// Drive amplitude, radians.
    pub amplitude: f64,
    /// Integrator step, seconds.
    pub dt: f64,
    /// Transient discarded before measuring, seconds (at least this long and
    /// a whole number of periods).
    pub discard: f64,
    /// Measurement window, seconds (rounded up to whole periods).
    pub measure: f64,
    /// Amplitude growth ratio between window halves above which the point is
    /// flagged as a non-settling resonance.
    pub growth_flag_ratio: f64,
    /// Reported gain ceiling for flagged points.
    pub gain_cap: f64,
}

impl Default for FrfConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.01,
            dt: 1e-3,
            discard: 8.0,
            measure: 16.0,
            growth_flag_ratio: 1.25,
            gain_cap: 100.0,
        }
    }
}

/// Gain and phase of both outputs against the motor angle over a frequency
/// grid.
#[derive(Debug, Clone)]
pub struct FrfCurve {
    /// Angular frequency grid, rad/s.
    pub omega: Vec<f64>,
    pub gain_eps2: Vec<f64>,
    pub phase_eps2: Vec<f64>,
    pub gain_theta2: Vec<f64>,
    pub phase_theta2: Vec<f64>,
    /// Set where the response kept growing (undamped resonance); the gain is
    /// capped there.
    pub resonant: Vec<bool>,
}

/// Measure the frequency response at each grid point by driving the motor
/// with a small sinusoid and projecting the steady response onto the drive
/// frequency.
pub fn compute_frf(
    p: &PlantParams,
    grid: &[f64],
    cfg: &FrfConfig,
) -> Result<FrfCurve, ModalError> {
    if grid.is_empty() {
        return Err(ModalError::BadGrid("empty frequency grid".into()));
    }
    if grid.iter().any(|&w| !(0.0 < w && w <= 20.0)) {
        return Err(ModalError::BadGrid(format!(
            "frequencies must lie in (0, 20] rad/s, got {grid:?}"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ModalError::BadGrid(
            "frequency grid must be strictly increasing".into(),
        ));
    }

    let equilibrium = find_equilibrium(p, 0.0)?;
    let mut out = FrfCurve {
        omega: grid.to_vec(),
        gain_eps2: Vec::with_capacity(grid.len()),
        phase_eps2: Vec::with_capacity(grid.len()),
        gain_theta2: Vec::with_capacity(grid.len()),
        phase_theta2: Vec::with_capacity(grid.len()),
        resonant: Vec::with_capacity(grid.len()),
    };

    for &omega in grid {
        let point = frf_point(p, &equilibrium, omega, cfg)?;
        out.gain_eps2.push(point.gain_eps);
        out.phase_eps2.push(point.phase_eps);
        out.gain_theta2.push(point.gain_theta);
        out.phase_theta2.push(point.phase_theta);
        out.resonant.push(point.resonant);
    }
    Ok(out)
}

pub(crate) struct FrfPoint {
    pub gain_eps: f64,
    pub phase_eps: f64,
    pub gain_theta: f64,
    pub phase_theta: f64,
    pub resonant: bool,
}

pub(crate) fn frf_point(
    p: &PlantParams,
    equilibrium: &crate::multibody::SystemState,
    omega: f64,
    cfg: &FrfConfig,
) -> Result<FrfPoint, ModalError> {
    let period = 2.0 * std::f64::consts::PI / omega;
    let ts = cfg.dt;
    let discard_periods = (cfg.discard / period).ceil().max(2.0);
    let measure_periods = (cfg.measure / period).ceil().max(4.0);
    let t_discard = discard_periods * period;
    let t_total = t_discard + measure_periods * period;
    let n = (t_total / ts).ceil() as usize + 1;

    let alpha: Vec<f64> = (0..n)
        .map(|k| cfg.amplitude * (omega * k as f64 * ts).sin())
        .collect();
    let profile = MotionProfile {
        ts,
        alpha,
        strategy: Strategy::Step,
    };
    let sim = simulate(&profile, equilibrium, p, cfg.dt, false)?;

    let start = (t_discard / ts).round() as usize;
    let theta_rest = sim.theta2[0];
    let eps: Vec<f64> = sim.eps2[start..].to_vec();
    let theta: Vec<f64> = sim.theta2[start..].iter().map(|v| v - theta_rest).collect();
    let drive: Vec<f64> = sim.alpha[start..].to_vec();
    let t0 = sim.time[start];

    let (a_eps, ph_eps) = tone_fit(&eps, ts, omega, t0);
    let (a_theta, ph_theta) = tone_fit(&theta, ts, omega, t0);
    let (a_drive, ph_drive) = tone_fit(&drive, ts, omega, t0);

    // growth audit between window halves
    let half = eps.len() / 2;
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let growth = rms(&eps[half..]) / rms(&eps[..half]).max(1e-300);
    let resonant = growth > cfg.growth_flag_ratio;

    let mut gain_eps = a_eps / a_drive;
    let mut gain_theta = a_theta / a_drive;
    if resonant {
        gain_eps = gain_eps.min(cfg.gain_cap);
        gain_theta = gain_theta.min(cfg.gain_cap);
    }
    let wrap = |ph: f64| {
        let mut v = ph;
        while v > std::f64::consts::PI {
            v -= 2.0 * std::f64::consts::PI;
        }
        while v < -std::f64::consts::PI {
            v += 2.0 * std::f64::consts::PI;
        }
        v
    };
    Ok(FrfPoint {
        gain_eps,
        phase_eps: wrap(ph_eps - ph_drive),
        gain_theta,
        phase_theta: wrap(ph_theta - ph_drive),
        resonant,
    })
}

/// Amplitude and phase of the `omega` component via a Hann-windowed
/// single-bin transform.
fn tone_fit(x: &[f64], dt: f64, omega: f64, t0: f64) -> (f64, f64) {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    let mut wsum = 0.0;
    for (k, &v) in x.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n as f64 - 1.0)).cos();
        let t = t0 + k as f64 * dt;
        let (s, c) = (omega * t).sin_cos();
        re += w * (v - mean) * c;
        im += w * (v - mean) * s;
        wsum += w;
    }
    // x ~ A sin(omega t + phi): the windowed projections give
    // re = A/2 sin(phi) * wsum-normalization, im = A/2 cos(phi)
    let amp = 2.0 * (re * re + im * im).sqrt() / wsum;
    let phase = re.atan2(im);
    (amp, phase)
}
