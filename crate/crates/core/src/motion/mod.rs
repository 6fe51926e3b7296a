//! Motion-planning strategies and the firmware-style command pipeline.

mod poly3;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shaper::ShaperFir;

pub use poly3::{poly3_profile, Poly3Limits};

/// Default planner limits for the jerk-limited strategy, calibrated so the
/// 180 degree maneuver takes 5.3 s (see `examples/calibrate_poly3.rs`).
pub fn default_poly3_limits() -> Poly3Limits {
    let vmax = std::f64::consts::PI / 4.55;
    Poly3Limits {
        vmax,
        amax: 2.0 * vmax,
        jmax: 8.0 * vmax,
    }
}

/// Constant-velocity rate reproducing the 3 s transfer of the 180 degree
/// reference maneuver.
pub const DEFAULT_CONST_VEL_RATE: f64 = std::f64::consts::PI / 3.0;

/// Longest profile the planners will generate before declaring the target
/// unreachable under the given limits.
pub const MAX_PROFILE_HORIZON: f64 = 300.0;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("invalid motion request: {0}")]
    Invalid(String),
    #[error("sampling mismatch: profile at {profile_ts} s vs shaper at {shaper_ts} s")]
    SamplingMismatch { profile_ts: f64, shaper_ts: f64 },
    #[error("target unreachable within {horizon} s under the given limits")]
    Unreachable { horizon: f64 },
}

/// Planning strategy tag carried by a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ConstVelocity,
    Polynomial,
    Step,
    TOptShaped,
    H2OptShaped,
    Pipeline,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::ConstVelocity => "const-velocity",
            Strategy::Polynomial => "polynomial",
            Strategy::Step => "step",
            Strategy::TOptShaped => "t-opt-shaped",
            Strategy::H2OptShaped => "h2-opt-shaped",
            Strategy::Pipeline => "pipeline",
        }
    }
}

/// Commanded motor position on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    /// Sampling period, seconds.
    pub ts: f64,
    /// Position samples, radians; `alpha[k]` is the command at `k * ts`.
    pub alpha: Vec<f64>,
    pub strategy: Strategy,
}

impl MotionProfile {
    pub fn duration(&self) -> f64 {
        (self.alpha.len().saturating_sub(1)) as f64 * self.ts
    }

    pub fn target(&self) -> f64 {
        *self.alpha.last().expect("profiles are never empty")
    }

    /// Hold the final value until the profile covers `horizon` seconds.
    pub fn extend_hold(&self, horizon: f64) -> MotionProfile {
        let want = (horizon / self.ts).ceil() as usize + 1;
        let mut alpha = self.alpha.clone();
        let last = self.target();
        while alpha.len() < want {
            alpha.push(last);
        }
        MotionProfile {
            ts: self.ts,
            alpha,
            strategy: self.strategy,
        }
    }
}

/// Step command: the current position at tick zero, the target from tick one
/// on, held for `len` samples in total.
pub fn step_profile(from: f64, to: f64, ts: f64, len: usize, strategy: Strategy) -> MotionProfile {
    let len = len.max(2);
    let mut alpha = vec![to; len];
    alpha[0] = from;
    MotionProfile { ts, alpha, strategy }
}

/// Rate-limited linear ramp with exact arrival at the target.
pub fn const_velocity_profile(from: f64, to: f64, rate_limit: f64, ts: f64) -> MotionProfile {
    assert!(rate_limit > 0.0 && ts > 0.0);
    let delta = to - from;
    let duration = delta.abs() / rate_limit;
    let n = (duration / ts).ceil() as usize;
    let mut alpha = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * ts;
        let travelled = (rate_limit * t).min(delta.abs());
        alpha.push(from + delta.signum() * travelled);
    }
    if delta == 0.0 {
        alpha = vec![from];
    } else {
        *alpha.last_mut().unwrap() = to;
    }
    MotionProfile {
        ts,
        alpha,
        strategy: Strategy::ConstVelocity,
    }
}

/// Convolve a raw profile through a shaping filter.
///
/// The filter history is pre-loaded with the profile's initial value, so the
/// output starts at the raw starting position; the tail is padded so the
/// output settles exactly on the target.
pub fn shaped_profile(raw: &MotionProfile, sh: &ShaperFir) -> Result<MotionProfile, MotionError> {
    if (raw.ts - sh.ts).abs() > 1e-12 * raw.ts.max(sh.ts) {
        return Err(MotionError::SamplingMismatch {
            profile_ts: raw.ts,
            shaper_ts: sh.ts,
        });
    }
    let from = raw.alpha[0];
    let n = sh.len();
    let mut delta: Vec<f64> = raw.alpha.iter().map(|a| a - from).collect();
    let tail = raw.target() - from;
    delta.extend(std::iter::repeat(tail).take(n.saturating_sub(1)));
    let shaped = sh.convolve(&delta);
    MotionProfile {
        ts: raw.ts,
        alpha: shaped.into_iter().map(|y| from + y).collect(),
        strategy: raw.strategy,
    }
    .pipe_ok()
}

trait PipeOk: Sized {
    fn pipe_ok<E>(self) -> Result<Self, E> {
        Ok(self)
    }
}
impl PipeOk for MotionProfile {}

/// Wrap the requested angle so the move from `current` takes the shortest
/// path; the returned target differs from the request by a multiple of 2 pi
/// and the delta lies in (-pi, pi]. A delta of exactly pi resolves to +pi.
pub fn shortest_path_target(current: f64, requested: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut delta = (requested - current).rem_euclid(two_pi);
    if delta > std::f64::consts::PI {
        delta -= two_pi;
    }
    current + delta
}

/// Stepper resolution settings for the command pipeline.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LimiterConfig {
    /// Motor steps per revolution.
    pub steps_per_rev: u32,
    /// Snap targets to the step grid. Off by default: 0.036 degree quanta sit
    /// below the resolution of interest.
    pub quantize: bool,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        Self {
            steps_per_rev: 10_000,
            quantize: false,
        }
    }
}

impl LimiterConfig {
    fn apply(&self, current: f64, requested: f64) -> f64 {
        let target = shortest_path_target(current, requested);
        if self.quantize {
            let step = 2.0 * std::f64::consts::PI / self.steps_per_rev as f64;
            (target / step).round() * step
        } else {
            target
        }
    }
}

/// Firmware-equivalent reference pipeline: timestamped angle requests are
/// clamped to the shortest path, held between updates, and passed through the
/// shaping filter at the filter's update cadence.
///
/// A request takes effect at the first tick strictly after its timestamp, so
/// the output at tick k depends only on updates with timestamps before
/// `k * ts`, and the command stream always starts at `start`.
pub fn run_pipeline(
    updates: &[(f64, f64)],
    cfg: &LimiterConfig,
    sh: &ShaperFir,
    start: f64,
    horizon: f64,
) -> Result<MotionProfile, MotionError> {
    if updates.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(MotionError::Invalid(
            "update timestamps must be nondecreasing".into(),
        ));
    }
    if updates.iter().any(|(t, _)| *t < 0.0) {
        return Err(MotionError::Invalid(
            "update timestamps must be nonnegative".into(),
        ));
    }
    let ts = sh.ts;
    let n_ticks = (horizon / ts).ceil() as usize + 1;
    let mut raw = Vec::with_capacity(n_ticks);
    let mut target = start;
    let mut next_update = 0usize;
    for k in 0..n_ticks {
        let now = k as f64 * ts;
        while next_update < updates.len() && updates[next_update].0 < now {
            target = cfg.apply(target, updates[next_update].1);
            next_update += 1;
        }
        raw.push(target);
    }
    let raw = MotionProfile {
        ts,
        alpha: raw,
        strategy: Strategy::Pipeline,
    };
    shaped_profile(&raw, sh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn const_velocity_duration_matches_rate() {
        let prof = const_velocity_profile(0.0, PI, PI / 3.0, 0.01);
        assert_relative_eq!(prof.duration(), 3.0, epsilon = 1e-12);
        assert_eq!(prof.target(), PI);
        assert_eq!(prof.alpha[0], 0.0);
        // doubling the rate halves the duration
        let fast = const_velocity_profile(0.0, PI, 2.0 * PI / 3.0, 0.01);
        assert_relative_eq!(fast.duration(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_length_move_is_single_sample() {
        let prof = const_velocity_profile(0.4, 0.4, 1.0, 0.01);
        assert_eq!(prof.alpha, vec![0.4]);
    }

    #[test]
    fn shortest_path_wraps() {
        assert_relative_eq!(
            shortest_path_target(0.0, 3.0 * PI / 2.0),
            -PI / 2.0,
            epsilon = 1e-12
        );
        // tie at pi resolves toward +pi
        assert_relative_eq!(shortest_path_target(0.0, PI), PI, epsilon = 1e-12);
        assert_relative_eq!(shortest_path_target(1.0, 1.0 + 2.0 * PI), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shortest_path_brute_force_grid() {
        for i in 0..73 {
            for j in 0..73 {
                let cur = -2.0 * PI + i as f64 * (4.0 * PI / 72.0);
                let req = -2.0 * PI + j as f64 * (4.0 * PI / 72.0);
                let tgt = shortest_path_target(cur, req);
                let delta = tgt - cur;
                assert!(delta <= PI + 1e-12 && delta > -PI - 1e-12, "delta {delta}");
                let wraps = (tgt - req) / (2.0 * PI);
                assert_relative_eq!(wraps, wraps.round(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn identity_shaper_passes_profile_through() {
        let sh = ShaperFir::identity(0.01);
        let raw = const_velocity_profile(0.2, 1.2, 1.0, 0.01);
        let shaped = shaped_profile(&raw, &sh).unwrap();
        assert_eq!(shaped.alpha, raw.alpha);
    }

    #[test]
    fn sampling_mismatch_is_an_error() {
        let sh = ShaperFir::identity(0.02);
        let raw = const_velocity_profile(0.0, 1.0, 1.0, 0.01);
        assert!(matches!(
            shaped_profile(&raw, &sh),
            Err(MotionError::SamplingMismatch { .. })
        ));
    }

    #[test]
    fn shaped_step_reaches_target_and_preserves_monotonicity() {
        let sh = ShaperFir::new(0.01, vec![0.25, 0.0, 0.5, 0.25]).unwrap();
        let raw = step_profile(0.0, PI, 0.01, 20, Strategy::Step);
        let shaped = shaped_profile(&raw, &sh).unwrap();
        assert_eq!(shaped.alpha[0], 0.0);
        assert!((shaped.target() - PI).abs() < 1e-10);
        for w in shaped.alpha.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert_eq!(shaped.alpha.len(), raw.alpha.len() + sh.len() - 1);
    }

    #[test]
    fn pipeline_single_update_equals_shaped_step() {
        let sh = ShaperFir::new(0.01, vec![0.3, 0.3, 0.4]).unwrap();
        let horizon = 0.5;
        let piped = run_pipeline(
            &[(0.0, 1.0)],
            &LimiterConfig::default(),
            &sh,
            0.0,
            horizon,
        )
        .unwrap();
        let n_ticks = (horizon / sh.ts).ceil() as usize + 1;
        let raw = step_profile(0.0, 1.0, 0.01, n_ticks, Strategy::Pipeline);
        let direct = shaped_profile(&raw, &sh).unwrap();
        assert_eq!(piped.alpha, direct.alpha);
    }

    #[test]
    fn pipeline_superposes_two_rapid_updates() {
        // two opposing requests inside the shaper duration behave like the
        // sum of two shaped steps
        let sh = ShaperFir::new(0.01, vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let cfg = LimiterConfig::default();
        let (tgt1, tgt2) = (0.8, 0.2);
        let t2 = 0.02;
        let both = run_pipeline(&[(0.0, tgt1), (t2, tgt2)], &cfg, &sh, 0.0, 0.3).unwrap();

        // unit step response of the shaper at lag k
        let unit_step: Vec<f64> = sh
            .h
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a;
                Some(*acc)
            })
            .collect();
        let step_at = |k: isize| -> f64 {
            if k < 0 {
                0.0
            } else {
                unit_step[(k as usize).min(unit_step.len() - 1)]
            }
        };
        // an update at m * ts takes effect at tick m + 1
        let k1 = 1isize;
        let k2 = (t2 / sh.ts).round() as isize + 1;
        for k in 0..both.alpha.len() {
            let expected =
                tgt1 * step_at(k as isize - k1) + (tgt2 - tgt1) * step_at(k as isize - k2);
            assert_relative_eq!(both.alpha[k], expected, epsilon = 1e-12);
        }
        // causality: until the second update takes effect the output matches
        // the single-update run
        let single = run_pipeline(&[(0.0, tgt1)], &cfg, &sh, 0.0, 0.3).unwrap();
        for k in 0..(k2 as usize) {
            assert_eq!(both.alpha[k], single.alpha[k]);
        }
    }

    #[test]
    fn pipeline_settles_between_spaced_updates() {
        let sh = ShaperFir::new(0.01, vec![0.5, 0.0, 0.5]).unwrap();
        let cfg = LimiterConfig::default();
        let out = run_pipeline(&[(0.0, 1.0), (0.5, 0.3)], &cfg, &sh, 0.0, 1.0).unwrap();
        // first transient fully settled before the second update arrives
        let k_settled = (sh.duration() / sh.ts).round() as usize + 2;
        let k_second = (0.5 / sh.ts).round() as usize;
        for k in k_settled..=k_second {
            assert_relative_eq!(out.alpha[k], 1.0, epsilon = 1e-8);
        }
        assert_relative_eq!(*out.alpha.last().unwrap(), 0.3, epsilon = 1e-10);
    }

    #[test]
    fn quantization_snaps_to_step_grid() {
        let cfg = LimiterConfig {
            steps_per_rev: 10_000,
            quantize: true,
        };
        let target = cfg.apply(0.0, 0.1234567);
        let step = 2.0 * PI / 10_000.0;
        assert_relative_eq!(target / step, (target / step).round(), epsilon = 1e-9);
        assert!((target - 0.1234567).abs() <= step / 2.0 + 1e-12);
    }
}
