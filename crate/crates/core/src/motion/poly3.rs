//! Jerk-limited S-curve point-to-point profile.
//!
//! Seven-segment construction: jerk-up, constant acceleration, jerk-down to
//! cruise, cruise, then the mirrored deceleration half. Degenerate cases
//! (velocity or acceleration limit not reached) collapse the corresponding
//! segments.

use super::{MotionError, MotionProfile, Strategy, MAX_PROFILE_HORIZON};

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Poly3Limits {
    /// Velocity bound, rad/s.
    pub vmax: f64,
    /// Acceleration bound, rad/s^2.
    pub amax: f64,
    /// Jerk bound, rad/s^3.
    pub jmax: f64,
}

/// One constant-jerk segment evaluated from its initial conditions.
#[derive(Debug, Clone, Copy)]
struct Segment {
    t_start: f64,
    t_end: f64,
    s0: f64,
    v0: f64,
    a0: f64,
    jerk: f64,
}

impl Segment {
    fn eval(&self, tau: f64) -> f64 {
        self.s0 + self.v0 * tau + 0.5 * self.a0 * tau * tau + self.jerk * tau * tau * tau / 6.0
    }

    fn end_state(&self, tau: f64) -> (f64, f64, f64) {
        (
            self.eval(tau),
            self.v0 + self.a0 * tau + 0.5 * self.jerk * tau * tau,
            self.a0 + self.jerk * tau,
        )
    }
}

/// Piecewise-cubic position profile with bounded velocity, acceleration and
/// jerk and exact arrival.
pub fn poly3_profile(
    from: f64,
    to: f64,
    limits: &Poly3Limits,
    ts: f64,
) -> Result<MotionProfile, MotionError> {
    let Poly3Limits { vmax, amax, jmax } = *limits;
    if !(vmax > 0.0 && amax > 0.0 && jmax > 0.0 && ts > 0.0) {
        return Err(MotionError::Invalid(
            "velocity, acceleration, jerk limits and sampling period must be positive".into(),
        ));
    }
    let dist = (to - from).abs();
    if dist == 0.0 {
        return Ok(MotionProfile {
            ts,
            alpha: vec![from],
            strategy: Strategy::Polynomial,
        });
    }
    let sign = (to - from).signum();

    // peak velocity actually reached
    let v_peak = {
        // distance consumed accelerating from rest to v and back to rest is
        // v * (t_ramp + t_flat) where the ramp shape depends on whether the
        // acceleration limit engages
        let v_amax = amax * amax / jmax; // velocity reached by a pure jerk ramp at a = amax
        let accel_dist = |v: f64| -> f64 {
            if v <= v_amax {
                // triangular acceleration
                v * (v / jmax).sqrt()
            } else {
                let t_j = amax / jmax;
                let t_a = v / amax - t_j;
                v * (2.0 * t_j + t_a) / 2.0
            }
        };
        if 2.0 * accel_dist(vmax) <= dist {
            vmax
        } else if 2.0 * accel_dist(v_amax) >= dist {
            // jerk-limited triangle: dist/2 = v^(3/2) / sqrt(jmax)
            (0.5 * dist * jmax.sqrt()).powf(2.0 / 3.0)
        } else {
            // acceleration-limited: dist/2 = v (t_j + v/amax) / 2 ... solve
            // v^2/amax + v*t_j - dist = 0
            let t_j = amax / jmax;
            0.5 * amax * (-t_j + (t_j * t_j + 4.0 * dist / amax).sqrt())
        }
    };

    let (t_j, t_a) = if v_peak * jmax <= amax * amax {
        ((v_peak / jmax).sqrt(), 0.0)
    } else {
        (amax / jmax, v_peak / amax - amax / jmax)
    };
    let accel_dist = v_peak * (2.0 * t_j + t_a) / 2.0;
    let t_v = (dist - 2.0 * accel_dist) / v_peak;
    let t_v = if t_v < 0.0 { 0.0 } else { t_v };

    let duration = 4.0 * t_j + 2.0 * t_a + t_v;
    if duration > MAX_PROFILE_HORIZON {
        return Err(MotionError::Unreachable {
            horizon: MAX_PROFILE_HORIZON,
        });
    }

    // assemble the seven segments in signed coordinates
    let jerks = [jmax, 0.0, -jmax, 0.0, -jmax, 0.0, jmax];
    let durs = [t_j, t_a, t_j, t_v, t_j, t_a, t_j];
    let mut segments: Vec<Segment> = Vec::with_capacity(7);
    let (mut s, mut v, mut a) = (0.0, 0.0, 0.0);
    let mut t_acc = 0.0;
    for k in 0..7 {
        let seg = Segment {
            t_start: t_acc,
            t_end: t_acc + durs[k],
            s0: s,
            v0: v,
            a0: a,
            jerk: jerks[k],
        };
        let (s1, v1, a1) = seg.end_state(durs[k]);
        s = s1;
        v = v1;
        a = a1;
        t_acc = seg.t_end;
        segments.push(seg);
    }

    let n = (duration / ts).ceil() as usize;
    let mut alpha = Vec::with_capacity(n + 1);
    let mut seg_idx = 0;
    for k in 0..=n {
        let t = k as f64 * ts;
        if t >= duration {
            alpha.push(to);
            continue;
        }
        while t >= segments[seg_idx].t_end && seg_idx + 1 < segments.len() {
            seg_idx += 1;
        }
        let seg = &segments[seg_idx];
        alpha.push(from + sign * seg.eval(t - seg.t_start));
    }
    *alpha.last_mut().unwrap() = to;
    Ok(MotionProfile {
        ts,
        alpha,
        strategy: Strategy::Polynomial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::default_poly3_limits;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn finite_diff(x: &[f64], ts: f64) -> Vec<f64> {
        x.windows(2).map(|w| (w[1] - w[0]) / ts).collect()
    }

    #[test]
    fn default_limits_give_5p3_second_half_turn() {
        let prof = poly3_profile(0.0, PI, &default_poly3_limits(), 0.01).unwrap();
        assert_relative_eq!(prof.duration(), 5.3, epsilon = 0.011);
        assert_eq!(prof.target(), PI);
        assert_eq!(prof.alpha[0], 0.0);
    }

    #[test]
    fn zero_length_move() {
        let prof = poly3_profile(1.0, 1.0, &default_poly3_limits(), 0.01).unwrap();
        assert_eq!(prof.alpha, vec![1.0]);
    }

    #[test]
    fn derivative_bounds_hold() {
        let lim = default_poly3_limits();
        let ts = 0.002;
        for &target in &[PI, 0.3, -2.0, 6.0] {
            let prof = poly3_profile(0.0, target, &lim, ts).unwrap();
            let v = finite_diff(&prof.alpha, ts);
            let a = finite_diff(&v, ts);
            let j = finite_diff(&a, ts);
            let tol = 1.0 + 1e-6;
            assert!(v.iter().all(|x| x.abs() <= lim.vmax * tol));
            assert!(a.iter().all(|x| x.abs() <= lim.amax * tol));
            assert!(j.iter().all(|x| x.abs() <= lim.jmax * tol), "target {target}");
        }
    }

    #[test]
    fn short_moves_collapse_segments() {
        let lim = Poly3Limits {
            vmax: 10.0,
            amax: 10.0,
            jmax: 10.0,
        };
        let prof = poly3_profile(0.0, 0.01, &lim, 0.001).unwrap();
        assert_relative_eq!(prof.target(), 0.01, epsilon = 1e-15);
        let v = finite_diff(&prof.alpha, 0.001);
        assert!(v.iter().all(|x| x.abs() <= 10.0 * (1.0 + 1e-6)));
    }

    #[test]
    fn unreachable_under_tiny_limits() {
        let lim = Poly3Limits {
            vmax: 1e-4,
            amax: 1e-4,
            jmax: 1e-4,
        };
        assert!(matches!(
            poly3_profile(0.0, 10.0, &lim, 0.01),
            Err(MotionError::Unreachable { .. })
        ));
    }
}
