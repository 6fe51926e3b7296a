//! Windowed, zero-padded spectra and sub-bin peak location.

use rustfft::{num_complex::Complex, FftPlanner};

/// Magnitude spectrum of a real signal: Hann window, zero-padding to at least
/// `pad_factor` times the next power of two, frequencies in rad/s.
pub struct Spectrum {
    /// Angular frequency grid, rad/s.
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
}

pub fn spectrum(signal: &[f64], dt: f64, pad_factor: usize) -> Spectrum {
    assert!(signal.len() >= 4, "record too short for a spectrum");
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut padded_len = n.next_power_of_two() * pad_factor.max(1);
    padded_len = padded_len.next_power_of_two();

    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(padded_len);
    for (i, &x) in signal.iter().enumerate() {
        // Hann window
        let w = 0.5
            - 0.5
                * (2.0 * std::f64::consts::PI * i as f64 / (n as f64 - 1.0))
                    .cos();
        buf.push(Complex::new((x - mean) * w, 0.0));
    }
    buf.resize(padded_len, Complex::new(0.0, 0.0));

    FftPlanner::new().plan_fft_forward(padded_len).process(&mut buf);

    let half = padded_len / 2;
    let domega = 2.0 * std::f64::consts::PI / (padded_len as f64 * dt);
    let omega = (0..half).map(|k| k as f64 * domega).collect();
    let magnitude = buf[..half].iter().map(|c| c.norm()).collect();
    Spectrum { omega, magnitude }
}

/// A located spectral peak.
#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub omega: f64,
    pub magnitude: f64,
}

/// Local maxima above `rel_threshold` times the global maximum, refined with
/// parabolic interpolation on the log magnitude, sorted by descending
/// magnitude. Peaks closer than `min_separation` rad/s merge into the larger
/// one.
pub fn find_peaks(spec: &Spectrum, rel_threshold: f64, min_separation: f64) -> Vec<Peak> {
    let mags = &spec.magnitude;
    let max_mag = mags.iter().cloned().fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Vec::new();
    }
    let mut peaks: Vec<Peak> = Vec::new();
    for k in 1..mags.len() - 1 {
        if mags[k] > mags[k - 1] && mags[k] >= mags[k + 1] && mags[k] >= rel_threshold * max_mag {
            // parabolic refinement in log magnitude
            let (a, b, c) = (mags[k - 1].ln(), mags[k].ln(), mags[k + 1].ln());
            let denom = a - 2.0 * b + c;
            let shift = if denom.abs() > 1e-300 {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let domega = spec.omega[1] - spec.omega[0];
            peaks.push(Peak {
                omega: spec.omega[k] + shift * domega,
                magnitude: mags[k],
            });
        }
    }
    peaks.sort_by(|x, y| y.magnitude.total_cmp(&x.magnitude));
    let mut kept: Vec<Peak> = Vec::new();
    for p in peaks {
        if kept
            .iter()
            .all(|q| (q.omega - p.omega).abs() >= min_separation)
        {
            kept.push(p);
        }
    }
    kept
}

/// Zero-phase band-pass in the frequency domain. The mask edges are
/// raised-cosine ramps over 25% of the band so the filter rings far less in
/// the time domain than a brick wall would; that matters when fitting decay
/// envelopes over several decades.
pub fn bandpass(signal: &[f64], dt: f64, omega_lo: f64, omega_hi: f64) -> Vec<f64> {
    let n = signal.len();
    let padded_len = n.next_power_of_two() * 2;
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .collect();
    buf.resize(padded_len, Complex::new(0.0, 0.0));

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded_len).process(&mut buf);
    let domega = 2.0 * std::f64::consts::PI / (padded_len as f64 * dt);
    let ramp = 0.25 * (omega_hi - omega_lo);
    let mask = |freq: f64| -> f64 {
        if freq < omega_lo - ramp || freq > omega_hi + ramp {
            0.0
        } else if freq < omega_lo {
            0.5 + 0.5 * (std::f64::consts::PI * (freq - omega_lo) / ramp).cos()
        } else if freq > omega_hi {
            0.5 + 0.5 * (std::f64::consts::PI * (freq - omega_hi) / ramp).cos()
        } else {
            1.0
        }
    };
    for k in 0..padded_len {
        let freq = if k <= padded_len / 2 {
            k as f64 * domega
        } else {
            (padded_len - k) as f64 * domega
        };
        buf[k] *= mask(freq);
    }
    planner.plan_fft_inverse(padded_len).process(&mut buf);
    buf[..n]
        .iter()
        .map(|c| c.re / padded_len as f64)
        .collect()
}

/// Logarithmic-decrement damping estimate of a decaying band-limited
/// oscillation: a line fit of the log of successive extremum magnitudes.
/// Returns (xi, decay_rate). The edges of the record are discarded to avoid
/// filter transients.
pub fn log_decrement_damping(filtered: &[f64], dt: f64, omega: f64) -> Option<(f64, f64)> {
    let n = filtered.len();
    let skip = n / 10;
    let body = &filtered[skip..n - skip];
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    for k in 1..body.len() - 1 {
        let (a, b, c) = (body[k - 1], body[k], body[k + 1]);
        let is_max = b > a && b >= c && b > 0.0;
        let is_min = b < a && b <= c && b < 0.0;
        if is_max || is_min {
            extrema.push(((skip + k) as f64 * dt, b.abs()));
        }
    }
    if extrema.len() < 6 {
        return None;
    }
    // keep the clean part of the decay; late extrema drown in filter leakage
    let top = extrema.iter().map(|e| e.1).fold(0.0, f64::max);
    let extrema: Vec<(f64, f64)> = extrema
        .into_iter()
        .filter(|&(_, a)| a > 0.08 * top)
        .collect();
    if extrema.len() < 6 {
        return None;
    }
    // least-squares line through ln|peak| vs t
    let m = extrema.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, a) in &extrema {
        let y = a.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = m * stt - st * st;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (m * sty - st * sy) / denom;
    let decay = -slope;
    // below the numerical floor the record is effectively undamped
    if decay < 1e-4 * omega {
        return Some((0.0, decay));
    }
    let xi = (decay / omega).clamp(0.0, 0.999);
    Some((xi, decay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_tone_peaks_recovered_within_half_percent() {
        let dt = 0.005;
        let n = 12000;
        let (w1, w2) = (2.58, 3.55);
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (w1 * t).sin() + 0.6 * (w2 * t + 0.4).sin()
            })
            .collect();
        let spec = spectrum(&x, dt, 16);
        let peaks = find_peaks(&spec, 0.05, 0.4);
        assert!(peaks.len() >= 2);
        let mut top: Vec<f64> = peaks[..2].iter().map(|p| p.omega).collect();
        top.sort_by(f64::total_cmp);
        assert_relative_eq!(top[0], w1, max_relative = 5e-3);
        assert_relative_eq!(top[1], w2, max_relative = 5e-3);
    }

    #[test]
    fn damped_tone_recovered_within_ten_percent() {
        let dt = 0.005;
        let n = 16000;
        let (w, xi) = (3.0, 0.05);
        let wd = w * (1.0f64 - xi * xi).sqrt();
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (-xi * w * t).exp() * (wd * t).sin()
            })
            .collect();
        let filtered = bandpass(&x, dt, 0.7 * w, 1.3 * w);
        let (xi_est, _) = log_decrement_damping(&filtered, dt, w).unwrap();
        assert_relative_eq!(xi_est, xi, max_relative = 0.1);
    }

    #[test]
    fn undamped_tone_reports_zero_damping() {
        let dt = 0.005;
        let x: Vec<f64> = (0..16000)
            .map(|k| (2.5 * k as f64 * dt).sin())
            .collect();
        let filtered = bandpass(&x, dt, 1.8, 3.2);
        let (xi, _) = log_decrement_damping(&filtered, dt, 2.5).unwrap();
        assert_eq!(xi, 0.0);
    }
}
