//! CSV import/export for traces, profiles and frequency responses.
//!
//! All floating-point columns carry 17 significant digits so re-reading a
//! file reproduces every value bit-exactly.

use std::io::{self, BufRead, Write};

use crate::modal::FrfCurve;
use crate::motion::{MotionProfile, Strategy};
use crate::multibody::SimOutput;

pub use crate::shaper::xml::format_f64;

pub const SIM_CSV_HEADER: &str = "t,alpha,eps2,theta2,tensionA,tensionB,tensionC";
pub const PROFILE_CSV_HEADER: &str = "t,alpha";
pub const UPDATES_CSV_HEADER: &str = "t,angle";
pub const FRF_CSV_HEADER: &str = "omega,gain_eps2,phase_eps2,gain_theta2,phase_theta2";

pub fn write_sim_csv<W: Write>(out: &mut W, sim: &SimOutput) -> io::Result<()> {
    writeln!(out, "{SIM_CSV_HEADER}")?;
    for k in 0..sim.time.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_f64(sim.time[k]),
            format_f64(sim.alpha[k]),
            format_f64(sim.eps2[k]),
            format_f64(sim.theta2[k]),
            format_f64(sim.tension[0][k]),
            format_f64(sim.tension[1][k]),
            format_f64(sim.tension[2][k]),
        )?;
    }
    Ok(())
}

pub fn write_profile_csv<W: Write>(out: &mut W, profile: &MotionProfile) -> io::Result<()> {
    writeln!(out, "{PROFILE_CSV_HEADER}")?;
    for (k, a) in profile.alpha.iter().enumerate() {
        writeln!(
            out,
            "{},{}",
            format_f64(k as f64 * profile.ts),
            format_f64(*a)
        )?;
    }
    Ok(())
}

pub fn read_profile_csv<R: BufRead>(reader: R) -> io::Result<MotionProfile> {
    let mut times: Vec<f64> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed == PROFILE_CSV_HEADER) {
            continue;
        }
        let mut fields = trimmed.split(',');
        let t = parse_field(fields.next(), lineno)?;
        let a = parse_field(fields.next(), lineno)?;
        times.push(t);
        alpha.push(a);
    }
    if alpha.len() < 2 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "profile needs at least two samples",
        ));
    }
    let ts = times[1] - times[0];
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - ts).abs() > 1e-9 * ts.max(1e-9) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("non-uniform time grid near row {}", k + 1),
            ));
        }
    }
    Ok(MotionProfile {
        ts,
        alpha,
        strategy: Strategy::Step,
    })
}

pub fn write_updates_csv<W: Write>(out: &mut W, updates: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "{UPDATES_CSV_HEADER}")?;
    for (t, angle) in updates {
        writeln!(out, "{},{}", format_f64(*t), format_f64(*angle))?;
    }
    Ok(())
}

pub fn read_updates_csv<R: BufRead>(reader: R) -> io::Result<Vec<(f64, f64)>> {
    let mut updates = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed == UPDATES_CSV_HEADER) {
            continue;
        }
        let mut fields = trimmed.split(',');
        let t = parse_field(fields.next(), lineno)?;
        let angle = parse_field(fields.next(), lineno)?;
        updates.push((t, angle));
    }
    Ok(updates)
}

pub fn write_frf_csv<W: Write>(out: &mut W, frf: &FrfCurve) -> io::Result<()> {
    writeln!(out, "{FRF_CSV_HEADER}")?;
    for k in 0..frf.omega.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_f64(frf.omega[k]),
            format_f64(frf.gain_eps2[k]),
            format_f64(frf.phase_eps2[k]),
            format_f64(frf.gain_theta2[k]),
            format_f64(frf.phase_theta2[k]),
        )?;
    }
    Ok(())
}

fn parse_field(field: Option<&str>, lineno: usize) -> io::Result<f64> {
    field
        .ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("missing field on line {}", lineno + 1),
            )
        })?
        .trim()
        .parse()
        .map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("bad number on line {}: {e}", lineno + 1),
            )
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::const_velocity_profile;

    #[test]
    fn profile_csv_roundtrip_is_bit_exact() {
        let prof = const_velocity_profile(0.0, std::f64::consts::PI, 1.0472, 0.01);
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &prof).unwrap();
        let back = read_profile_csv(buf.as_slice()).unwrap();
        assert_eq!(back.alpha.len(), prof.alpha.len());
        for (a, b) in back.alpha.iter().zip(&prof.alpha) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!((back.ts - prof.ts).abs() < 1e-15);
    }

    #[test]
    fn updates_csv_roundtrip() {
        let updates = vec![(0.0, 1.5), (0.25, -2.0), (3.0, 0.1)];
        let mut buf = Vec::new();
        write_updates_csv(&mut buf, &updates).unwrap();
        let back = read_updates_csv(buf.as_slice()).unwrap();
        assert_eq!(updates, back);
    }
}
