//! Physical parameters of the two-body cable-suspended system.

use serde::{Deserialize, Serialize};

use super::MultibodyError;

/// Physical parameters of the suspension unit (body 1) and belt (body 2).
///
/// Defaults reproduce the reference setup: three 1.5 m cables from 0.32 m
/// anchor arms down to a 0.147 kg belt of radius 0.15 m whose center of mass
/// sits 15 mm toward the buckle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Cable lengths l_A, l_B, l_C in meters.
    pub cable_lengths: [f64; 3],
    /// Radius of the anchor-arm circle on body 1, meters.
    pub arm_radius: f64,
    /// Radius of the belt anchor circle, meters.
    pub belt_radius: f64,
    /// Belt mass, kg.
    pub belt_mass: f64,
    /// Distance of the belt center of mass from its geometric center along
    /// the buckle axis, meters.
    pub com_offset: f64,
    /// Principal moments of inertia of the belt about its center of mass,
    /// kg m^2.
    pub belt_inertia: [f64; 3],
    /// Angle between the buckle and the nearest belt cable anchor, radians.
    #[serde(default)]
    pub buckle_angle: f64,
    /// Spin inertia of body 1 about the vertical axis, kg m^2. Inert under
    /// prescribed motion; any positive value works.
    #[serde(default = "default_mcsu_inertia")]
    pub mcsu_inertia_zz: f64,
    /// Gravitational acceleration, m/s^2.
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Viscous damping torque coefficient acting on the belt spin rate about
    /// its symmetry axis, N m s/rad. Zero in the nominal model.
    #[serde(default)]
    pub damping_torsion: f64,
    /// Viscous damping torque coefficient acting on the belt tilt rates,
    /// N m s/rad. Zero in the nominal model.
    #[serde(default)]
    pub damping_nutation: f64,
}

fn default_mcsu_inertia() -> f64 {
    0.01
}

fn default_gravity() -> f64 {
    9.81
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl PlantParams {
    /// Parameters of the reference physical setup.
    pub fn reference() -> Self {
        Self {
            cable_lengths: [1.5; 3],
            arm_radius: 0.32,
            belt_radius: 0.15,
            belt_mass: 0.147,
            com_offset: 0.015,
            belt_inertia: [0.0015, 0.0018, 0.0033],
            buckle_angle: 0.0,
            mcsu_inertia_zz: default_mcsu_inertia(),
            gravity: default_gravity(),
            damping_torsion: 0.0,
            damping_nutation: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), MultibodyError> {
        let check = |name: &str, v: f64, strictly_positive: bool| {
            if !v.is_finite() || (strictly_positive && v <= 0.0) || (!strictly_positive && v < 0.0)
            {
                return Err(MultibodyError::InvalidParams(format!(
                    "{name} must be {}, got {v}",
                    if strictly_positive {
                        "strictly positive"
                    } else {
                        "non-negative"
                    }
                )));
            }
            Ok(())
        };
        for (i, &l) in self.cable_lengths.iter().enumerate() {
            check(&format!("cable_lengths[{i}]"), l, true)?;
        }
        check("arm_radius", self.arm_radius, true)?;
        check("belt_radius", self.belt_radius, true)?;
        check("belt_mass", self.belt_mass, true)?;
        check("com_offset", self.com_offset, false)?;
        for (i, &m) in self.belt_inertia.iter().enumerate() {
            check(&format!("belt_inertia[{i}]"), m, true)?;
        }
        check("mcsu_inertia_zz", self.mcsu_inertia_zz, true)?;
        check("gravity", self.gravity, true)?;
        check("damping_torsion", self.damping_torsion, false)?;
        check("damping_nutation", self.damping_nutation, false)?;
        if !self.buckle_angle.is_finite() {
            return Err(MultibodyError::InvalidParams(
                "buckle_angle must be finite".into(),
            ));
        }
        if self.com_offset >= self.belt_radius {
            return Err(MultibodyError::InvalidParams(format!(
                "com_offset ({}) must be smaller than belt_radius ({})",
                self.com_offset, self.belt_radius
            )));
        }
        Ok(())
    }

    /// Anchor-arm tip positions in the body-1 frame; arms are 120 deg apart
    /// with arm A on the +x axis.
    pub(crate) fn arm_points(&self) -> [nalgebra::Vector3<f64>; 3] {
        anchor_circle(self.arm_radius, 0.0)
    }

    /// Cable anchor positions in the body-2 frame. The buckle sits on the +x
    /// axis; the anchors are rotated from it by the buckle angle.
    pub(crate) fn belt_points(&self) -> [nalgebra::Vector3<f64>; 3] {
        anchor_circle(self.belt_radius, self.buckle_angle)
    }

    /// Buckle position in the body-2 frame.
    pub(crate) fn buckle_point(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.belt_radius, 0.0, 0.0)
    }

    /// Belt center-of-mass offset in the body-2 frame.
    pub(crate) fn com_point(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.com_offset, 0.0, 0.0)
    }
}

fn anchor_circle(radius: f64, phase: f64) -> [nalgebra::Vector3<f64>; 3] {
    let mut pts = [nalgebra::Vector3::zeros(); 3];
    for (k, p) in pts.iter_mut().enumerate() {
        let a = phase + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
        *p = nalgebra::Vector3::new(radius * a.cos(), radius * a.sin(), 0.0);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_params_are_valid() {
        PlantParams::reference().validate().unwrap();
    }

    #[test]
    fn com_offset_must_stay_inside_belt() {
        let mut p = PlantParams::reference();
        p.com_offset = 0.2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_roundtrip_with_defaults() {
        let p = PlantParams::reference();
        let s = serde_json::to_string(&p).unwrap();
        let back: PlantParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);

        // damping and buckle angle may be omitted
        let minimal = r#"{
            "cable_lengths": [1.5, 1.5, 1.5],
            "arm_radius": 0.32,
            "belt_radius": 0.15,
            "belt_mass": 0.147,
            "com_offset": 0.015,
            "belt_inertia": [0.0015, 0.0018, 0.0033]
        }"#;
        let q: PlantParams = serde_json::from_str(minimal).unwrap();
        assert_eq!(q, PlantParams::reference());
    }
}
