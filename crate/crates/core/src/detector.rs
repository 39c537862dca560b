//! Statistical stand-in for the camera object detector: misses with
//! probability 1 − recall, otherwise returns the true direction with
//! Gaussian angle errors.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, SphericalTarget};
use crate::random::standard_normal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("profile {name}: {field} out of range")]
    Field { name: String, field: &'static str },
    #[error("profile {name}: stored F1 {stored} disagrees with precision/recall ({implied})")]
    F1 { name: String, stored: f64, implied: f64 },
    #[error("unknown detector profile {0:?}")]
    Unknown(String),
    #[error("profile file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorProfile {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub mean_abs_angle_err_az: f64,
    pub mean_abs_angle_err_el: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

impl DetectorProfile {
    pub fn new(name: &str, precision: f64, recall: f64, err_az: f64, err_el: f64) -> Result<Self, DetectorError> {
        let p = Self {
            name: name.to_owned(),
            precision,
            recall,
            mean_abs_angle_err_az: err_az,
            mean_abs_angle_err_el: err_el,
            f1: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Detector that always finds the target and makes no angle error.
    pub fn perfect() -> Self {
        Self::new("perfect", 1.0, 1.0, 0.0, 0.0).expect("valid")
    }

    pub fn implied_f1(&self) -> f64 {
        let s = self.precision + self.recall;
        if s == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / s
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |field| DetectorError::Field { name: self.name.clone(), field };
        if !(0.0..=1.0).contains(&self.precision) {
            return Err(bad("precision"));
        }
        if !(0.0..=1.0).contains(&self.recall) {
            return Err(bad("recall"));
        }
        if !(self.mean_abs_angle_err_az >= 0.0 && self.mean_abs_angle_err_az.is_finite()) {
            return Err(bad("mean_abs_angle_err_az"));
        }
        if !(self.mean_abs_angle_err_el >= 0.0 && self.mean_abs_angle_err_el.is_finite()) {
            return Err(bad("mean_abs_angle_err_el"));
        }
        if let Some(stored) = self.f1 {
            let implied = self.implied_f1();
            if (stored - implied).abs() > 0.005 {
                return Err(DetectorError::F1 { name: self.name.clone(), stored, implied });
            }
        }
        Ok(())
    }

    /// Gaussian σ whose mean absolute value equals `mean_abs`.
    pub fn sigma_for(mean_abs: f64) -> f64 {
        mean_abs * (PI / 2.0).sqrt()
    }
}

fn row(name: &str, p: f64, r: f64, f1: f64, az: f64, el: f64) -> DetectorProfile {
    DetectorProfile {
        name: name.to_owned(),
        precision: p,
        recall: r,
        mean_abs_angle_err_az: az,
        mean_abs_angle_err_el: el,
        f1: Some(f1),
    }
}

/// Measured operating points of the VOMTC-trained detector and the
/// EfficientDet-D8 baseline on the test, validation and V2 splits.
pub fn builtin_profiles() -> Vec<DetectorProfile> {
    vec![
        row("vomtc-test", 0.9446, 0.8104, 0.8724, 0.0804, 0.0804),
        row("vomtc-val", 0.9074, 0.7070, 0.7948, 0.1212, 0.1208),
        row("vomtc-v2", 0.9493, 0.7616, 0.8452, 0.0977, 0.0987),
        row("efficientdet-d8-test", 0.9417, 0.7678, 0.8459, 0.0972, 0.0973),
        row("efficientdet-d8-val", 0.9010, 0.6670, 0.7666, 0.1371, 0.1365),
        row("efficientdet-d8-v2", 0.9403, 0.7325, 0.8235, 0.1094, 0.1102),
    ]
}

pub fn builtin_profile(name: &str) -> Result<DetectorProfile, DetectorError> {
    builtin_profiles()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| DetectorError::Unknown(name.to_owned()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    profile: Vec<DetectorProfile>,
}

/// Reads `[[profile]]` tables from TOML text.
pub fn parse_profiles(text: &str) -> Result<Vec<DetectorProfile>, DetectorError> {
    let file: ProfileFile = toml::from_str(text).map_err(|e| DetectorError::Parse(e.to_string()))?;
    for p in &file.profile {
        p.validate()?;
    }
    Ok(file.profile)
}

/// One detection attempt. `None` means the target was missed.
pub fn simulate_detection<R: Rng + ?Sized>(
    truth: &SphericalTarget,
    p: &DetectorProfile,
    rng: &mut R,
) -> Option<SphericalTarget> {
    let hit = rng.gen::<f64>() < p.recall;
    if !hit {
        return None;
    }
    let d_az = DetectorProfile::sigma_for(p.mean_abs_angle_err_az) * standard_normal(rng);
    let d_el = DetectorProfile::sigma_for(p.mean_abs_angle_err_el) * standard_normal(rng);
    Some(
        SphericalTarget::new(truth.range_m, truth.azimuth_rad + d_az, wrap_angle(truth.elevation_rad + d_el))
            .canonical(),
    )
}

/// Multi-target frame: each target is detected independently, and false
/// positives are injected at (1 − precision)/precision per true positive
/// so that TP/(TP + FP) matches the profile precision in expectation.
/// False positives land uniformly on the front hemisphere.
pub fn simulate_scene<R: Rng + ?Sized>(
    truths: &[SphericalTarget],
    p: &DetectorProfile,
    rng: &mut R,
) -> Vec<SphericalTarget> {
    let fp_rate = if p.precision > 0.0 { (1.0 - p.precision) / p.precision } else { 0.0 };
    let mut out = Vec::new();
    for t in truths {
        let Some(d) = simulate_detection(t, p, rng) else {
            continue;
        };
        out.push(d);
        let mut count = fp_rate.floor() as usize;
        if rng.gen::<f64>() < fp_rate.fract() {
            count += 1;
        }
        for _ in 0..count {
            let theta = rng.gen_range(0.0..PI / 2.0);
            let phi = wrap_angle(rng.gen_range(-PI..PI));
            out.push(SphericalTarget::new(t.range_m, theta, phi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;

    #[test]
    fn builtin_values() {
        let p = builtin_profile("vomtc-test").unwrap();
        assert_eq!((p.precision, p.recall), (0.9446, 0.8104));
        assert_eq!((p.mean_abs_angle_err_az, p.mean_abs_angle_err_el), (0.0804, 0.0804));
        let e = builtin_profile("efficientdet-d8-val").unwrap();
        assert_eq!((e.precision, e.recall, e.f1), (0.9010, 0.6670, Some(0.7666)));
        assert_eq!(builtin_profiles().len(), 6);
        assert!(builtin_profile("yolo").is_err());
        for p in builtin_profiles() {
            p.validate().unwrap();
        }
    }

    #[test]
    fn validation() {
        assert!(DetectorProfile::new("x", 1.2, 0.5, 0.0, 0.0).is_err());
        assert!(DetectorProfile::new("x", 0.5, 0.5, -0.1, 0.0).is_err());
        let mut p = DetectorProfile::new("x", 0.9, 0.8, 0.1, 0.1).unwrap();
        p.f1 = Some(0.5);
        assert!(matches!(p.validate(), Err(DetectorError::F1 { .. })));
    }

    #[test]
    fn sigma_value() {
        assert!((DetectorProfile::sigma_for(0.0804) - 0.10077).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_blind() {
        let t = SphericalTarget::new(4.0, 0.6, -1.1);
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            assert_eq!(simulate_detection(&t, &DetectorProfile::perfect(), &mut rng), Some(t));
        }
        let blind = DetectorProfile::new("blind", 0.9, 0.0, 0.1, 0.1).unwrap();
        assert!((0..100).all(|_| simulate_detection(&t, &blind, &mut rng).is_none()));
    }

    #[test]
    fn same_seed_same_draws() {
        let t = SphericalTarget::new(4.0, 0.6, -1.1);
        let p = builtin_profile("vomtc-test").unwrap();
        let a: Vec<_> = {
            let mut r = rng_from_seed(9);
            (0..50).map(|_| simulate_detection(&t, &p, &mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = rng_from_seed(9);
            (0..50).map(|_| simulate_detection(&t, &p, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn scene_precision_matches_profile() {
        let p = builtin_profile("vomtc-val").unwrap();
        let mut rng = rng_from_seed(3);
        let truths = [SphericalTarget::new(5.0, 0.5, 0.0), SphericalTarget::new(7.0, 0.9, 2.0)];
        let mut tp = 0usize;
        let mut total = 0usize;
        for _ in 0..20_000 {
            let d = simulate_scene(&truths, &p, &mut rng);
            total += d.len();
            // True positives are the first entry after each hit, and lie near a truth.
            tp += d
                .iter()
                .filter(|x| truths.iter().any(|t| (x.azimuth_rad - t.azimuth_rad).abs() < 0.6 && (x.range_m - t.range_m).abs() < 1e-12 && wrap_angle(x.elevation_rad - t.elevation_rad).abs() < 0.6))
                .count();
        }
        // Some false positives land near a truth by chance, so bound loosely.
        let prec = tp as f64 / total as f64;
        assert!((prec - p.precision).abs() < 0.02, "{prec}");
    }

    #[test]
    fn profile_file() {
        let text = r#"
[[profile]]
name = "custom"
precision = 0.9
recall = 0.8
mean_abs_angle_err_az = 0.05
mean_abs_angle_err_el = 0.06
f1 = 0.847
"#;
        let ps = parse_profiles(text).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].name, "custom");
        assert!(parse_profiles("[[profile]]\nname = \"x\"\n").is_err());
        assert!(parse_profiles(&text.replace("f1 = 0.847", "bogus = 1")).is_err());
    }
}
