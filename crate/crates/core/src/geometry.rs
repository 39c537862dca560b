//! Pixel + depth to camera-frame Cartesian to spherical target coordinates.
//!
//! Frames: the camera looks along +z, x to the right and y down the image.
//! A [`SphericalTarget`] stores the polar angle from boresight (`azimuth_rad`,
//! θ_w) and the angle around boresight (`elevation_rad`, φ_w).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("lateral radius {lateral} exceeds range {range}")]
    LateralExceedsRange { lateral: f64, range: f64 },
    #[error("zero-length vector has no direction")]
    ZeroVector,
    #[error("invalid camera intrinsics: {0}")]
    Intrinsics(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_length_px: f64,
    pub principal_point: (f64, f64),
    pub image_size: (u32, u32),
}

impl CameraIntrinsics {
    pub fn new(focal_length_px: f64, principal_point: (f64, f64), image_size: (u32, u32)) -> Result<Self, GeometryError> {
        let intr = Self {
            focal_length_px,
            principal_point,
            image_size,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.focal_length_px > 0.0 && self.focal_length_px.is_finite()) {
            return Err(GeometryError::Intrinsics("focal length must be positive"));
        }
        let (u0, v0) = self.principal_point;
        let (w, h) = self.image_size;
        if !(0.0..=w as f64).contains(&u0) || !(0.0..=h as f64).contains(&v0) {
            return Err(GeometryError::Intrinsics("principal point outside the image"));
        }
        Ok(())
    }
}

impl Default for CameraIntrinsics {
    /// 640×480 sensor, f = 500 px, principal point at the image center.
    fn default() -> Self {
        Self {
            focal_length_px: 500.0,
            principal_point: (320.0, 240.0),
            image_size: (640, 480),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn sub(&self, other: &CartesianPoint) -> CartesianPoint {
        CartesianPoint::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

/// Range and direction of a target relative to an array or camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalTarget {
    pub range_m: f64,
    /// θ_w: angle from boresight, in [0, π/2] for targets in front.
    pub azimuth_rad: f64,
    /// φ_w: angle around boresight, in (−π, π].
    pub elevation_rad: f64,
}

impl SphericalTarget {
    pub const fn new(range_m: f64, azimuth_rad: f64, elevation_rad: f64) -> Self {
        Self {
            range_m,
            azimuth_rad,
            elevation_rad,
        }
    }

    /// Maps arbitrary (θ, φ) onto the front-hemisphere representation with
    /// the same direction cosines (sin θ cos φ, sin θ sin φ).
    pub fn canonical(self) -> Self {
        let mut theta = self.azimuth_rad;
        let mut phi = self.elevation_rad;
        theta = theta.rem_euclid(2.0 * PI);
        if theta > PI {
            theta -= 2.0 * PI;
        }
        if theta < 0.0 {
            theta = -theta;
            phi += PI;
        }
        if theta > PI / 2.0 {
            theta = PI - theta;
        }
        Self {
            range_m: self.range_m,
            azimuth_rad: theta,
            elevation_rad: wrap_angle(phi),
        }
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Back-projects pixel (u, v) observed at Euclidean range `range_m`.
pub fn pixel_to_camera(u: f64, v: f64, range_m: f64, intr: &CameraIntrinsics) -> Result<CartesianPoint, GeometryError> {
    if !(range_m > 0.0 && range_m.is_finite()) {
        return Err(GeometryError::InvalidRange(range_m));
    }
    let f = intr.focal_length_px;
    let (u0, v0) = intr.principal_point;
    let du = (u - u0) / f;
    let dv = (v - v0) / f;
    let ray_norm = (du * du + dv * dv + 1.0).sqrt();
    // Metric scale per pixel offset so that the ray point sits at `range_m`.
    let s = range_m / (f * ray_norm);
    let x = (u - u0) * s;
    let y = (v - v0) * s;
    let lateral2 = x * x + y * y;
    if lateral2 > range_m * range_m {
        return Err(GeometryError::LateralExceedsRange {
            lateral: lateral2.sqrt(),
            range: range_m,
        });
    }
    let z = (range_m * range_m - lateral2).sqrt();
    Ok(CartesianPoint::new(x, y, z))
}

pub fn cart_to_spherical(p: &CartesianPoint) -> Result<SphericalTarget, GeometryError> {
    let r = p.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(GeometryError::ZeroVector);
    }
    let lateral = p.x.hypot(p.y);
    let theta = lateral.atan2(p.z);
    let phi = if p.x == 0.0 && p.y == 0.0 { 0.0 } else { wrap_angle(p.y.atan2(p.x)) };
    Ok(SphericalTarget::new(r, theta, phi))
}

pub fn spherical_to_cart(t: &SphericalTarget) -> CartesianPoint {
    let (st, ct) = t.azimuth_rad.sin_cos();
    let (sp, cp) = t.elevation_rad.sin_cos();
    CartesianPoint::new(t.range_m * st * cp, t.range_m * st * sp, t.range_m * ct)
}

/// Full pipeline from a detected pixel and its depth reading.
pub fn pixel_to_target(u: f64, v: f64, range_m: f64, intr: &CameraIntrinsics) -> Result<SphericalTarget, GeometryError> {
    cart_to_spherical(&pixel_to_camera(u, v, range_m, intr)?)
}
