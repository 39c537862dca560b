//! Path loss, array steering vectors and line-of-sight channels.
//!
//! Steering vectors take spatial frequencies ψ ∈ [−1, 1] (half-wavelength
//! spacing, phase step πψ per element). Physical angles map to a planar
//! array through ψx = sin θ cos φ, ψy = sin θ sin φ.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SphericalTarget;
use crate::linalg::{CMatrix, CVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive and finite, got {0}")]
    InvalidDistance(f64),
    #[error("array geometry needs at least one element per axis")]
    EmptyArray,
    #[error("carrier frequency must be positive, got {0} GHz")]
    InvalidCarrier(f64),
}

/// Uniform planar array with half-wavelength spacing; `ny == 1` is a ULA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub nx: usize,
    pub ny: usize,
}

impl ArrayGeometry {
    pub fn new(nx: usize, ny: usize) -> Result<Self, ChannelError> {
        if nx == 0 || ny == 0 {
            return Err(ChannelError::EmptyArray);
        }
        Ok(Self { nx, ny })
    }

    pub const fn ula(len: usize) -> Self {
        Self { nx: len, ny: 1 }
    }

    /// Square array for a perfect-square element count.
    pub fn square(elements: usize) -> Option<Self> {
        let side = (elements as f64).sqrt().round() as usize;
        (side > 0 && side * side == elements).then_some(Self { nx: side, ny: side })
    }

    /// Near-square factorization nx·ny = elements with nx ≤ ny.
    pub fn factor(elements: usize) -> Result<Self, ChannelError> {
        if elements == 0 {
            return Err(ChannelError::EmptyArray);
        }
        let mut nx = (elements as f64).sqrt().floor() as usize;
        while elements % nx != 0 {
            nx -= 1;
        }
        Ok(Self { nx, ny: elements / nx })
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PathLossModel {
    /// Indoor LoS model: β = −(31.84 + 21.5 log10 r + 19 log10 f_c[GHz]).
    #[default]
    IndoorLos,
    /// β = 0 dB regardless of distance.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub carrier_freq_ghz: f64,
    #[serde(default)]
    pub model: PathLossModel,
}

impl PathLossParams {
    pub fn new(carrier_freq_ghz: f64, model: PathLossModel) -> Result<Self, ChannelError> {
        if !(carrier_freq_ghz > 0.0 && carrier_freq_ghz.is_finite()) {
            return Err(ChannelError::InvalidCarrier(carrier_freq_ghz));
        }
        Ok(Self { carrier_freq_ghz, model })
    }

    pub fn indoor(carrier_freq_ghz: f64) -> Result<Self, ChannelError> {
        Self::new(carrier_freq_ghz, PathLossModel::IndoorLos)
    }
}

/// Large-scale gain β(r) in dB (≤ 0 for the physical model).
pub fn path_loss_db(r: f64, p: &PathLossParams) -> Result<f64, ChannelError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ChannelError::InvalidDistance(r));
    }
    if !(p.carrier_freq_ghz > 0.0) {
        return Err(ChannelError::InvalidCarrier(p.carrier_freq_ghz));
    }
    Ok(match p.model {
        PathLossModel::IndoorLos => -(31.84 + 21.5 * r.log10() + 19.0 * p.carrier_freq_ghz.log10()),
        PathLossModel::Normalized => 0.0,
    })
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// (1/√L)[1, e^{jπψ}, …, e^{j(L−1)πψ}].
pub fn ula_steering(len: usize, psi: f64) -> CVector {
    let len = len.max(1);
    let norm = 1.0 / (len as f64).sqrt();
    CVector::from_vec(
        (0..len)
            .map(|n| Complex64::from_polar(norm, PI * psi * n as f64))
            .collect(),
    )
}

/// Direction cosines (ψx, ψy) of a physical direction.
pub fn spatial_frequencies(theta: f64, phi: f64) -> (f64, f64) {
    let s = theta.sin();
    (s * phi.cos(), s * phi.sin())
}

/// Planar steering vector at explicit spatial frequencies, x-major ordering.
pub fn upa_steering_psi(g: &ArrayGeometry, psi_x: f64, psi_y: f64) -> CVector {
    ula_steering(g.nx, psi_x).kron(&ula_steering(g.ny, psi_y))
}

pub fn upa_steering(g: &ArrayGeometry, theta: f64, phi: f64) -> CVector {
    let (px, py) = spatial_frequencies(theta, phi);
    upa_steering_psi(g, px, py)
}

pub fn steering_toward(g: &ArrayGeometry, t: &SphericalTarget) -> CVector {
    upa_steering(g, t.azimuth_rad, t.elevation_rad)
}

/// One line-of-sight channel draw H ∈ C^{N×M} (rows: receive elements).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub beta_db: f64,
    pub alpha: Complex64,
    pub aod: SphericalTarget,
    pub aoa: SphericalTarget,
}

impl ChannelRealization {
    pub fn tx_len(&self) -> usize {
        self.h.cols()
    }

    pub fn rx_len(&self) -> usize {
        self.h.rows()
    }

    pub fn beta_linear(&self) -> f64 {
        db_to_linear(self.beta_db)
    }
}

/// H = √β · α · a_N(aoa) · a_M(aod)ᴴ, with β evaluated at the AoD range.
pub fn los_channel(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    aod: &SphericalTarget,
    aoa: &SphericalTarget,
    p: &PathLossParams,
    alpha: Complex64,
) -> Result<ChannelRealization, ChannelError> {
    let beta_db = path_loss_db(aod.range_m, p)?;
    let gain = db_to_linear(beta_db).sqrt();
    let a_tx = steering_toward(tx, aod);
    let a_rx = steering_toward(rx, aoa);
    let h = a_rx.scale(alpha * gain).outer_h(&a_tx);
    Ok(ChannelRealization {
        h,
        beta_db,
        alpha,
        aod: *aod,
        aoa: *aoa,
    })
}

/// IRS→UE channel h_r = √β_r · a_IRS(θ, φ) with unit-modulus entries
/// e^{−jπ(n_x cos θ sin φ + n_y sin θ sin φ)}.
pub fn irs_ue_channel(g: &ArrayGeometry, theta_ue: f64, phi_ue: f64, beta_r_db: f64) -> CVector {
    let amp = db_to_linear(beta_r_db).sqrt();
    let sx = theta_ue.cos() * phi_ue.sin();
    let sy = theta_ue.sin() * phi_ue.sin();
    let ax: Vec<Complex64> = (0..g.nx).map(|n| Complex64::from_polar(1.0, -PI * n as f64 * sx)).collect();
    let ay: Vec<Complex64> = (0..g.ny).map(|n| Complex64::from_polar(1.0, -PI * n as f64 * sy)).collect();
    CVector::from_vec(ax.into_iter().map(|a| a * amp).collect()).kron(&CVector::from_vec(ay))
}
