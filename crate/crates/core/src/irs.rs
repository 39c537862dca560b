//! IRS phase-shift design and location-aided IRS→UE channel reconstruction.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{irs_ue_channel, ArrayGeometry};
use crate::geometry::SphericalTarget;
use crate::linalg::CVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrsError {
    #[error("IRS link vectors differ in length ({h} vs {g})")]
    Length { h: usize, g: usize },
    #[error("phase vector has {got} entries, link has {expected}")]
    Phases { got: usize, expected: usize },
    #[error("true channel has zero norm")]
    ZeroChannel,
    #[error("brute force needs 1..=8 elements and at least 2 levels")]
    BruteForce,
}

/// Phase shifts w_n; the applied reflection coefficients are e^{j w_n}.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftVector(pub Vec<f64>);

impl PhaseShiftVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.0.iter().map(|&w| Complex64::from_polar(1.0, w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsLink {
    /// IRS→UE channel.
    pub h_r: CVector,
    /// BS→IRS effective channel.
    pub g: CVector,
    pub beta_r_db: f64,
}

impl IrsLink {
    pub fn new(h_r: CVector, g: CVector, beta_r_db: f64) -> Result<Self, IrsError> {
        if h_r.len() != g.len() {
            return Err(IrsError::Length { h: h_r.len(), g: g.len() });
        }
        Ok(Self { h_r, g, beta_r_db })
    }

    /// Link with an all-ones BS→IRS channel.
    pub fn with_unit_feed(h_r: CVector, beta_r_db: f64) -> Self {
        let n = h_r.len();
        let g = CVector::from_real(&vec![1.0; n]).expect("finite");
        Self { h_r, g, beta_r_db }
    }

    pub fn len(&self) -> usize {
        self.h_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_r.is_empty()
    }

    fn cascade(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.h_r.iter().zip(self.g.iter()).map(|(h, g)| h * g)
    }

    /// (Σ |h_r[n] g[n]|)², the best achievable objective.
    pub fn analytic_optimum(&self) -> f64 {
        self.cascade().map(|c| c.norm()).sum::<f64>().powi(2)
    }
}

/// |Σ_n h_r[n] e^{j w_n} g[n]|².
pub fn objective(link: &IrsLink, phases: &PhaseShiftVector) -> Result<f64, IrsError> {
    if phases.len() != link.len() {
        return Err(IrsError::Phases { got: phases.len(), expected: link.len() });
    }
    let sum: Complex64 = link
        .cascade()
        .zip(phases.0.iter())
        .map(|(c, &w)| c * Complex64::from_polar(1.0, w))
        .sum();
    Ok(sum.norm_sqr())
}

/// w_n = −arg(h_r[n] g[n]); entries with a zero cascade get w_n = 0.
pub fn optimal_phases(link: &IrsLink) -> PhaseShiftVector {
    PhaseShiftVector(
        link.cascade()
            .map(|c| if c == Complex64::new(0.0, 0.0) { 0.0 } else { -c.arg() })
            .collect(),
    )
}

/// Exhaustive search over `levels` uniformly spaced phases per element,
/// with the first element pinned to 0 (a common phase does not change the
/// objective).
pub fn brute_force_phases(link: &IrsLink, levels: usize) -> Result<(PhaseShiftVector, f64), IrsError> {
    let n = link.len();
    if n == 0 || n > 8 || levels < 2 {
        return Err(IrsError::BruteForce);
    }
    let step = 2.0 * PI / levels as f64;
    let cascade: Vec<Complex64> = link.cascade().collect();
    let rot: Vec<Complex64> = (0..levels).map(|k| Complex64::from_polar(1.0, k as f64 * step)).collect();
    let mut idx = vec![0usize; n];
    let mut best = (idx.clone(), f64::NEG_INFINITY);
    loop {
        let sum: Complex64 = cascade.iter().zip(&idx).map(|(c, &k)| c * rot[k]).sum();
        let v = sum.norm_sqr();
        if v > best.1 {
            best = (idx.clone(), v);
        }
        // Odometer over elements 1..n.
        let mut pos = 1;
        loop {
            if pos == n {
                let phases = best.0.iter().map(|&k| k as f64 * step).collect();
                return Ok((PhaseShiftVector(phases), best.1));
            }
            idx[pos] += 1;
            if idx[pos] < levels {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// IRS→UE channel rebuilt from an estimated UE direction.
pub fn reconstruct_irs_channel(ue_est: &SphericalTarget, g_irs: &ArrayGeometry, beta_r_db: f64) -> CVector {
    irs_ue_channel(g_irs, ue_est.azimuth_rad, ue_est.elevation_rad, beta_r_db)
}

/// ‖ĥ − h‖² / ‖h‖².
pub fn nmse(h_true: &CVector, h_est: &CVector) -> Result<f64, IrsError> {
    if h_true.len() != h_est.len() {
        return Err(IrsError::Length { h: h_true.len(), g: h_est.len() });
    }
    let denom = h_true.norm_sqr();
    if denom == 0.0 {
        return Err(IrsError::ZeroChannel);
    }
    let num = h_est.sub(h_true).expect("lengths checked").norm_sqr();
    Ok(num / denom)
}
