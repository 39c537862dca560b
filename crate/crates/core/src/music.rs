//! Single-source MUSIC angle-of-arrival estimation on a planar receive array.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::channel::{steering_toward, upa_steering, ArrayGeometry};
use crate::geometry::{wrap_angle, SphericalTarget};
use crate::linalg::{CMatrix, CVector, LinalgError};
use crate::random::complex_normal;

/// Peak denominators below this are treated as an exact null; the grid
/// point is returned without parabolic refinement.
const EXACT_NULL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MusicError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("covariance has no signal subspace (all eigenvalues equal)")]
    Degenerate,
    #[error("snapshot set is empty or has inconsistent lengths")]
    Snapshots,
    #[error("search grid must be non-empty and strictly increasing")]
    Grid,
    #[error("covariance is {got}x{got} but the array has {expected} elements")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    snapshots: Vec<CVector>,
}

impl SnapshotSet {
    pub fn new(snapshots: Vec<CVector>) -> Result<Self, MusicError> {
        let Some(first) = snapshots.first() else {
            return Err(MusicError::Snapshots);
        };
        let n = first.len();
        if snapshots.iter().any(|s| s.len() != n) {
            return Err(MusicError::Snapshots);
        }
        Ok(Self { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[CVector] {
        &self.snapshots
    }

    pub fn element_count(&self) -> usize {
        self.snapshots[0].len()
    }

    /// Same snapshots multiplied by a common phase e^{jγ}.
    pub fn rotated(&self, gamma: f64) -> Self {
        let r = Complex64::from_polar(1.0, gamma);
        Self {
            snapshots: self.snapshots.iter().map(|s| s.scale(r)).collect(),
        }
    }
}

/// y_t = a_N(aoa)·s_t + n_t with unit-modulus random-phase symbols and
/// per-element SNR `snr_db`. `snr_db = +∞` yields noiseless snapshots.
pub fn simulate_snapshots<R: Rng + ?Sized>(
    aoa: &SphericalTarget,
    rx: &ArrayGeometry,
    snr_db: f64,
    count: usize,
    rng: &mut R,
) -> Result<SnapshotSet, MusicError> {
    if count == 0 {
        return Err(MusicError::Snapshots);
    }
    let a = steering_toward(rx, aoa);
    let n = a.len();
    // ‖a‖ = 1, so per-element signal power is 1/N.
    let noise_std = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        (1.0 / (n as f64 * 10f64.powf(snr_db / 10.0))).sqrt()
    };
    let snapshots = (0..count)
        .map(|_| {
            let s = Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>());
            let v: Vec<Complex64> = a
                .iter()
                .map(|ai| {
                    let noise = if noise_std > 0.0 { complex_normal(rng) * noise_std } else { Complex64::new(0.0, 0.0) };
                    ai * s + noise
                })
                .collect();
            CVector::from_vec(v)
        })
        .collect();
    SnapshotSet::new(snapshots)
}

/// (1/T) Σ_t y_t y_tᴴ.
pub fn sample_covariance(s: &SnapshotSet) -> CMatrix {
    let n = s.element_count();
    let mut r = CMatrix::zeros(n, n);
    for y in s.snapshots() {
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += y[i] * y[j].conj();
            }
        }
    }
    r.scale(Complex64::new(1.0 / s.len() as f64, 0.0))
}

/// Search lattice over the front hemisphere.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicGrid {
    thetas: Vec<f64>,
    phis: Vec<f64>,
    phi_wraps: bool,
}

impl MusicGrid {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>, phi_wraps: bool) -> Result<Self, MusicError> {
        let increasing = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&thetas) || !increasing(&phis) {
            return Err(MusicError::Grid);
        }
        Ok(Self { thetas, phis, phi_wraps })
    }

    /// θ over [0, π/2] in `theta_points` samples; φ over (−π, π] in
    /// `phi_points` samples, treated as circular.
    pub fn hemisphere(theta_points: usize, phi_points: usize) -> Result<Self, MusicError> {
        if theta_points < 2 || phi_points < 1 {
            return Err(MusicError::Grid);
        }
        let dt = (PI / 2.0) / (theta_points - 1) as f64;
        let dp = 2.0 * PI / phi_points as f64;
        let thetas = (0..theta_points).map(|i| i as f64 * dt).collect();
        let phis = (0..phi_points).map(|k| -PI + (k + 1) as f64 * dp).collect();
        Self::new(thetas, phis, true)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn theta_step(&self) -> f64 {
        step(&self.thetas)
    }

    pub fn phi_step(&self) -> f64 {
        if self.phi_wraps {
            2.0 * PI / self.phis.len() as f64
        } else {
            step(&self.phis)
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for MusicGrid {
    /// 181 × 181 over the front hemisphere.
    fn default() -> Self {
        Self::hemisphere(181, 181).expect("static grid")
    }
}

fn step(v: &[f64]) -> f64 {
    if v.len() < 2 {
        0.0
    } else {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    }
}

/// MUSIC estimator with the grid steering vectors precomputed.
#[derive(Debug, Clone)]
pub struct MusicEstimator {
    rx: ArrayGeometry,
    grid: MusicGrid,
    steering: Vec<CVector>,
}

impl MusicEstimator {
    pub fn new(rx: ArrayGeometry, grid: MusicGrid) -> Self {
        let mut steering = Vec::with_capacity(grid.len());
        for &t in grid.thetas() {
            for &p in grid.phis() {
                steering.push(upa_steering(&rx, t, p));
            }
        }
        Self { rx, grid, steering }
    }

    pub fn grid(&self) -> &MusicGrid {
        &self.grid
    }

    /// Noise-subspace projector E_n E_nᴴ for a single source.
    fn noise_projector(&self, r: &CMatrix) -> Result<CMatrix, MusicError> {
        let n = self.rx.len();
        if r.rows() != n || r.cols() != n {
            return Err(MusicError::Dimension { got: r.rows(), expected: n });
        }
        let (vals, vecs) = r.hermitian_eig()?;
        let lo = vals[0];
        let hi = vals[n - 1];
        if !(hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE)) {
            return Err(MusicError::Degenerate);
        }
        let mut proj = CMatrix::zeros(n, n);
        for k in 0..n - 1 {
            let e = vecs.column(k);
            proj = proj.add(&e.outer_h(&e))?;
        }
        Ok(proj)
    }

    /// aᴴ E_n E_nᴴ a for every grid cell (row-major θ, φ).
    pub fn denominators(&self, r: &CMatrix) -> Result<Vec<f64>, MusicError> {
        let proj = self.noise_projector(r)?;
        self.steering
            .iter()
            .map(|a| Ok(proj.sandwich(a, a)?.re.max(0.0)))
            .collect()
    }

    /// MUSIC pseudo-spectrum 1 / (aᴴ E_n E_nᴴ a) over the grid.
    pub fn pseudo_spectrum(&self, r: &CMatrix) -> Result<Vec<f64>, MusicError> {
        Ok(self.denominators(r)?.into_iter().map(|d| 1.0 / d).collect())
    }

    /// Direction of the spectral peak; `range_m` of the result is 1.
    pub fn estimate(&self, r: &CMatrix) -> Result<SphericalTarget, MusicError> {
        let d = self.denominators(r)?;
        let np = self.grid.phis.len();
        let nt = self.grid.thetas.len();
        let mut best = 0;
        for (i, &v) in d.iter().enumerate() {
            if v < d[best] {
                best = i;
            }
        }
        let (it, ip) = (best / np, best % np);
        let mut theta = self.grid.thetas[it];
        let mut phi = self.grid.phis[ip];
        let d0 = d[best];
        if d0 > EXACT_NULL {
            if it > 0 && it + 1 < nt {
                theta += parabolic_offset(d[best - np], d0, d[best + np]) * self.grid.theta_step();
            }
            let neighbors = if self.grid.phi_wraps && np >= 3 {
                Some(((ip + np - 1) % np, (ip + 1) % np))
            } else if ip > 0 && ip + 1 < np {
                Some((ip - 1, ip + 1))
            } else {
                None
            };
            if let Some((lo, hi)) = neighbors {
                phi += parabolic_offset(d[it * np + lo], d0, d[it * np + hi]) * self.grid.phi_step();
            }
            theta = theta.clamp(0.0, PI / 2.0);
            phi = wrap_angle(phi);
        }
        Ok(SphericalTarget::new(1.0, theta, phi))
    }
}

/// Vertex offset (in grid steps, clamped to ±½) of the parabola through
/// three equally spaced samples around a minimum.
fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let curvature = left - 2.0 * center + right;
    if curvature <= 0.0 || !curvature.is_finite() {
        return 0.0;
    }
    (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
}

pub fn estimate_aoa(r: &CMatrix, rx: &ArrayGeometry, grid: &MusicGrid) -> Result<SphericalTarget, MusicError> {
    MusicEstimator::new(*rx, grid.clone()).estimate(r)
}
