//! Continuous (vision-aimed) beams, DFT codebooks with RSRP sweeping, and
//! the rate and latency metrics used to compare them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{spatial_frequencies, steering_toward, upa_steering_psi, ArrayGeometry};
use crate::geometry::SphericalTarget;
use crate::linalg::{CMatrix, CVector, LinalgError};

/// Per-beam CSI-RS slot: 30 ms for 4 beams.
pub const DEFAULT_BEAM_SLOT_S: f64 = 0.030 / 4.0;
/// Beams swept by the 5G NR baseline.
pub const DEFAULT_SWEEP_BEAMS: usize = 36;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("codebook parameter out of range: {0}")]
    Codebook(&'static str),
    #[error("empty codebook")]
    EmptyCodebook,
    #[error("link budget entry {0} must be positive")]
    LinkBudget(&'static str),
    #[error("rate {0} bps/Hz is an outage; latency undefined")]
    Outage(f64),
    #[error("sum rate needs at least one user")]
    NoUsers,
}

/// Unit-norm analog precoder `f` (BS, length M) and combiner `w` (UE, length N).
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub f: CVector,
    pub w: CVector,
}

impl Beamformer {
    /// Normalizes both vectors to unit 2-norm.
    pub fn new(f: CVector, w: CVector) -> Self {
        Self {
            f: f.normalized(),
            w: w.normalized(),
        }
    }
}

/// Continuous beams steered at the estimated AoD and AoA.
pub fn vbm_beamformer(
    aod_est: &SphericalTarget,
    aoa_est: &SphericalTarget,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Beamformer {
    Beamformer::new(steering_toward(tx, aod_est), steering_toward(rx, aoa_est))
}

/// Rounds every entry's phase to the nearest multiple of 2π/2^bits and
/// renormalizes to unit norm. `None` leaves the vector unquantized.
pub fn quantize_phases(v: &CVector, bits: Option<u32>) -> CVector {
    let Some(bits) = bits else {
        return v.normalized();
    };
    let step = 2.0 * PI / f64::from(1u32 << bits.min(30));
    let amp = 1.0 / (v.len() as f64).sqrt();
    CVector::from_vec(
        v.iter()
            .map(|z| Complex64::from_polar(amp, (z.arg() / step).round() * step))
            .collect(),
    )
}

/// Phase-quantized planar beams on a regular spatial-frequency lattice.
///
/// Lattice points are ψ = 2k/P − 1 for k in 0..P on each axis; codeword
/// index is `kx * points_y + ky`, matching the x-major Kronecker ordering of
/// the steering vectors.
#[derive(Debug, Clone)]
pub struct Codebook {
    geometry: ArrayGeometry,
    codewords: Vec<CVector>,
    grid: Vec<(f64, f64)>,
    points: (usize, usize),
    oversampling: usize,
    phase_bits: Option<u32>,
}

impl Codebook {
    pub fn lattice(
        geometry: &ArrayGeometry,
        points_x: usize,
        points_y: usize,
        phase_bits: Option<u32>,
    ) -> Result<Self, BeamError> {
        if points_x == 0 || points_y == 0 {
            return Err(BeamError::Codebook("lattice needs at least one point per axis"));
        }
        if phase_bits == Some(0) {
            return Err(BeamError::Codebook("phase quantization needs at least one bit"));
        }
        let mut codewords = Vec::with_capacity(points_x * points_y);
        let mut grid = Vec::with_capacity(points_x * points_y);
        for kx in 0..points_x {
            let px = lattice_point(kx, points_x);
            for ky in 0..points_y {
                let py = lattice_point(ky, points_y);
                codewords.push(quantize_phases(&upa_steering_psi(geometry, px, py), phase_bits));
                grid.push((px, py));
            }
        }
        Ok(Self {
            geometry: *geometry,
            codewords,
            grid,
            points: (points_x, points_y),
            oversampling: 1,
            phase_bits,
        })
    }

    /// A codebook holding a single beam.
    pub fn single(beam: CVector) -> Self {
        let len = beam.len();
        Self {
            geometry: ArrayGeometry::ula(len),
            codewords: vec![beam.normalized()],
            grid: vec![(0.0, 0.0)],
            points: (1, 1),
            oversampling: 1,
            phase_bits: None,
        }
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[CVector] {
        &self.codewords
    }

    pub fn codeword(&self, i: usize) -> &CVector {
        &self.codewords[i]
    }

    pub fn grid(&self) -> &[(f64, f64)] {
        &self.grid
    }

    pub fn points(&self) -> (usize, usize) {
        self.points
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn phase_bits(&self) -> Option<u32> {
        self.phase_bits
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    /// Index of the lattice beam whose cell contains (ψx, ψy), using the
    /// 2-periodicity of spatial frequency.
    pub fn nearest_index_psi(&self, psi_x: f64, psi_y: f64) -> usize {
        let (px, py) = self.points;
        nearest_lattice(psi_x, px) * py + nearest_lattice(psi_y, py)
    }

    pub fn nearest_index(&self, target: &SphericalTarget) -> usize {
        let (sx, sy) = spatial_frequencies(target.azimuth_rad, target.elevation_rad);
        self.nearest_index_psi(sx, sy)
    }
}

fn lattice_point(k: usize, points: usize) -> f64 {
    2.0 * k as f64 / points as f64 - 1.0
}

fn nearest_lattice(psi: f64, points: usize) -> usize {
    let pos = (psi + 1.0) * points as f64 / 2.0;
    (pos.round() as i64).rem_euclid(points as i64) as usize
}

/// Oversampled DFT codebook: (nx·O) × (ny·O) lattice beams with
/// `phase_bits`-bit phase shifters (`None` for ideal phases).
pub fn dft_codebook(g: &ArrayGeometry, oversampling: usize, phase_bits: Option<u32>) -> Result<Codebook, BeamError> {
    if oversampling == 0 {
        return Err(BeamError::Codebook("oversampling must be at least 1"));
    }
    // A single-element axis carries no phase, so it gets one lattice point.
    let points = |n: usize| if n == 1 { 1 } else { n * oversampling };
    let mut cb = Codebook::lattice(g, points(g.nx), points(g.ny), phase_bits)?;
    cb.oversampling = oversampling;
    Ok(cb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub tx_index: usize,
    pub rx_index: usize,
    pub rsrp_w: f64,
}

/// Exhaustive RSRP search over all (precoder, combiner) pairs.
/// Ties resolve to the lexicographically lowest (tx, rx) index pair.
pub fn rsrp_sweep(h: &CMatrix, cb_tx: &Codebook, cb_rx: &Codebook, power_w: f64) -> Result<SweepResult, BeamError> {
    if cb_tx.is_empty() || cb_rx.is_empty() {
        return Err(BeamError::EmptyCodebook);
    }
    let mut best = SweepResult {
        tx_index: 0,
        rx_index: 0,
        rsrp_w: f64::NEG_INFINITY,
    };
    for (i, f) in cb_tx.codewords().iter().enumerate() {
        let hf = h.matvec(f)?;
        for (j, w) in cb_rx.codewords().iter().enumerate() {
            let rsrp = power_w * w.dot_h(&hf)?.norm_sqr();
            if rsrp > best.rsrp_w {
                best = SweepResult {
                    tx_index: i,
                    rx_index: j,
                    rsrp_w: rsrp,
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub power_w: f64,
    pub noise_var: f64,
    pub bandwidth_hz: f64,
    pub packet_bits: f64,
}

impl LinkBudget {
    pub fn new(power_w: f64, noise_var: f64, bandwidth_hz: f64, packet_bits: f64) -> Result<Self, BeamError> {
        let lb = Self {
            power_w,
            noise_var,
            bandwidth_hz,
            packet_bits,
        };
        lb.validate()?;
        Ok(lb)
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.power_w) {
            return Err(BeamError::LinkBudget("power_w"));
        }
        if !positive(self.noise_var) {
            return Err(BeamError::LinkBudget("noise_var"));
        }
        if !positive(self.bandwidth_hz) {
            return Err(BeamError::LinkBudget("bandwidth_hz"));
        }
        if !(self.packet_bits >= 0.0 && self.packet_bits.is_finite()) {
            return Err(BeamError::LinkBudget("packet_bits"));
        }
        Ok(())
    }
}

impl Default for LinkBudget {
    /// P = 2 W, σ² = 0.1, W = 100 MHz, 1 Gbit packets.
    fn default() -> Self {
        Self {
            power_w: 2.0,
            noise_var: 0.1,
            bandwidth_hz: 100e6,
            packet_bits: 1e9,
        }
    }
}

/// log2(1 + P|wᴴHf|² / (Σ_j P|wᴴHf_j|² + σ²)).
pub fn achievable_rate(h: &CMatrix, bf: &Beamformer, lb: &LinkBudget, interferers: &[CVector]) -> Result<f64, BeamError> {
    let signal = lb.power_w * h.sandwich(&bf.w, &bf.f)?.norm_sqr();
    let mut interference = 0.0;
    for fj in interferers {
        interference += lb.power_w * h.sandwich(&bf.w, fj)?.norm_sqr();
    }
    Ok((1.0 + signal / (interference + lb.noise_var)).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceModel {
    /// Every user is decoded as if alone.
    #[default]
    Free,
    /// Other users' precoders leak through each user's channel.
    Aware,
}

pub fn sum_rate(users: &[(CMatrix, Beamformer)], lb: &LinkBudget, model: InterferenceModel) -> Result<f64, BeamError> {
    if users.is_empty() {
        return Err(BeamError::NoUsers);
    }
    let mut total = 0.0;
    for (k, (h, bf)) in users.iter().enumerate() {
        let interferers: Vec<CVector> = match model {
            InterferenceModel::Free => Vec::new(),
            InterferenceModel::Aware => users
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, (_, other))| other.f.clone())
                .collect(),
        };
        total += achievable_rate(h, bf, lb, &interferers)?;
    }
    Ok(total)
}

/// D = F / (W·R) plus any beam-sweep overhead.
pub fn avg_latency(rate_bps_hz: f64, lb: &LinkBudget, sweep_overhead_s: f64) -> Result<f64, BeamError> {
    if !(rate_bps_hz > 0.0) {
        return Err(BeamError::Outage(rate_bps_hz));
    }
    Ok(lb.packet_bits / (lb.bandwidth_hz * rate_bps_hz) + sweep_overhead_s)
}

pub fn sweep_overhead_s(beams: usize, slot_s: f64) -> f64 {
    beams as f64 * slot_s
}

/// Fractional beamforming-gain loss 1 − |a(true)ᴴ f_best|² when the codebook
/// beam is chosen by RSRP against a unit rank-1 channel toward `true_dir`.
pub fn quantization_gain_loss(g: &ArrayGeometry, cb: &Codebook, true_dir: &SphericalTarget) -> Result<f64, BeamError> {
    let a = steering_toward(g, true_dir);
    let h = CMatrix::new(1, a.len(), a.conj().into_inner())?;
    let rx = Codebook::single(CVector::from_vec(vec![Complex64::new(1.0, 0.0)]));
    let best = rsrp_sweep(&h, cb, &rx, 1.0)?;
    let gain = a.dot_h(cb.codeword(best.tx_index))?.norm_sqr();
    Ok((1.0 - gain).clamp(0.0, 1.0))
}
