//! Indoor downlink experiments: a ceiling-mounted BS serves one UE held at
//! phone height, and several beam management schemes are compared on the
//! same channel draws.

mod config;
mod output;

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{AoaConfig, AoaMethod, CodebookConfig, DatasetConfig, Fading, IrsConfig, LatencyConfig, ScenarioConfig};
pub use output::{emit_outputs, irs_csv, latency_csv, manifest_json, rate_map_csv, summary_csv, OutputFile};

use crate::beamforming::{avg_latency, dft_codebook, rsrp_sweep, sweep_overhead_s, BeamError, Codebook};
use crate::channel::{los_channel, steering_toward, ArrayGeometry, ChannelError};
use crate::detector::{builtin_profiles, simulate_detection, DetectorError, DetectorProfile};
use crate::geometry::{cart_to_spherical, wrap_angle, CartesianPoint, GeometryError, SphericalTarget};
use crate::irs::{nmse, reconstruct_irs_channel, IrsError};
use crate::linalg::{CMatrix, CVector};
use crate::music::{sample_covariance, simulate_snapshots, MusicEstimator, MusicError, MusicGrid};
use crate::random::{complex_normal, standard_normal, stream, SimRng};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Music(#[from] MusicError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Irs(#[from] IrsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Continuous beam aimed by the VOMTC-trained detector.
    #[serde(rename = "vbm")]
    Vbm,
    /// Continuous beam aimed by the baseline detector.
    #[serde(rename = "cvbm")]
    Cvbm,
    /// Baseline detection snapped to the nearest oversampled codeword.
    #[serde(rename = "codebook-od")]
    CodebookOd,
    /// Codeword of the lattice cell containing the UE, from the same beam
    /// set the sweep baseline uses.
    #[serde(rename = "codebook-ic")]
    CodebookIc,
    /// Exhaustive RSRP sweep over transmit and receive codebooks.
    #[serde(rename = "5g-bm")]
    FiveGBm,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Vbm,
        Scheme::Cvbm,
        Scheme::CodebookOd,
        Scheme::CodebookIc,
        Scheme::FiveGBm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Vbm => "vbm",
            Scheme::Cvbm => "cvbm",
            Scheme::CodebookOd => "codebook-od",
            Scheme::CodebookIc => "codebook-ic",
            Scheme::FiveGBm => "5g-bm",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Stream namespaces keep the experiments' random draws disjoint.
const NS_RATE_MAP: u64 = 1 << 56;
const NS_DROPS: u64 = 2 << 56;
const NS_IRS: u64 = 3 << 56;

/// Resolves a profile name against the built-ins and any extra profiles;
/// extra profiles win on name clashes.
pub fn resolve_profile(name: &str, extra: &[DetectorProfile]) -> Result<DetectorProfile, ScenarioError> {
    extra
        .iter()
        .chain(builtin_profiles().iter())
        .find(|p| p.name == name)
        .cloned()
        .ok_or_else(|| DetectorError::Unknown(name.to_owned()).into())
}

/// AoD at the BS and AoA at the UE for a UE at (x, y).
///
/// The BS array faces straight down with its x axis along world x, so a
/// world offset (dx, dy, dz) appears as (dx, −dy, −dz) in the BS frame.
/// The UE array faces straight up and sees the BS at (−dx, −dy, −dz).
pub fn link_angles(cfg: &ScenarioConfig, x: f64, y: f64) -> Result<(SphericalTarget, SphericalTarget), ScenarioError> {
    let [bx, by, bz] = cfg.bs_position;
    let (dx, dy, dz) = (x - bx, y - by, cfg.ue_height_m - bz);
    let aod = cart_to_spherical(&CartesianPoint::new(dx, -dy, -dz))?;
    let aoa = cart_to_spherical(&CartesianPoint::new(-dx, -dy, -dz))?;
    Ok((aod, aoa))
}

/// Outcome of one UE placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropOutcome {
    pub x: f64,
    pub y: f64,
    /// Indexed by [`Scheme::index`].
    pub rates: [f64; 5],
    /// Whether the scheme fell back to the sweep result on this drop.
    pub fell_back: [bool; 5],
}

/// Precomputed codebooks, profiles and MUSIC grid for one configuration.
pub struct Simulator {
    cfg: ScenarioConfig,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    vbm: DetectorProfile,
    cvbm: DetectorProfile,
    sweep_tx: Codebook,
    sweep_rx: Codebook,
    od: Codebook,
    ic: Codebook,
    music: Option<MusicEstimator>,
}

fn sweep_lattice(tx: &ArrayGeometry, beams: usize, bits: Option<u32>) -> Result<Codebook, ScenarioError> {
    if tx.ny == 1 || tx.nx == 1 {
        let (px, py) = if tx.ny == 1 { (beams, 1) } else { (1, beams) };
        return Ok(Codebook::lattice(tx, px, py, bits)?);
    }
    let side = ArrayGeometry::square(beams)
        .ok_or_else(|| ScenarioError::Config(format!("beam count {beams} must be a perfect square for planar arrays")))?
        .nx;
    Ok(Codebook::lattice(tx, side, side, bits)?)
}

impl Simulator {
    pub fn new(cfg: &ScenarioConfig, extra_profiles: &[DetectorProfile]) -> Result<Self, ScenarioError> {
        Self::with_tx(cfg, cfg.tx, extra_profiles)
    }

    /// Same configuration with a different transmit array.
    pub fn with_tx(cfg: &ScenarioConfig, tx: ArrayGeometry, extra_profiles: &[DetectorProfile]) -> Result<Self, ScenarioError> {
        cfg.validate()?;
        let cb = &cfg.codebook;
        let bits = cb.bits();
        let music = match cfg.aoa.method {
            AoaMethod::Music => {
                let grid = MusicGrid::hemisphere(cfg.aoa.grid_points, cfg.aoa.grid_points)?;
                Some(MusicEstimator::new(cfg.rx, grid))
            }
            AoaMethod::Oracle => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            tx,
            rx: cfg.rx,
            vbm: resolve_profile(&cfg.vbm_profile, extra_profiles)?,
            cvbm: resolve_profile(&cfg.cvbm_profile, extra_profiles)?,
            sweep_tx: sweep_lattice(&tx, cb.sweep_beams, bits)?,
            sweep_rx: dft_codebook(&cfg.rx, cb.rx_oversampling, bits)?,
            od: dft_codebook(&tx, cb.od_oversampling, bits)?,
            ic: sweep_lattice(&tx, cb.ic_beams, bits)?,
            music,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn tx(&self) -> ArrayGeometry {
        self.tx
    }

    /// Overhead of one full baseline sweep, in seconds.
    pub fn sweep_overhead_s(&self) -> f64 {
        sweep_overhead_s(self.sweep_tx.len(), self.cfg.codebook.beam_slot_s)
    }

    fn channel(&self, aod: &SphericalTarget, aoa: &SphericalTarget, rng: &mut SimRng) -> Result<CMatrix, ScenarioError> {
        let mut alpha = match self.cfg.fading {
            Fading::Rayleigh => complex_normal(rng),
            Fading::None => Complex64::new(1.0, 0.0),
        };
        if self.cfg.array_gain {
            alpha *= ((self.tx.len() * self.rx.len()) as f64).sqrt();
        }
        Ok(los_channel(&self.tx, &self.rx, aod, aoa, &self.cfg.path_loss, alpha)?.h)
    }

    fn rate(&self, h: &CMatrix, f: &CVector, w: &CVector) -> Result<f64, ScenarioError> {
        let lb = &self.cfg.link;
        let g = h.sandwich(w, f).map_err(BeamError::from)?.norm_sqr();
        Ok((1.0 + lb.power_w * g / lb.noise_var).log2())
    }

    /// Places the UE at (x, y) and evaluates every scheme on one channel
    /// draw. Random draws happen in a fixed order: fading, pilots,
    /// VBM detection, baseline detection.
    pub fn evaluate(&self, x: f64, y: f64, rng: &mut SimRng) -> Result<DropOutcome, ScenarioError> {
        let (aod, aoa) = link_angles(&self.cfg, x, y)?;
        let h = self.channel(&aod, &aoa, rng)?;
        let continuous = self.cfg.codebook.continuous;

        let (f5, w5) = if continuous {
            (steering_toward(&self.tx, &aod), steering_toward(&self.rx, &aoa))
        } else {
            let s = rsrp_sweep(&h, &self.sweep_tx, &self.sweep_rx, self.cfg.link.power_w)?;
            (self.sweep_tx.codeword(s.tx_index).clone(), self.sweep_rx.codeword(s.rx_index).clone())
        };
        let r5 = self.rate(&h, &f5, &w5)?;

        let w = match &self.music {
            Some(est) => {
                let snaps = simulate_snapshots(&aoa, &self.rx, self.cfg.aoa.snr_db, self.cfg.aoa.snapshots, rng)?;
                match est.estimate(&sample_covariance(&snaps)) {
                    Ok(a) => steering_toward(&self.rx, &a),
                    Err(MusicError::Degenerate) => w5.clone(),
                    Err(e) => return Err(e.into()),
                }
            }
            None => steering_toward(&self.rx, &aoa),
        };

        let mut rates = [0.0; 5];
        let mut fell_back = [false; 5];
        rates[Scheme::FiveGBm.index()] = r5;

        match simulate_detection(&aod, &self.vbm, rng) {
            Some(e) => rates[Scheme::Vbm.index()] = self.rate(&h, &steering_toward(&self.tx, &e), &w)?,
            None => {
                rates[Scheme::Vbm.index()] = r5;
                fell_back[Scheme::Vbm.index()] = true;
            }
        }
        match simulate_detection(&aod, &self.cvbm, rng) {
            Some(e) => {
                rates[Scheme::Cvbm.index()] = self.rate(&h, &steering_toward(&self.tx, &e), &w)?;
                let f = if continuous {
                    steering_toward(&self.tx, &e)
                } else {
                    self.od.codeword(self.od.nearest_index(&e)).clone()
                };
                rates[Scheme::CodebookOd.index()] = self.rate(&h, &f, &w)?;
            }
            None => {
                for s in [Scheme::Cvbm, Scheme::CodebookOd] {
                    rates[s.index()] = r5;
                    fell_back[s.index()] = true;
                }
            }
        }
        let f_ic = if continuous {
            steering_toward(&self.tx, &aod)
        } else {
            self.ic.codeword(self.ic.nearest_index(&aod)).clone()
        };
        rates[Scheme::CodebookIc.index()] = self.rate(&h, &f_ic, &w)?;

        Ok(DropOutcome { x, y, rates, fell_back })
    }

    /// UE position for random drop `index`, uniform over the service area.
    fn drop_position(&self, rng: &mut SimRng) -> (f64, f64) {
        let half = self.cfg.area_m / 2.0;
        let [bx, by, _] = self.cfg.bs_position;
        (bx + rng.gen_range(-half..half), by + rng.gen_range(-half..half))
    }

    /// `cfg.drops` random placements, evaluated in parallel and returned in
    /// drop order.
    pub fn run_drops(&self) -> Result<Vec<DropOutcome>, ScenarioError> {
        (0..self.cfg.drops as u64)
            .into_par_iter()
            .map(|d| {
                let mut rng = stream(self.cfg.seed, NS_DROPS | d);
                let (x, y) = self.drop_position(&mut rng);
                self.evaluate(x, y, &mut rng)
            })
            .collect()
    }

    /// Cell-center samples of the service area, row by row in y.
    pub fn grid_positions(&self) -> Vec<(f64, f64)> {
        let n = self.cfg.grid_points;
        let a = self.cfg.area_m;
        let [bx, by, _] = self.cfg.bs_position;
        let coord = |i: usize| -a / 2.0 + (i as f64 + 0.5) * a / n as f64;
        (0..n)
            .flat_map(|j| (0..n).map(move |i| (bx + coord(i), by + coord(j))))
            .collect()
    }
}

/// Per-scheme rate at every grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMap {
    pub cells: Vec<DropOutcome>,
    pub schemes: Vec<Scheme>,
}

pub fn run_rate_map(cfg: &ScenarioConfig, extra_profiles: &[DetectorProfile]) -> Result<RateMap, ScenarioError> {
    let sim = Simulator::new(cfg, extra_profiles)?;
    let positions = sim.grid_positions();
    let cells = positions
        .par_iter()
        .enumerate()
        .map(|(k, &(x, y))| {
            let mut rng = stream(cfg.seed, NS_RATE_MAP | k as u64);
            sim.evaluate(x, y, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RateMap { cells, schemes: Scheme::ALL.to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub mean_rate_bps_hz: f64,
    pub fallback_fraction: f64,
    pub drops: usize,
}

/// Mean rate and fallback fraction per scheme, summed in drop order.
pub fn summarize(outcomes: &[DropOutcome]) -> Vec<SchemeSummary> {
    let n = outcomes.len();
    Scheme::ALL
        .iter()
        .map(|&s| {
            let i = s.index();
            let sum: f64 = outcomes.iter().map(|o| o.rates[i]).sum();
            let fb = outcomes.iter().filter(|o| o.fell_back[i]).count();
            SchemeSummary {
                scheme: s,
                mean_rate_bps_hz: if n == 0 { 0.0 } else { sum / n as f64 },
                fallback_fraction: if n == 0 { 0.0 } else { fb as f64 / n as f64 },
                drops: n,
            }
        })
        .collect()
}

pub fn run_survey(cfg: &ScenarioConfig, extra_profiles: &[DetectorProfile]) -> Result<Vec<SchemeSummary>, ScenarioError> {
    Ok(summarize(&Simulator::new(cfg, extra_profiles)?.run_drops()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyRow {
    pub antennas: usize,
    pub scheme: Scheme,
    pub mean_rate_bps_hz: f64,
    pub overhead_s: f64,
    pub latency_s: f64,
}

/// Latency of each scheme from its mean rate. The sweep baseline always
/// pays the full sweep; detector-driven schemes pay it on the fraction of
/// drops where they fell back to it.
pub fn latency_rows(antennas: usize, summary: &[SchemeSummary], lb: &crate::beamforming::LinkBudget, sweep_s: f64) -> Result<Vec<LatencyRow>, ScenarioError> {
    summary
        .iter()
        .map(|s| {
            let overhead = match s.scheme {
                Scheme::FiveGBm => sweep_s,
                Scheme::CodebookIc => 0.0,
                _ => s.fallback_fraction * sweep_s,
            };
            Ok(LatencyRow {
                antennas,
                scheme: s.scheme,
                mean_rate_bps_hz: s.mean_rate_bps_hz,
                overhead_s: overhead,
                latency_s: avg_latency(s.mean_rate_bps_hz, lb, overhead)?,
            })
        })
        .collect()
}

/// Square transmit arrays of each size in `antenna_counts`, evaluated on
/// the same UE drops.
pub fn run_latency_sweep(cfg: &ScenarioConfig, antenna_counts: &[usize], extra_profiles: &[DetectorProfile]) -> Result<Vec<LatencyRow>, ScenarioError> {
    let mut rows = Vec::new();
    for &m in antenna_counts {
        let tx = ArrayGeometry::square(m)
            .ok_or_else(|| ScenarioError::Config(format!("antenna count {m} is not a perfect square")))?;
        let sim = Simulator::with_tx(cfg, tx, extra_profiles)?;
        let summary = summarize(&sim.run_drops()?);
        rows.extend(latency_rows(m, &summary, &cfg.link, sim.sweep_overhead_s())?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IrsScheme {
    #[serde(rename = "location-aided")]
    LocationAided,
    #[serde(rename = "oracle-ls")]
    OracleLs,
}

impl IrsScheme {
    pub fn name(self) -> &'static str {
        match self {
            IrsScheme::LocationAided => "location-aided",
            IrsScheme::OracleLs => "oracle-ls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrsRow {
    pub elements: usize,
    pub scheme: IrsScheme,
    pub mean_nmse: f64,
}

/// Per-trial NMSE pairs (location-aided, oracle) for an `elements`-sized
/// near-square IRS.
pub fn irs_trials(cfg: &ScenarioConfig, elements: usize, profile: &DetectorProfile) -> Result<Vec<(f64, f64)>, ScenarioError> {
    let g = ArrayGeometry::factor(elements)?;
    let s_az = DetectorProfile::sigma_for(profile.mean_abs_angle_err_az) * cfg.irs.error_scale;
    let s_el = DetectorProfile::sigma_for(profile.mean_abs_angle_err_el) * cfg.irs.error_scale;
    let beta = cfg.irs.beta_db;
    (0..cfg.irs.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(cfg.seed, NS_IRS | ((elements as u64) << 24) | t);
            let theta = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            let phi = wrap_angle(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            let truth = SphericalTarget::new(1.0, theta, phi);
            let h = reconstruct_irs_channel(&truth, &g, beta);
            let est = SphericalTarget::new(
                1.0,
                theta + s_az * standard_normal(&mut rng),
                phi + s_el * standard_normal(&mut rng),
            );
            let located = nmse(&h, &reconstruct_irs_channel(&est, &g, beta))?;
            let oracle = nmse(&h, &reconstruct_irs_channel(&truth, &g, beta))?;
            Ok((located, oracle))
        })
        .collect()
}

pub fn run_irs_nmse(cfg: &ScenarioConfig, element_counts: &[usize], extra_profiles: &[DetectorProfile]) -> Result<Vec<IrsRow>, ScenarioError> {
    cfg.validate()?;
    let profile = resolve_profile(&cfg.irs.profile, extra_profiles)?;
    let mut rows = Vec::new();
    for &n in element_counts {
        let trials = irs_trials(cfg, n, &profile)?;
        let k = trials.len() as f64;
        let located = trials.iter().map(|t| t.0).sum::<f64>() / k;
        let oracle = trials.iter().map(|t| t.1).sum::<f64>() / k;
        rows.push(IrsRow { elements: n, scheme: IrsScheme::LocationAided, mean_nmse: located });
        rows.push(IrsRow { elements: n, scheme: IrsScheme::OracleLs, mean_nmse: oracle });
    }
    Ok(rows)
}
