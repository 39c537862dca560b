use serde::{Deserialize, Serialize};

use crate::beamforming::{LinkBudget, DEFAULT_BEAM_SLOT_S, DEFAULT_SWEEP_BEAMS};
use crate::channel::{ArrayGeometry, PathLossModel, PathLossParams};
use crate::dataset::SelectMode;

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fading {
    /// α ~ CN(0, 1) per drop.
    #[default]
    Rayleigh,
    /// α = 1.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AoaMethod {
    /// Combiner steered at the MUSIC estimate from simulated pilots.
    #[default]
    Music,
    /// Combiner steered at the true AoA.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    /// Oversampling of the codebook the detected direction is snapped to.
    pub od_oversampling: usize,
    /// Beams whose coverage cells the region classifier chooses among;
    /// a perfect square for planar arrays.
    pub ic_beams: usize,
    /// Receive codebook oversampling for the sweep baseline.
    pub rx_oversampling: usize,
    /// Phase-shifter resolution; 0 means ideal phases.
    pub phase_bits: u32,
    /// Transmit beams swept by the baseline; a perfect square for planar arrays.
    pub sweep_beams: usize,
    pub beam_slot_s: f64,
    /// Replace every codebook by the exact beam toward its target, the
    /// limit of infinite resolution.
    pub continuous: bool,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            od_oversampling: 4,
            ic_beams: DEFAULT_SWEEP_BEAMS,
            rx_oversampling: 1,
            phase_bits: 8,
            sweep_beams: DEFAULT_SWEEP_BEAMS,
            beam_slot_s: DEFAULT_BEAM_SLOT_S,
            continuous: false,
        }
    }
}

impl CodebookConfig {
    pub fn bits(&self) -> Option<u32> {
        (self.phase_bits > 0).then_some(self.phase_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoaConfig {
    pub method: AoaMethod,
    pub snr_db: f64,
    pub snapshots: usize,
    /// Samples per axis of the MUSIC search grid.
    pub grid_points: usize,
}

impl Default for AoaConfig {
    fn default() -> Self {
        Self {
            method: AoaMethod::Music,
            snr_db: 20.0,
            snapshots: 200,
            grid_points: 181,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    pub antenna_counts: Vec<usize>,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self { antenna_counts: vec![36, 64, 121, 196] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrsConfig {
    pub element_counts: Vec<usize>,
    pub trials: usize,
    /// Detector profile whose angle errors drive the location-aided estimate.
    pub profile: String,
    pub beta_db: f64,
    /// Multiplier on the profile's angle errors.
    pub error_scale: f64,
}

impl Default for IrsConfig {
    fn default() -> Self {
        Self {
            element_counts: vec![16, 36, 64, 100, 144],
            trials: 500,
            profile: "vomtc-v2".to_owned(),
            beta_db: 0.0,
            error_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Corpus root holding `label/` and `image/distance/`.
    pub input: String,
    /// 0 = person, 1 = cell phone, 2 = laptop.
    pub active_classes: Vec<usize>,
    /// Negative means unlimited.
    pub max_people: i64,
    /// Non-finite or absent means unlimited.
    pub max_dist_m: f64,
    pub mode: SelectMode,
    pub crop_size: [f64; 2],
    /// Records written by `dataset synth`.
    pub synth_records: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            input: "corpus".to_owned(),
            active_classes: vec![0, 1],
            max_people: 6,
            max_dist_m: 30.0,
            mode: SelectMode::MustContain,
            crop_size: [512.0, 512.0],
            synth_records: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Side of the square service area, centered under the BS.
    pub area_m: f64,
    /// (x, y, height) of the ceiling-mounted, downward-facing BS.
    pub bs_position: [f64; 3],
    pub ue_height_m: f64,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub link: LinkBudget,
    pub path_loss: PathLossParams,
    /// Scale the channel by √(M·N).
    pub array_gain: bool,
    pub fading: Fading,
    pub vbm_profile: String,
    pub cvbm_profile: String,
    /// Extra `[[profile]]` definitions, resolved relative to the config file.
    pub profile_file: Option<String>,
    /// Rate-map samples per axis.
    pub grid_points: usize,
    /// Random UE drops for summary statistics and latency.
    pub drops: usize,
    pub seed: u64,
    pub codebook: CodebookConfig,
    pub aoa: AoaConfig,
    pub latency: LatencyConfig,
    pub irs: IrsConfig,
    pub dataset: DatasetConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_m: 20.0,
            bs_position: [0.0, 0.0, 3.0],
            ue_height_m: 1.65,
            tx: ArrayGeometry { nx: 8, ny: 8 },
            rx: ArrayGeometry { nx: 2, ny: 2 },
            link: LinkBudget::default(),
            path_loss: PathLossParams {
                carrier_freq_ghz: 100.0,
                model: PathLossModel::Normalized,
            },
            array_gain: false,
            fading: Fading::Rayleigh,
            vbm_profile: "vomtc-test".to_owned(),
            cvbm_profile: "efficientdet-d8-test".to_owned(),
            profile_file: None,
            grid_points: 21,
            drops: 1000,
            seed: 1,
            codebook: CodebookConfig::default(),
            aoa: AoaConfig::default(),
            latency: LatencyConfig::default(),
            irs: IrsConfig::default(),
            dataset: DatasetConfig::default(),
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::Config(msg.to_owned()))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite_pos = |x: f64| x > 0.0 && x.is_finite();
        check(finite_pos(self.area_m), "area_m must be positive")?;
        check(self.bs_position.iter().all(|v| v.is_finite()), "bs_position must be finite")?;
        check(self.ue_height_m.is_finite(), "ue_height_m must be finite")?;
        check(
            self.bs_position[2] > self.ue_height_m,
            "the BS must be mounted above the UE height",
        )?;
        check(self.tx.nx > 0 && self.tx.ny > 0, "tx array needs elements")?;
        check(self.rx.nx > 0 && self.rx.ny > 0, "rx array needs elements")?;
        self.link.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        check(finite_pos(self.path_loss.carrier_freq_ghz), "carrier frequency must be positive")?;
        check(self.grid_points >= 2, "grid_points must be at least 2")?;
        check(self.drops >= 1, "drops must be at least 1")?;
        let cb = &self.codebook;
        check(cb.od_oversampling >= 1 && cb.rx_oversampling >= 1, "oversampling must be at least 1")?;
        check(cb.sweep_beams >= 1 && cb.ic_beams >= 1, "sweep_beams and ic_beams must be at least 1")?;
        check(cb.beam_slot_s >= 0.0 && cb.beam_slot_s.is_finite(), "beam_slot_s must be non-negative")?;
        check(self.aoa.snapshots >= 1, "aoa.snapshots must be at least 1")?;
        check(self.aoa.grid_points >= 2, "aoa.grid_points must be at least 2")?;
        check(!self.aoa.snr_db.is_nan(), "aoa.snr_db must be a number")?;
        check(
            self.latency.antenna_counts.iter().all(|&m| ArrayGeometry::square(m).is_some()),
            "latency.antenna_counts must be perfect squares",
        )?;
        check(self.irs.element_counts.iter().all(|&n| n > 0), "irs.element_counts must be positive")?;
        check(self.irs.trials >= 1, "irs.trials must be at least 1")?;
        check(self.irs.error_scale >= 0.0 && self.irs.error_scale.is_finite(), "irs.error_scale must be non-negative")?;
        check(!self.dataset.active_classes.is_empty(), "dataset.active_classes must not be empty")?;
        check(self.dataset.active_classes.iter().all(|&c| c <= 2), "dataset.active_classes entries are 0, 1 or 2")?;
        check(self.dataset.max_dist_m > 0.0, "dataset.max_dist_m must be positive")?;
        check(self.dataset.crop_size.iter().all(|&v| finite_pos(v)), "dataset.crop_size must be positive")?;
        Ok(())
    }
}
