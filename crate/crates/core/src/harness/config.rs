//! Scenario configuration: TOML schema, presets and validation.
//!
//! Every key carries its unit in the name. Sections other than `seeds` and
//! `sources` default to the standard n3-band setup, so a minimal file is a
//! seed table plus a source list.

use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canceller::CancellerConfig;
use crate::consts::{db_to_linear, linear_to_db, TEST_SAMPLES, TRAIN_SAMPLES};
use crate::em::{ArrayLayout, DipoleElement, GridSpec, Point3, Rotation};
use crate::error::{PimError, Result};
use crate::pim::{ChannelMode, GmpModel, PimScenario, PimSource};
use crate::rng;
use crate::waveform::{CarrierPlan, Modulation, OfdmConfig, PrecoderConfig};

pub const ARRAY_PRESETS: &[&str] = &["paper-16T16R", "2T2R"];
pub const SCENARIO_PRESETS: &[&str] = &["paper-scenario-1", "paper-scenario-2", "desk-scenario-1", "desk-scenario-2"];

/// Record lengths of the desk presets, RF samples. Both put the carrier and
/// RX offsets on the DFT grid.
pub const DESK_TRAIN: usize = 32_768;
pub const DESK_TEST: usize = 16_384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Name of the preset this config was built from, if any. Presets named
    /// `paper-*` have their published numbers checked at load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seeds: Seeds,
    #[serde(default)]
    pub array: ArraySpec,
    #[serde(default = "CarrierPlan::paper")]
    pub carriers: CarrierPlan,
    #[serde(default)]
    pub ofdm: OfdmSpec,
    #[serde(default)]
    pub precoder: PrecoderConfig,
    #[serde(default)]
    pub channel_mode: ChannelMode,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub record: RecordSpec,
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub canceller: CancellerConfig,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// All seeds are mandatory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Waveforms, noise and random source orientations.
    pub scenario: u64,
    /// Canceller initialization and block order.
    pub canceller: u64,
}

/// Exactly one of `preset`, `grid` or `elements`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<ElementSpec>>,
    /// Required with `elements`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_chains: Option<usize>,
    #[serde(default = "default_chain_power_dbm")]
    pub chain_power_dbm: f64,
    #[serde(default = "default_impedance_ohm")]
    pub impedance_ohm: f64,
}

fn default_chain_power_dbm() -> f64 {
    crate::consts::CHAIN_POWER_DBM
}

fn default_impedance_ohm() -> f64 {
    crate::consts::ANTENNA_IMPEDANCE
}

impl Default for ArraySpec {
    fn default() -> Self {
        Self::preset("paper-16T16R")
    }
}

impl ArraySpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            grid: None,
            elements: None,
            n_chains: None,
            chain_power_dbm: default_chain_power_dbm(),
            impedance_ohm: default_impedance_ohm(),
        }
    }

    pub fn build(&self) -> Result<ArrayLayout> {
        let chosen = [self.preset.is_some(), self.grid.is_some(), self.elements.is_some()];
        if chosen.iter().filter(|&&c| c).count() != 1 {
            return Err(PimError::config("array", "set exactly one of preset, grid or elements"));
        }
        let with_power = |mut g: GridSpec| {
            g.chain_power_dbm = self.chain_power_dbm;
            g.impedance_ohm = self.impedance_ohm;
            g
        };
        if let Some(name) = &self.preset {
            let spec = match name.as_str() {
                "paper-16T16R" => GridSpec::paper_16t16r(),
                "2T2R" => GridSpec::two_chain(),
                other => {
                    return Err(PimError::config(
                        "array.preset",
                        format!("unknown preset `{other}` (known: {})", ARRAY_PRESETS.join(", ")),
                    ))
                }
            };
            return ArrayLayout::dual_polarized_grid(&with_power(spec)).map_err(|e| field_err("array", e));
        }
        if let Some(g) = &self.grid {
            return ArrayLayout::dual_polarized_grid(&with_power(g.clone())).map_err(|e| field_err("array.grid", e));
        }
        let specs = self.elements.as_ref().expect("checked above");
        let n_chains = self
            .n_chains
            .ok_or_else(|| PimError::config("array.n_chains", "required with explicit elements"))?;
        let mut elements = Vec::with_capacity(specs.len());
        for (i, e) in specs.iter().enumerate() {
            let rotation = Rotation::z_to(Point3::from_array(e.axis))
                .map_err(|err| PimError::config(format!("array.elements[{i}].axis"), err.to_string()))?;
            elements.push(DipoleElement {
                position: Point3::from_array(e.position_m),
                rotation,
                length: e.length_m,
                amplitude_scale: e.amplitude_scale,
                phase_shift: e.phase_shift_rad,
                chain_id: e.chain_id,
                grid_pos: None,
            });
        }
        ArrayLayout::new(
            elements,
            n_chains,
            self.impedance_ohm,
            crate::consts::dbm_to_watts(self.chain_power_dbm),
        )
        .map_err(|e| field_err("array.elements", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub position_m: [f64; 3],
    /// Dipole axis direction; need not be normalized.
    pub axis: [f64; 3],
    pub length_m: f64,
    pub chain_id: usize,
    #[serde(default = "one")]
    pub amplitude_scale: f64,
    #[serde(default)]
    pub phase_shift_rad: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmSpec {
    pub fft_len: usize,
    pub used_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub modulation: Modulation,
}

impl Default for OfdmSpec {
    fn default() -> Self {
        let c = OfdmConfig::five_mhz(1);
        Self {
            fft_len: c.fft_len,
            used_subcarriers: c.used_subcarriers,
            subcarrier_spacing_hz: c.subcarrier_spacing_hz,
            modulation: c.modulation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// RX-band noise power, dB on the processing scale.
    pub power_db: f64,
    /// Mean summed PIM power over the noise floor, dB.
    pub pim_over_noise_db: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            power_db: 0.0,
            pim_over_noise_db: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecordSpec {
    /// RF-rate samples.
    pub train_len: usize,
    pub test_len: usize,
}

impl Default for RecordSpec {
    fn default() -> Self {
        Self {
            train_len: TRAIN_SAMPLES,
            test_len: TEST_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrientationSpec {
    Vector([f64; 3]),
    /// `"random"`: uniform on the sphere, drawn from the scenario seed.
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub position_m: [f64; 3],
    pub orientation: OrientationSpec,
    #[serde(default)]
    pub relative_level_db: f64,
    #[serde(default = "GmpModel::cubic")]
    pub gmp: GmpModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub distances_m: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            distances_m: vec![0.1, 0.25, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Default output directory; the CLI flag and environment variable override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub psd_nfft: usize,
    /// Also write RX and residual waveforms as dump files.
    pub dump_signals: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            psd_nfft: 1024,
            dump_signals: false,
        }
    }
}

fn field_err(field: &str, e: PimError) -> PimError {
    match e {
        PimError::Config { .. } => e,
        other => PimError::config(field, other.to_string()),
    }
}

fn source(position: [f64; 3]) -> SourceSpec {
    SourceSpec {
        position_m: position,
        orientation: OrientationSpec::Keyword("random".into()),
        relative_level_db: 0.0,
        gmp: GmpModel::cubic(),
    }
}

pub const SCENARIO_1_SOURCES: [[f64; 3]; 1] = [[0.0, 0.0, 2.5]];
pub const SCENARIO_2_SOURCES: [[f64; 3]; 3] = [[-1.0, -0.5, 3.0], [0.0, 0.0, 3.0], [1.0, 0.5, 3.0]];

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (array, sources, record): (&str, &[[f64; 3]], RecordSpec) = match name {
            "paper-scenario-1" => ("paper-16T16R", &SCENARIO_1_SOURCES, RecordSpec::default()),
            "paper-scenario-2" => ("paper-16T16R", &SCENARIO_2_SOURCES, RecordSpec::default()),
            "desk-scenario-1" => ("2T2R", &SCENARIO_1_SOURCES, desk_record()),
            "desk-scenario-2" => ("2T2R", &SCENARIO_2_SOURCES, desk_record()),
            other => {
                return Err(PimError::config(
                    "preset",
                    format!("unknown preset `{other}` (known: {})", SCENARIO_PRESETS.join(", ")),
                ))
            }
        };
        let canceller = CancellerConfig {
            n_sources: sources.len(),
            ..CancellerConfig::default()
        };
        Ok(Self {
            preset: Some(name.to_string()),
            seeds: Seeds {
                scenario: 1,
                canceller: 7,
            },
            array: ArraySpec::preset(array),
            carriers: CarrierPlan::paper(),
            ofdm: OfdmSpec::default(),
            precoder: PrecoderConfig::Identity,
            channel_mode: ChannelMode::default(),
            noise: NoiseSpec::default(),
            record,
            sources: sources.iter().map(|&p| source(p)).collect(),
            canceller,
            sweep: SweepSpec::default(),
            output: OutputSpec::default(),
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        // toml's message carries the line and column of the offending key.
        let cfg: Self = toml::from_str(text).map_err(|e| PimError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| PimError::Parse(e.to_string()))
    }

    /// Sets both seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = Seeds {
            scenario: seed,
            canceller: seed,
        };
        self
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(name) = &self.preset {
            if !SCENARIO_PRESETS.contains(&name.as_str()) {
                return Err(PimError::config("preset", format!("unknown preset `{name}`")));
            }
        }
        if self.sources.is_empty() {
            return Err(PimError::config("sources", "need at least one source"));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if let OrientationSpec::Vector(p) = &s.orientation {
                let n = Point3::from_array(*p).norm();
                if !((n - 1.0).abs() <= 1e-9) {
                    return Err(PimError::config(
                        format!("sources[{i}].orientation"),
                        format!("must be a unit vector, |p| = {n}"),
                    ));
                }
            } else if let OrientationSpec::Keyword(k) = &s.orientation {
                if k != "random" {
                    return Err(PimError::config(
                        format!("sources[{i}].orientation"),
                        format!("expected a unit vector or \"random\", got \"{k}\""),
                    ));
                }
            }
        }
        if self.output.psd_nfft < 16 || !self.output.psd_nfft.is_power_of_two() {
            return Err(PimError::config("output.psd_nfft", "must be a power of two, at least 16"));
        }
        if self.sweep.distances_m.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(PimError::config("sweep.distances_m", "distances must be positive"));
        }
        self.canceller.validate()?;
        self.check_locked_preset()?;
        self.scenario()?.validate()
    }

    /// Presets named `paper-*` must carry the published setup unchanged.
    fn check_locked_preset(&self) -> Result<()> {
        let Some(name) = self.preset.as_deref() else {
            return Ok(());
        };
        if !name.starts_with("paper-") {
            return Ok(());
        }
        let expect = |ok: bool, field: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(PimError::config(field, format!("preset `{name}` requires {what}")))
            }
        };
        let plan = CarrierPlan::paper();
        expect(self.carriers == plan, "carriers", "the standard carrier plan")?;
        expect(
            (plan.cc_offsets_hz[0] + 23.75e6).abs() < 1e-3
                && (plan.cc_offsets_hz[1] - 23.75e6).abs() < 1e-3
                && (plan.rx_offset_hz + 71.25e6).abs() < 1e-3
                && plan.rf_rate() == 122.88e6,
            "carriers",
            "1819 / 1866.5 MHz carriers with RX at 1771.5 MHz",
        )?;
        expect(
            self.record.train_len == TRAIN_SAMPLES && self.record.test_len == TEST_SAMPLES,
            "record",
            "131072 training and 65536 test samples",
        )?;
        expect(self.array.preset.as_deref() == Some("paper-16T16R"), "array.preset", "paper-16T16R")?;
        let want: &[[f64; 3]] = if name == "paper-scenario-1" {
            &SCENARIO_1_SOURCES
        } else {
            &SCENARIO_2_SOURCES
        };
        expect(
            self.sources.len() == want.len() && self.sources.iter().zip(want).all(|(s, w)| s.position_m == *w),
            "sources",
            "the published source coordinates",
        )
    }

    pub fn noise_power(&self) -> f64 {
        db_to_linear(self.noise.power_db)
    }

    pub fn noise_db(&self) -> f64 {
        linear_to_db(self.noise_power())
    }

    /// Resolves presets and random orientations into a runnable scenario.
    pub fn scenario(&self) -> Result<PimScenario> {
        let layout = self.array.build()?;
        let sources = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let orientation = match &s.orientation {
                    OrientationSpec::Vector(p) => Point3::from_array(*p),
                    OrientationSpec::Keyword(_) => random_orientation(self.seeds.scenario, i as u64),
                };
                let mut src = PimSource::new(Point3::from_array(s.position_m), orientation, s.gmp.clone());
                src.relative_level_db = s.relative_level_db;
                src.validate().map_err(|e| match e {
                    PimError::Config { field, reason } => {
                        PimError::config(field.replace("source.", &format!("sources[{i}].")), reason)
                    }
                    other => other,
                })?;
                Ok(src)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PimScenario {
            layout,
            plan: self.carriers.clone(),
            ofdm: OfdmConfig {
                fft_len: self.ofdm.fft_len,
                used_subcarriers: self.ofdm.used_subcarriers,
                subcarrier_spacing_hz: self.ofdm.subcarrier_spacing_hz,
                modulation: self.ofdm.modulation,
                n_symbols: 1,
            },
            precoder: self.precoder.clone(),
            sources,
            noise_power: self.noise_power(),
            pim_over_noise_db: self.noise.pim_over_noise_db,
            seed: self.seeds.scenario,
            train_len: self.record.train_len,
            test_len: self.record.test_len,
            channel_mode: self.channel_mode,
        })
    }
}

fn desk_record() -> RecordSpec {
    RecordSpec {
        train_len: DESK_TRAIN,
        test_len: DESK_TEST,
    }
}

/// Uniform direction on the unit sphere for source `index`.
pub fn random_orientation(seed: u64, index: u64) -> Point3 {
    let mut r = rng::keyed(seed, rng::stream::ORIENTATION + index);
    loop {
        let v = Point3::new(
            StandardNormal.sample(&mut r),
            StandardNormal.sample(&mut r),
            StandardNormal.sample(&mut r),
        );
        let n = v.norm();
        if n > 1e-6 {
            return v * (1.0 / n);
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| PimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}
