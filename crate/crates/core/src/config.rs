//! Run configuration: one TOML document with a section per stage.
//!
//! ```toml
//! seed = 7
//! [params]
//! b_field = 0.0
//! [model]
//! variant = "resonant"
//! [grid]
//! t_max = 60.0
//! dt = 0.01
//! b_sweep = [0.0, 0.008]
//! ```
//!
//! Missing keys take their defaults and unknown keys are rejected. A preset
//! can be used as the base document; a config file is then merged over it
//! key by key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::correlator::{Window, DEFAULT_IRF_FWHM};
use crate::fit::{default_bounds, CurveColumn, FitTolerances, SHAPE_PARAMS};
use crate::liouville::Variant;
use crate::spin::Polarization;
use crate::units::{validate_params, PhysicalParams, PARAM_NAMES};

pub const PRESETS: [(&str, &str); 4] = [
    ("fig3_zero_field", include_str!("../presets/fig3_zero_field.toml")),
    ("fig5_resonant_sweep", include_str!("../presets/fig5_resonant_sweep.toml")),
    ("fig6_quasiresonant_sweep", include_str!("../presets/fig6_quasiresonant_sweep.toml")),
    ("fig7_8mT", include_str!("../presets/fig7_8mT.toml")),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid config:{0}")]
    Invalid(FieldErrors),
}

/// Field-level validation messages, `section.key: problem`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldErrors(pub Vec<String>);

impl fmt::Display for FieldErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Polarization of the heralding photon.
    pub first: Polarization,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { variant: Variant::Resonant, first: Polarization::R }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Delay span, ns.
    pub t_max: f64,
    /// Delay step, ns.
    pub dt: f64,
    /// Field values, T.
    pub b_sweep: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { t_max: 60.0, dt: 0.01, b_sweep: vec![0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Gaussian response FWHM, ns.
    pub irf_fwhm: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { irf_fwhm: DEFAULT_IRF_FWHM }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Bright-exciton fine-structure split ħω₀, µeV.
    #[serde(rename = "be_split_ueV")]
    pub be_split_uev: f64,
    /// Fourier-analyse the co-polarized g² in `g2` runs.
    pub fft: bool,
    pub window: Window,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { be_split_uev: 27.0, fft: true, window: Window::Hann }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Significant digits written to CSV.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), precision: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModelKind {
    #[default]
    DcpDamped,
    G2Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub model: FitModelKind,
    /// Free parameters. Empty means all four shape parameters for the
    /// analytic model.
    pub free: Vec<String>,
    /// Initial values. Missing entries come from the FFT-seeded
    /// visibility fit (analytic model) or from `[params]` (numeric model).
    pub init: BTreeMap<String, f64>,
    /// Per-parameter `[lower, upper]`.
    pub bounds: BTreeMap<String, [f64; 2]>,
    /// Fixed values of analytic parameters that are not free.
    pub fixed: BTreeMap<String, f64>,
    /// Column fitted by the numeric model.
    pub column: CurveColumn,
    /// Curve CSVs; command-line paths are appended.
    pub data: Vec<PathBuf>,
    pub tolerances: FitTolerances,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            model: FitModelKind::DcpDamped,
            free: Vec::new(),
            init: BTreeMap::new(),
            bounds: BTreeMap::new(),
            fixed: BTreeMap::new(),
            column: CurveColumn::Dcp,
            data: Vec::new(),
            tolerances: FitTolerances::default(),
        }
    }
}

impl FitConfig {
    pub fn free_names(&self) -> Vec<String> {
        if self.free.is_empty() && self.model == FitModelKind::DcpDamped {
            SHAPE_PARAMS.iter().map(|s| s.to_string()).collect()
        } else {
            self.free.clone()
        }
    }

    pub fn bounds_of(&self, name: &str) -> Option<(f64, f64)> {
        self.bounds.get(name).map(|b| (b[0], b[1])).or_else(|| default_bounds(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_traj: usize,
    /// Length of each trajectory, ns.
    pub t_max: f64,
    /// Longest photon-pair delay histogrammed, ns.
    pub max_delay: f64,
    pub bin_width: f64,
    /// Write every jump record to `jumps_*.csv`.
    pub write_jumps: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_traj: 100_000, t_max: 200.0, max_delay: 20.0, bin_width: 0.5, write_jumps: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub params: PhysicalParams,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub detector: DetectorConfig,
    pub spectrum: SpectrumConfig,
    pub output: OutputConfig,
    pub fit: FitConfig,
    pub mc: McConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            params: PhysicalParams::default(),
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            detector: DetectorConfig::default(),
            spectrum: SpectrumConfig::default(),
            output: OutputConfig::default(),
            fit: FitConfig::default(),
            mc: McConfig::default(),
        }
    }
}

fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>().map_err(|e| ConfigError::Parse(e.to_string()))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::from_toml_str(preset_text(name)?)
    }

    /// Preset (if any) with the config file (if any) merged over it.
    pub fn load(preset: Option<&str>, path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut table = match preset {
            Some(name) => parse_table(preset_text(name)?)?,
            None => toml::Table::new(),
        };
        if let Some(path) = path {
            let text =
                std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
            merge(&mut table, parse_table(&text)?);
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    /// SHA-256 of the effective config. The output directory is left out, so
    /// the same run written to two places carries the same hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml_string().as_bytes()))
    }

    pub fn taus(&self) -> Vec<f64> {
        crate::correlator::uniform_grid(self.grid.t_max, self.grid.dt)
    }

    /// Check everything a run needs, collecting one message per bad field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if let Err(e) = validate_params(self.params) {
            errs.extend(e.0.iter().map(|e| format!("params.{e}")));
        }
        let g = &self.grid;
        if !(g.dt > 0.0 && g.dt.is_finite()) {
            errs.push(format!("grid.dt: must be > 0, got {}", g.dt));
        }
        if !(g.t_max > 0.0 && g.t_max.is_finite()) {
            errs.push(format!("grid.t_max: must be > 0, got {}", g.t_max));
        } else if g.dt > 0.0 && g.t_max / g.dt > 5e6 {
            errs.push("grid: more than 5e6 delay points".into());
        }
        if g.b_sweep.iter().any(|b| !b.is_finite()) {
            errs.push("grid.b_sweep: values must be finite".into());
        }
        if self.spectrum.fft && self.params.omega2 > 0.0 {
            let period = std::f64::consts::TAU / self.params.omega2;
            if g.t_max < 4.0 * period {
                errs.push(format!(
                    "grid.t_max: an FFT needs at least 4 precession periods ({:.3} ns), got {}",
                    4.0 * period,
                    g.t_max
                ));
            }
        }
        if !(self.detector.irf_fwhm >= 0.0 && self.detector.irf_fwhm.is_finite()) {
            errs.push(format!("detector.irf_fwhm: must be ≥ 0, got {}", self.detector.irf_fwhm));
        }
        if !(self.spectrum.be_split_uev >= 0.0 && self.spectrum.be_split_uev.is_finite()) {
            errs.push("spectrum.be_split_ueV: must be ≥ 0".into());
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            errs.push("output.precision: must be in 1..=17".into());
        }
        let m = &self.mc;
        if !(m.t_max > 0.0) {
            errs.push("mc.t_max: must be > 0".into());
        }
        if !(m.bin_width > 0.0) {
            errs.push("mc.bin_width: must be > 0".into());
        }
        if !(m.max_delay > 0.0 && m.max_delay < m.t_max) {
            errs.push("mc.max_delay: must be > 0 and below mc.t_max".into());
        }
        self.validate_fit(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(FieldErrors(errs)))
        }
    }

    fn validate_fit(&self, errs: &mut Vec<String>) {
        let f = &self.fit;
        let known = |n: &str| match f.model {
            FitModelKind::DcpDamped => SHAPE_PARAMS.contains(&n),
            FitModelKind::G2Numeric => PARAM_NAMES.contains(&n),
        };
        let free = f.free_names();
        for name in &free {
            if !known(name) {
                errs.push(format!("fit.free: unknown parameter `{name}`"));
                continue;
            }
            match f.bounds_of(name) {
                Some((lo, hi)) if lo.is_finite() && hi.is_finite() && lo <= hi => {}
                Some(_) => errs.push(format!("fit.bounds.{name}: must be finite and ordered")),
                None => errs.push(format!("fit.bounds.{name}: required")),
            }
        }
        for name in f.init.keys().chain(f.bounds.keys()).chain(f.fixed.keys()) {
            if !known(name) {
                errs.push(format!("fit: unknown parameter `{name}`"));
            }
        }
        if f.model == FitModelKind::DcpDamped {
            for name in SHAPE_PARAMS {
                if !free.iter().any(|n| n == name) && !f.fixed.contains_key(name) {
                    errs.push(format!("fit.fixed.{name}: required when `{name}` is not free"));
                }
            }
        }
    }
}
