//! Run configuration files and built-in presets.
//!
//! A run is described by one TOML file:
//!
//! ```toml
//! experiment = "convergence"
//!
//! [grid]
//! bounds = [[-16.0, 16.0]]
//! n = [16384]
//!
//! [potential]
//! kind = "inverse-power"
//! centers = [[0.0]]
//! charges = [-1.0]
//! alpha = 0.51
//!
//! [scheme]
//! tau_list = [0.01, 0.005, 0.0025]
//! tau_ref = 1e-5
//! t_final = 1.0
//! beta = 1.0
//! ```
//!
//! Unknown keys are rejected with the offending name and, where one is
//! close, a suggestion.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewi::EwiParams;
use crate::experiments::{
    potential_centers, AdmissiblePair, DynamicsConfig, Exponent, InitialSpec, StrichartzConfig, SweepConfig,
};
use crate::field::SpectralField;
use crate::grid::{Grid, GridSpec};
use crate::multiplier::FilterShape;
use crate::norm::NormKind;
use crate::potential::{realize, PotentialField, PotentialSpec, RealizeOptions, SingularTreatment, DEFAULT_SEED};

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4", "strichartz-1d"];

/// Common misspellings mapped to the key they most likely mean.
const ALIASES: &[(&str, &str)] = &[
    ("dt", "tau"),
    ("timestep", "tau"),
    ("time_step", "tau"),
    ("step", "tau"),
    ("taus", "tau_list"),
    ("dts", "tau_list"),
    ("tau_e", "tau_ref"),
    ("tau_reference", "tau_ref"),
    ("t", "t_final"),
    ("T", "t_final"),
    ("tmax", "t_final"),
    ("final_time", "t_final"),
    ("N", "n"),
    ("points", "n"),
    ("domain", "bounds"),
    ("box", "bounds"),
    ("output", "out"),
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}", unknown_message("key", .name, .suggestion))]
    UnknownKey { name: String, suggestion: Option<String> },

    #[error("{}", unknown_message("value", .name, .suggestion))]
    UnknownValue { name: String, suggestion: Option<String> },

    #[error("unknown preset \"{name}\"; valid presets: {}", .valid.join(", "))]
    UnknownPreset { name: String, valid: Vec<String> },

    #[error("malformed config: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Invalid(String),
}

fn unknown_message(what: &str, name: &str, suggestion: &Option<String>) -> String {
    match suggestion {
        Some(s) => format!("unknown {what} \"{name}\" (did you mean \"{s}\"?)"),
        None => format!("unknown {what} \"{name}\""),
    }
}

/// Backticked names in a serde message, in order.
fn backticked(msg: &str) -> Vec<&str> {
    msg.split('`').skip(1).step_by(2).collect()
}

fn suggest(name: &str, expected: &[&str]) -> Option<String> {
    if let Some((_, target)) = ALIASES.iter().find(|(a, _)| *a == name || a.eq_ignore_ascii_case(name)) {
        if expected.is_empty() || expected.contains(target) {
            return Some(target.to_string());
        }
    }
    expected
        .iter()
        .map(|e| (strsim::jaro_winkler(name, e), e))
        .filter(|(score, _)| *score >= 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e.to_string())
}

impl ConfigError {
    fn from_toml(err: toml::de::Error) -> Self {
        let msg = err.message().to_string();
        for (marker, is_key) in [("unknown field", true), ("unknown variant", false)] {
            if let Some(rest) = msg.strip_prefix(marker) {
                let names = backticked(rest);
                if let Some((name, expected)) = names.split_first() {
                    let suggestion = suggest(name, expected);
                    let name = name.to_string();
                    return if is_key {
                        ConfigError::UnknownKey { name, suggestion }
                    } else {
                        ConfigError::UnknownValue { name, suggestion }
                    };
                }
            }
        }
        ConfigError::Parse(err.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    Strichartz,
    Dynamics,
    SingleRun,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Strichartz => "strichartz",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::SingleRun => "single-run",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterChoice {
    #[default]
    Smooth,
    Sharp,
    /// No filter (diagnostics only).
    None,
}

impl FilterChoice {
    pub fn shape(self) -> Option<FilterShape> {
        match self {
            FilterChoice::Smooth => Some(FilterShape::Smooth),
            FilterChoice::Sharp => Some(FilterShape::Sharp),
            FilterChoice::None => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizeConfig {
    #[serde(default)]
    pub treatment: SingularTreatment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oversample: Option<usize>,
}

impl RealizeConfig {
    pub fn options(&self) -> RealizeOptions {
        RealizeOptions {
            oversample: self.oversample,
            treatment: self.treatment,
        }
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_norms() -> Vec<NormKind> {
    vec![NormKind::L2, NormKind::H1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    /// Step of a single run or of the dynamics run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Steps of a sweep, decreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_list: Option<Vec<f64>>,
    /// Reference step of a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ref: Option<f64>,
    pub t_final: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub filter: FilterChoice,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    /// Rerun the reference at half its step and compare.
    #[serde(default)]
    pub check_reference: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrichartzBlock {
    /// Either `q` and `r`, or `p0` for the pair `(4p₀/d, 2p₀/(p₀−1))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<String>,
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsBlock {
    #[serde(default = "default_radius")]
    pub approach_radius: f64,
    /// Defaults to the inverse-power centers of the potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        DynamicsBlock {
            approach_radius: default_radius(),
            centers: None,
        }
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig {
            out: None,
            snapshot_stride: None,
            seed: DEFAULT_SEED,
        }
    }
}

fn default_initial() -> InitialSpec {
    InitialSpec::standard_gaussian()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    /// Preset the config came from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Deviations from the nominal setup worth carrying into every manifest.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub realize: RealizeConfig,
    pub scheme: SchemeConfig,
    #[serde(default = "default_initial")]
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strichartz: Option<StrichartzBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsBlock>,
    #[serde(default)]
    pub io: IoConfig,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(ConfigError::Invalid(msg.into()))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(ConfigError::from_toml)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Sets the seed and fills unset random-potential seeds with it.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(seed) = seed {
            self.io.seed = seed;
            self.potential.override_seed(seed);
        }
        self.potential.resolve_seed(self.io.seed);
    }

    /// Structural checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let grid = Grid::from_spec(&self.grid).map_err(|e| invalid(e.to_string()))?;
        let s = &self.scheme;
        if !(s.t_final > 0.0 && s.t_final.is_finite()) {
            return Err(invalid(format!("scheme.t_final must be positive, got {}", s.t_final)));
        }
        match self.experiment {
            ExperimentKind::Convergence => {
                if s.tau_list.as_ref().map_or(true, |l| l.is_empty()) {
                    return Err(invalid("a convergence run needs scheme.tau_list"));
                }
                if s.tau_ref.is_none() {
                    return Err(invalid("a convergence run needs scheme.tau_ref"));
                }
            }
            ExperimentKind::Strichartz => {
                if s.tau_list.as_ref().map_or(true, |l| l.is_empty()) {
                    return Err(invalid("a Strichartz probe needs scheme.tau_list"));
                }
                self.pair(grid.dim())?;
            }
            ExperimentKind::Dynamics | ExperimentKind::SingleRun => {
                if s.tau.is_none() {
                    return Err(invalid(format!("a {} run needs scheme.tau", self.experiment)));
                }
            }
        }
        if self.io.snapshot_stride == Some(0) {
            return Err(invalid("io.snapshot_stride must be positive"));
        }
        Ok(())
    }

    fn pair(&self, d: usize) -> Result<AdmissiblePair> {
        let block = self
            .strichartz
            .as_ref()
            .ok_or_else(|| invalid("a Strichartz probe needs a [strichartz] table"))?;
        match (&block.q, &block.r, &block.p0) {
            (Some(q), Some(r), None) => AdmissiblePair::new(*q, *r, d),
            (None, None, Some(p0)) => {
                let p0: Ratio<i64> = p0
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("strichartz.p0 {p0:?} is not a rational number")))?;
                AdmissiblePair::from_potential_exponent(p0, d)
            }
            _ => Err(invalid("give either strichartz.q and strichartz.r, or strichartz.p0")),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::from_spec(&self.grid)?))
    }

    pub fn realize_potential(&self, grid: &Arc<Grid>) -> Result<PotentialField> {
        realize(&self.potential, grid, self.realize.options())
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        let s = &self.scheme;
        let sweep = SweepConfig {
            grid: self.grid()?,
            potential: self.potential.clone(),
            realize: self.realize.options(),
            t_final: s.t_final,
            beta: s.beta,
            sigma: s.sigma,
            filter: s.filter.shape(),
            tau_list: s.tau_list.clone().unwrap_or_default(),
            tau_ref: s.tau_ref.ok_or_else(|| invalid("missing scheme.tau_ref"))?,
            initial: self.initial.clone(),
            norms: s.norms.clone(),
            check_reference: s.check_reference,
        };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn strichartz(&self) -> Result<StrichartzConfig> {
        let grid = self.grid()?;
        let pair = self.pair(grid.dim())?;
        let datum = self.initial.prepare(&grid)?.field;
        Ok(StrichartzConfig {
            pair,
            t_final: self.scheme.t_final,
            tau_list: self.scheme.tau_list.clone().unwrap_or_default(),
            filter: self.scheme.filter.shape().unwrap_or_default(),
            datum,
        })
    }

    pub fn dynamics(&self) -> Result<DynamicsConfig> {
        let block = self.dynamics.clone().unwrap_or_default();
        let s = &self.scheme;
        Ok(DynamicsConfig {
            grid: self.grid()?,
            potential: self.potential.clone(),
            realize: self.realize.options(),
            tau: s.tau.ok_or_else(|| invalid("missing scheme.tau"))?,
            t_final: s.t_final,
            beta: s.beta,
            sigma: s.sigma,
            filter: s.filter.shape(),
            initial: self.initial.clone(),
            centers: block.centers.unwrap_or_else(|| potential_centers(&self.potential)),
            approach_radius: block.approach_radius,
            snapshot_stride: self.io.snapshot_stride.unwrap_or(usize::MAX),
        })
    }

    /// Parameters and unfiltered datum of a single evolution.
    pub fn single_run(&self) -> Result<(EwiParams, SpectralField)> {
        let grid = self.grid()?;
        let potential = Arc::new(self.realize_potential(&grid)?);
        let s = &self.scheme;
        let tau = s.tau.ok_or_else(|| invalid("missing scheme.tau"))?;
        let params = EwiParams::new(tau, s.t_final, s.beta, s.sigma, s.filter.shape(), potential)?;
        let datum = self.initial.prepare(&grid)?.field;
        Ok((params, datum))
    }
}

fn halvings(first: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| first / (1u64 << k) as f64).collect()
}

fn one_dimensional(alpha: f64) -> RunConfig {
    RunConfig {
        experiment: ExperimentKind::Convergence,
        preset: None,
        notes: vec!["reference step 1e-5 instead of 1e-6 to keep the run at desk scale".into()],
        grid: GridSpec {
            bounds: vec![[-16.0, 16.0]],
            n: vec![1 << 14],
        },
        potential: PotentialSpec::inverse_power(&[0.0], -1.0, alpha),
        realize: RealizeConfig::default(),
        scheme: SchemeConfig {
            tau: None,
            tau_list: Some(halvings(0.01, 7)),
            tau_ref: Some(1e-5),
            t_final: 1.0,
            beta: 1.0,
            sigma: 1.0,
            filter: FilterChoice::Smooth,
            norms: default_norms(),
            check_reference: false,
        },
        initial: InitialSpec::standard_gaussian(),
        strichartz: None,
        dynamics: None,
        io: IoConfig::default(),
    }
}

fn two_dimensional(potential: PotentialSpec, oversample: Option<usize>) -> RunConfig {
    RunConfig {
        experiment: ExperimentKind::Convergence,
        preset: None,
        notes: vec!["256 points per axis and reference step 1e-4, a desk-scale version of the full setup".into()],
        grid: GridSpec {
            bounds: vec![[-8.0, 8.0]; 2],
            n: vec![256; 2],
        },
        potential,
        realize: RealizeConfig {
            treatment: SingularTreatment::Spectral,
            oversample,
        },
        scheme: SchemeConfig {
            tau: None,
            tau_list: Some(halvings(0.025, 6)),
            tau_ref: Some(1e-4),
            t_final: 0.25,
            beta: -1.0,
            sigma: 1.0,
            filter: FilterChoice::Smooth,
            norms: default_norms(),
            check_reference: false,
        },
        initial: InitialSpec::standard_gaussian(),
        strichartz: None,
        dynamics: None,
        io: IoConfig::default(),
    }
}

fn three_dimensional(exponent: f64) -> RunConfig {
    let t_final = 1.0 / 16.0;
    RunConfig {
        experiment: ExperimentKind::Convergence,
        preset: None,
        notes: vec!["box (-4,4)^3 with 64 points per axis and T = 1/16, a desk-scale version of the full setup".into()],
        grid: GridSpec {
            bounds: vec![[-4.0, 4.0]; 3],
            n: vec![64; 3],
        },
        potential: PotentialSpec::Bessel { exponent },
        realize: RealizeConfig::default(),
        scheme: SchemeConfig {
            tau: None,
            tau_list: Some(halvings(t_final / 4.0, 6)),
            tau_ref: Some(1e-4),
            t_final,
            beta: 1.0,
            sigma: 1.0,
            filter: FilterChoice::Smooth,
            norms: default_norms(),
            check_reference: false,
        },
        initial: InitialSpec::standard_gaussian(),
        strichartz: None,
        dynamics: None,
        io: IoConfig::default(),
    }
}

fn four_centers() -> RunConfig {
    RunConfig {
        experiment: ExperimentKind::Dynamics,
        preset: None,
        notes: vec![
            "tau = 1e-3 and 256 points per axis".into(),
            "cubic focusing nonlinearity, beta = -1, sigma = 1".into(),
        ],
        grid: GridSpec {
            bounds: vec![[-8.0, 8.0]; 2],
            n: vec![256; 2],
        },
        potential: PotentialSpec::InversePower {
            centers: vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            charges: vec![-1.0; 4],
            alpha: 1.0,
        },
        realize: RealizeConfig::default(),
        scheme: SchemeConfig {
            tau: Some(1e-3),
            tau_list: None,
            tau_ref: None,
            t_final: 4.0,
            beta: -1.0,
            sigma: 1.0,
            filter: FilterChoice::Smooth,
            norms: default_norms(),
            check_reference: false,
        },
        initial: InitialSpec::BoostedGroundState {
            omega: 3.0,
            shift: vec![-4.0, 2.0],
            momentum: vec![1.0, 0.0],
        },
        strichartz: None,
        dynamics: Some(DynamicsBlock::default()),
        io: IoConfig {
            out: None,
            snapshot_stride: Some(500),
            seed: DEFAULT_SEED,
        },
    }
}

fn strichartz_line() -> RunConfig {
    RunConfig {
        experiment: ExperimentKind::Strichartz,
        preset: None,
        notes: Vec::new(),
        grid: GridSpec {
            bounds: vec![[-32.0, 32.0]],
            n: vec![1024],
        },
        potential: PotentialSpec::zero(),
        realize: RealizeConfig::default(),
        scheme: SchemeConfig {
            tau: None,
            tau_list: Some(halvings(0.125, 7)),
            tau_ref: None,
            t_final: 1.0,
            beta: 0.0,
            sigma: 1.0,
            filter: FilterChoice::Smooth,
            norms: default_norms(),
            check_reference: false,
        },
        initial: InitialSpec::standard_gaussian(),
        strichartz: Some(StrichartzBlock {
            q: None,
            r: None,
            p0: Some("2".into()),
        }),
        dynamics: None,
        io: IoConfig::default(),
    }
}

/// Built-in configuration by name.
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut cfg = match name {
        "fig1a" => one_dimensional(0.51),
        "fig1b" => one_dimensional(0.76),
        "fig2a" => two_dimensional(PotentialSpec::inverse_power(&[0.0, 0.0], -1.0, 1.0), None),
        "fig2b" => two_dimensional(
            PotentialSpec::Random {
                decay: 1.0,
                mean: 1.0,
                seed: None,
                lattice: Some(vec![512, 512]),
            },
            Some(4),
        ),
        "fig3a" => three_dimensional(1.0),
        "fig3b" => three_dimensional(0.76),
        "fig4" => four_centers(),
        "strichartz-1d" => strichartz_line(),
        _ => {
            return Err(ConfigError::UnknownPreset {
                name: name.to_string(),
                valid: PRESETS.iter().map(|s| s.to_string()).collect(),
            }
            .into())
        }
    };
    cfg.preset = Some(name.to_string());
    Ok(cfg)
}
