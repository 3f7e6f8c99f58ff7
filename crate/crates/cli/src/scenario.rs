//! Declarative run configuration.
//!
//! A scenario file is TOML with an optional top-level `preset` key. The
//! preset (if any) is loaded first and every explicit key in the file is
//! merged over it, table by table. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srde_core::fullsim::{Backend, InitialCondition, SimConfig};
use srde_core::stats::{EnsembleConfig, ModelKind, SweepAxis};
use srde_core::{Basis, ModelParams, NoiseSpectrum, SeededRng, SlowCutoff};

use crate::error::{CliError, Result};

pub const PRESETS: [&str; 4] = ["fig1", "fig2", "fig3", "fig4"];

// Pinned preset contents. Changing any of these changes published outputs.
const FIG1: &str = r#"
[model]
eps_gamma = 1.0
eps_sigma2 = 1.0

[sim]
horizon = 50.0
stride = 100
backend = "finite-difference"
grid_points = 31
snapshots = true
"#;

const FIG2: &str = r#"
[model]
eps_sigma2 = 1.0

[sim]
horizon = 400.0
stride = 100

[ensemble]
trajectories = 200

[sweep]
axis = "eps-gamma"
grid = [0.2, 0.4, 0.6, 0.8, 1.0]
fit = "mean-square"
"#;

const FIG3: &str = r#"
[model]
eps_gamma = 1.0
eps_sigma2 = 1.0

[sim]
horizon = 100.0
stride = 100
snapshots = true
"#;

const FIG4: &str = r#"
[model]
eps_gamma = 1.0

[sim]
horizon = 400.0
stride = 100

[ensemble]
trajectories = 200

[sweep]
axis = "eps-sigma2"
grid = [0.1, 0.2, 0.3, 0.4, 0.5]
fit = "std"
"#;

fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "fig1" => Some(FIG1),
        "fig2" => Some(FIG2),
        "fig3" => Some(FIG3),
        "fig4" => Some(FIG4),
        _ => None,
    }
}

/// Model coefficients. The full equation only sees the products `εγ` and
/// `εσ²`, so those are what the file specifies; `ε` itself sets the time
/// scale separation used by the reduced models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub eps: f64,
    pub eps_gamma: f64,
    pub eps_sigma2: f64,
    pub c0: f64,
    pub modes: usize,
    pub shift: f64,
    pub slow_modes: usize,
    /// Noise eigenvalues `λ_1..λ_M`. Empty means `λ_2 = 1`, all others zero.
    pub lambdas: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            eps: 0.1,
            eps_gamma: 0.1,
            eps_sigma2: 0.1,
            c0: 1.0,
            modes: 8,
            shift: 1.0,
            slow_modes: 1,
            lambdas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    pub backend: Backend,
    pub grid_points: usize,
    pub stride: usize,
    pub snapshots: bool,
    pub initial: InitialCondition,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            horizon: d.horizon,
            backend: d.backend,
            grid_points: d.grid_points,
            stride: d.stride,
            snapshots: d.snapshots,
            initial: d.initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub trajectories: usize,
    pub seed: u64,
    pub burn_in: f64,
    pub batches: usize,
    /// Fast-time step of the reduced models.
    pub reduced_dt: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let d = EnsembleConfig::default();
        Self {
            trajectories: d.trajectories,
            seed: d.base_seed,
            burn_in: d.burn_in,
            batches: d.batches,
            reduced_dt: d.reduced_dt,
        }
    }
}

/// Quantity fitted linearly against the swept covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTarget {
    None,
    /// Ensemble mean of `a²`.
    MeanSquare,
    /// Standard deviation of `a`.
    Std,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub fit: FitTarget,
    pub model: ModelKind,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: SweepAxis::EpsGamma,
            grid: Vec::new(),
            fit: FitTarget::None,
            model: ModelKind::Full,
        }
    }
}

/// Model comparison at several `ε` with `γ` and `σ` held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub epsilons: Vec<f64>,
    pub models: Vec<ModelKind>,
    /// Horizon in slow time; each run lasts `slow_horizon / ε` fast time.
    pub slow_horizon: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.05],
            models: vec![
                ModelKind::Full,
                ModelKind::AveragedDeviation,
                ModelKind::Manifold,
            ],
            slow_horizon: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write a gnuplot script next to each CSV.
    pub gnuplot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            gnuplot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub model: ModelSection,
    pub sim: SimSection,
    pub ensemble: EnsembleSection,
    pub sweep: SweepSection,
    pub compare: CompareSection,
    pub output: OutputSection,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Recursively overlays `top` on `base`: tables merge, everything else is
/// replaced.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn parse_table(source: &str, origin: &str) -> Result<toml::Table> {
    source
        .parse::<toml::Table>()
        .map_err(|e| config_err(origin, e.to_string()))
}

fn preset_table(name: &str) -> Result<toml::Table> {
    let src = preset_source(name).ok_or_else(|| {
        config_err(
            "preset",
            format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")),
        )
    })?;
    parse_table(src, name)
}

impl Scenario {
    pub fn preset(name: &str) -> Result<Self> {
        Self::from_table(preset_table(name)?)
    }

    /// Parses scenario text, resolving any `preset` key.
    pub fn from_toml(source: &str) -> Result<Self> {
        let mut file = parse_table(source, "scenario")?;
        let mut table = match file.remove("preset") {
            Some(toml::Value::String(name)) => preset_table(&name)?,
            Some(other) => {
                return Err(config_err(
                    "preset",
                    format!("expected a string, found {}", other.type_str()),
                ))
            }
            None => toml::Table::new(),
        };
        merge(&mut table, file);
        Self::from_table(table)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let scenario: Scenario = serde_path_to_error::deserialize(toml::Value::Table(table))
            .map_err(|e| {
                let path = e.path().to_string();
                config_err(path, e.into_inner().to_string())
            })?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Fully resolved form; parsing it gives back an identical scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("model.eps", m.eps)?;
        if !m.eps_gamma.is_finite() {
            return Err(config_err("model.eps_gamma", "must be finite"));
        }
        if !(m.eps_sigma2 >= 0.0 && m.eps_sigma2.is_finite()) {
            return Err(config_err(
                "model.eps_sigma2",
                format!("must be >= 0, got {}", m.eps_sigma2),
            ));
        }
        positive("model.c0", m.c0)?;
        if !m.lambdas.is_empty() && m.lambdas.len() != m.modes {
            return Err(config_err(
                "model.lambdas",
                format!("expected {} values, got {}", m.modes, m.lambdas.len()),
            ));
        }
        self.params()?;
        positive("sim.dt", self.sim.dt)?;
        if !(self.sim.horizon >= 0.0 && self.sim.horizon.is_finite()) {
            return Err(config_err("sim.horizon", "must be >= 0 and finite"));
        }
        if self.sim.stride == 0 {
            return Err(config_err("sim.stride", "must be >= 1"));
        }
        if self.sim.backend == Backend::FiniteDifference && self.sim.grid_points < 3 {
            return Err(config_err("sim.grid_points", "need at least 3"));
        }
        let e = &self.ensemble;
        if e.trajectories == 0 {
            return Err(config_err("ensemble.trajectories", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&e.burn_in) {
            return Err(config_err("ensemble.burn_in", "must lie in [0, 1)"));
        }
        if e.batches == 0 {
            return Err(config_err("ensemble.batches", "must be >= 1"));
        }
        positive("ensemble.reduced_dt", e.reduced_dt)?;
        for (k, &x) in self.sweep.grid.iter().enumerate() {
            if !x.is_finite() || (self.sweep.axis == SweepAxis::EpsSigma2 && x < 0.0) {
                return Err(config_err(format!("sweep.grid[{k}]"), format!("out of range: {x}")));
            }
        }
        for (k, &x) in self.compare.epsilons.iter().enumerate() {
            positive(&format!("compare.epsilons[{k}]"), x)?;
        }
        positive("compare.slow_horizon", self.compare.slow_horizon)?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.params_at(self.model.eps)
    }

    /// Model parameters at another `ε` with `γ` and `σ` unchanged.
    pub fn params_at(&self, eps: f64) -> Result<ModelParams> {
        let m = &self.model;
        let wrap = |e: srde_core::Error| config_err("model", e.to_string());
        let basis = Basis::new(m.modes, m.shift).map_err(wrap)?;
        let cutoff = SlowCutoff::new(m.slow_modes, &basis).map_err(wrap)?;
        let spectrum = if m.lambdas.is_empty() {
            if m.modes < 2 {
                return Err(config_err("model.modes", "default noise needs at least 2 modes"));
            }
            NoiseSpectrum::single(m.modes, 2, 1.0)
        } else {
            NoiseSpectrum::new(m.lambdas.clone(), cutoff).map_err(wrap)?
        };
        let gamma = m.eps_gamma / m.eps;
        let sigma = (m.eps_sigma2 / m.eps).sqrt();
        ModelParams::new(eps, gamma, sigma, m.c0, basis, cutoff, spectrum).map_err(wrap)
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.sim;
        SimConfig {
            dt: s.dt,
            horizon: s.horizon,
            backend: s.backend,
            grid_points: s.grid_points,
            stride: s.stride,
            snapshots: s.snapshots,
            nonlinear: true,
            initial: s.initial.clone(),
            seed: SeededRng::new(self.ensemble.seed, 0),
        }
    }

    pub fn ensemble_config(&self, model: ModelKind) -> EnsembleConfig {
        let e = &self.ensemble;
        EnsembleConfig {
            model,
            sim: SimConfig {
                snapshots: false,
                ..self.sim_config()
            },
            reduced_dt: e.reduced_dt,
            trajectories: e.trajectories,
            base_seed: e.seed,
            burn_in: e.burn_in,
            batches: e.batches,
        }
    }
}
