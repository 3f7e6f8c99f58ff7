//! Scenario-driven front end: parse a scenario, run one command, write CSV
//! tables (and optionally gnuplot scripts) into an output directory.

pub mod commands;
pub mod error;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Outcome};
pub use error::{CliError, Result};
pub use scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One full-model trajectory.
    Simulate,
    /// Averaged, deviation, reconstructed and slow-manifold trajectories.
    Reduce,
    /// Ensemble statistics over a one-parameter grid, with an optional fit.
    Sweep,
    /// Stationary statistics of several models at several ε.
    Compare,
    /// Analytic self-checks.
    Verify,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Scenario file (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario: fig1, fig2, fig3 or fig4.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Overrides `ensemble.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "SRDE_THREADS")]
    pub threads: Option<usize>,
    /// Overrides `ensemble.trajectories`.
    #[arg(long, global = true)]
    pub ensemble_size: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "srde", version, about = "Stochastic reaction-diffusion simulations and reduced models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

/// Resolves the scenario named by `options` and applies flag overrides.
pub fn resolve(options: &Options) -> Result<Scenario> {
    let mut s = match (&options.scenario, &options.preset) {
        (Some(path), _) => Scenario::from_path(path)?,
        (None, Some(name)) => Scenario::preset(name)?,
        (None, None) => Scenario::default(),
    };
    if let Some(seed) = options.seed {
        s.ensemble.seed = seed;
    }
    if let Some(n) = options.ensemble_size {
        s.ensemble.trajectories = n;
    }
    if let Some(dir) = &options.out_dir {
        s.output.dir = dir.clone();
    }
    s.validate()?;
    Ok(s)
}

/// Runs `command` on a rayon pool of `threads` workers (all cores when
/// `None`).
pub fn run(command: Command, scenario: &Scenario, threads: Option<usize>) -> Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    pool.install(|| execute(command, scenario))
}
