use std::fmt::Write as _;
use std::path::PathBuf;

use srde_core::fullsim::simulate_full;
use srde_core::noise::Process;
use srde_core::reduced::{reconstruct, simulate_manifold, AveragedPath};
use srde_core::stats::{
    compare_models, linear_fit, run_ensemble, sweep, EnsembleStats, ModelKind, Observable,
};
use srde_core::table::{fit_csv, rows_csv, sweep_csv, trajectory_csv};
use srde_core::verify;
use srde_core::{SeededRng, SimConfig};

use crate::error::{CliError, Result};
use crate::scenario::{FitTarget, Scenario};
use crate::Command;

/// What a command produced. `success` is false when the command ran to the
/// end but something it measures failed (a diverged sweep point, a failed
/// self-check).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
    pub success: bool,
}

struct Writer {
    dir: PathBuf,
    gnuplot: bool,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(scenario: &Scenario) -> Result<Self> {
        let dir = scenario.output.dir.clone();
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut w = Self {
            dir,
            gnuplot: scenario.output.gnuplot,
            files: Vec::new(),
        };
        w.write("scenario.toml", &scenario.to_toml())?;
        Ok(w)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    /// Writes `name.gp` plotting columns of `csv` when gnuplot output is on.
    fn plot(&mut self, name: &str, csv: &str, xlabel: &str, ylabel: &str, lines: &str) -> Result<()> {
        if !self.gnuplot {
            return Ok(());
        }
        let script = format!(
            "set datafile separator ','\nset key autotitle columnhead\n\
             set xlabel '{xlabel}'\nset ylabel '{ylabel}'\nplot {}\n",
            lines.replace("FILE", &format!("'{csv}'"))
        );
        self.write(&format!("{name}.gp"), &script)
    }

    fn finish(self, messages: Vec<String>, success: bool) -> Outcome {
        Outcome {
            files: self.files,
            messages,
            success,
        }
    }
}

pub fn execute(command: Command, scenario: &Scenario) -> Result<Outcome> {
    match command {
        Command::Simulate => simulate(scenario),
        Command::Reduce => reduce(scenario),
        Command::Sweep => run_sweep(scenario),
        Command::Compare => compare(scenario),
        Command::Verify => run_verify(scenario),
    }
}

fn simulate(scenario: &Scenario) -> Result<Outcome> {
    let params = scenario.params()?;
    let cfg = SimConfig {
        seed: SeededRng::for_trajectory(scenario.ensemble.seed, 0, Process::Spde),
        ..scenario.sim_config()
    };
    let traj = simulate_full(&params, &cfg)?;
    let mut w = Writer::new(scenario)?;
    w.write("trajectory.csv", &trajectory_csv(&traj))?;
    w.plot("trajectory", "trajectory.csv", "t", "a", "FILE using 1:2 with lines")?;
    let last = traj.amplitude.last().copied().unwrap_or(f64::NAN);
    Ok(w.finish(vec![format!("{} samples, final a = {last}", traj.len())], true))
}

fn reduce(scenario: &Scenario) -> Result<Outcome> {
    let params = scenario.params()?;
    let seed = scenario.ensemble.seed;
    let grid = SimConfig {
        snapshots: scenario.sim.snapshots,
        ..scenario.ensemble_config(ModelKind::AveragedDeviation).grid_for(ModelKind::AveragedDeviation)
    };
    let path = AveragedPath::new(&params, &grid)?;
    let averaged = path.averaged();
    let deviation = path.sample_deviation(SeededRng::for_trajectory(seed, 0, Process::Deviation))?;
    let rebuilt = reconstruct(&averaged, &deviation, params.eps)?;
    let manifold = simulate_manifold(
        &params,
        &SimConfig {
            seed: SeededRng::for_trajectory(seed, 0, Process::Manifold),
            ..grid.clone()
        },
    );

    let slow = params.slow_modes();
    let mut header = vec!["t".to_string()];
    header.extend((1..=slow).map(|k| format!("u{k}")));
    let rows: Vec<Vec<f64>> = averaged
        .iter()
        .map(|s| std::iter::once(s.clock / params.eps).chain(s.u.coeffs().iter().copied()).collect())
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut w = Writer::new(scenario)?;
    w.write("averaged.csv", &rows_csv(&header_refs, &rows))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=slow).map(|k| format!("rho{k}")));
    let rows: Vec<Vec<f64>> = deviation
        .iter()
        .map(|s| std::iter::once(s.clock / params.eps).chain(s.rho.coeffs().iter().copied()).collect())
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    w.write("deviation.csv", &rows_csv(&header_refs, &rows))?;
    w.write("reconstructed.csv", &trajectory_csv(&rebuilt))?;
    let mut messages = Vec::new();
    match manifold {
        Ok(m) => {
            w.write("manifold.csv", &trajectory_csv(&m))?;
            w.plot(
                "reduce",
                "reconstructed.csv",
                "t",
                "a",
                "FILE using 1:2 with lines title 'averaged + deviation', 'manifold.csv' using 1:2 with lines title 'manifold'",
            )?;
        }
        // The manifold model only covers the single-slow-mode example.
        Err(srde_core::Error::Unsupported(why)) => {
            messages.push(format!("manifold model skipped: {why}"));
            w.plot("reduce", "reconstructed.csv", "t", "a", "FILE using 1:2 with lines")?;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(w.finish(messages, true))
}

fn run_sweep(scenario: &Scenario) -> Result<Outcome> {
    let sw = &scenario.sweep;
    if sw.grid.is_empty() {
        return Err(CliError::Config {
            path: "sweep.grid".into(),
            message: "empty grid".into(),
        });
    }
    let params = scenario.params()?;
    let cfg = scenario.ensemble_config(sw.model);
    let points = sweep(sw.axis, &sw.grid, &params, &cfg)?;
    let mut w = Writer::new(scenario)?;
    w.write("sweep.csv", &sweep_csv(&points, Observable::Amplitude))?;
    w.write("sweep_squared.csv", &sweep_csv(&points, Observable::AmplitudeSquared))?;
    let xlabel = sw.axis.name();
    let mut messages = Vec::new();
    let mut success = true;
    for p in &points {
        if let Err(e) = &p.result {
            success = false;
            messages.push(format!("{xlabel}={}: {e}", p.covariate));
        }
    }
    let column = match sw.fit {
        FitTarget::None => None,
        FitTarget::MeanSquare => Some(("sweep_squared.csv", "mean a^2", 2)),
        FitTarget::Std => Some(("sweep.csv", "std a", 4)),
    };
    if let Some((csv, ylabel, col)) = column {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter_map(|p| {
                let s = p.result.as_ref().ok()?;
                let y = match sw.fit {
                    FitTarget::Std => s.amplitude.std(),
                    _ => s.squared.mean,
                };
                Some((p.covariate, y))
            })
            .unzip();
        match linear_fit(&xs, &ys) {
            Ok(fit) => {
                messages.push(format!("{ylabel} ~ {} * {xlabel} + {}", fit.slope, fit.intercept));
                w.write("fit.csv", &fit_csv(&fit))?;
                w.plot(
                    "sweep",
                    csv,
                    xlabel,
                    ylabel,
                    &format!(
                        "FILE using 1:{col} with points title 'ensemble', {} + {} * x title 'fit'",
                        fit.intercept, fit.slope
                    ),
                )?;
            }
            Err(e) => {
                success = false;
                messages.push(format!("fit skipped: {e}"));
            }
        }
    } else {
        w.plot("sweep", "sweep.csv", xlabel, "mean a", "FILE using 1:2:5 with yerrorbars")?;
    }
    Ok(w.finish(messages, success))
}

const COMPARE_HEADER: &str =
    "eps,model,mean,std,stderr,std_stderr,mean_sq,mean_sq_stderr,n,divergences";
const OVERLAP_HEADER: &str = "eps,model_a,model_b,mean_diff,std_diff,mean_overlap,std_overlap";

fn compare(scenario: &Scenario) -> Result<Outcome> {
    let c = &scenario.compare;
    if c.epsilons.is_empty() || c.models.is_empty() {
        return Err(CliError::Config {
            path: "compare".into(),
            message: "need at least one epsilon and one model".into(),
        });
    }
    let mut table = format!("{COMPARE_HEADER}\n");
    let mut overlaps = format!("{OVERLAP_HEADER}\n");
    let mut messages = Vec::new();
    for &eps in &c.epsilons {
        let params = scenario.params_at(eps)?;
        let mut results: Vec<(ModelKind, EnsembleStats)> = Vec::new();
        for &model in &c.models {
            let mut cfg = scenario.ensemble_config(model);
            cfg.sim.horizon = c.slow_horizon / eps;
            let summary = run_ensemble(&params, &cfg)?;
            let (s, sq) = (summary.amplitude, summary.squared);
            writeln!(
                table,
                "{eps},{},{},{},{},{},{},{},{},{}",
                model.name(),
                s.mean,
                s.std(),
                s.stderr,
                s.std_stderr,
                sq.mean,
                sq.stderr,
                s.n,
                s.diverged
            )
            .expect("string write");
            results.push((model, s));
        }
        for (i, (ma, a)) in results.iter().enumerate() {
            for (mb, b) in &results[i + 1..] {
                let cmp = compare_models(a, b);
                writeln!(
                    overlaps,
                    "{eps},{},{},{},{},{},{}",
                    ma.name(),
                    mb.name(),
                    cmp.mean_diff,
                    cmp.std_diff,
                    u8::from(cmp.mean_overlap),
                    u8::from(cmp.std_overlap)
                )
                .expect("string write");
                messages.push(format!(
                    "eps={eps} {} vs {}: mean diff {:.3e} ({}), std diff {:.3e} ({})",
                    ma.name(),
                    mb.name(),
                    cmp.mean_diff,
                    if cmp.mean_overlap { "overlap" } else { "disjoint" },
                    cmp.std_diff,
                    if cmp.std_overlap { "overlap" } else { "disjoint" },
                ));
            }
        }
    }
    let mut w = Writer::new(scenario)?;
    w.write("compare.csv", &table)?;
    w.write("overlap.csv", &overlaps)?;
    Ok(w.finish(messages, true))
}

fn run_verify(scenario: &Scenario) -> Result<Outcome> {
    let results = verify::run_all(scenario.ensemble.seed);
    let mut report = String::new();
    for r in &results {
        writeln!(report, "{r}").expect("string write");
    }
    let success = results.iter().all(|r| r.passed);
    let mut w = Writer::new(scenario)?;
    w.write("verify.txt", &report)?;
    Ok(w.finish(results.iter().map(ToString::to_string).collect(), success))
}
