//! Monte Carlo ensembles, stationary statistics with batch means, sweeps
//! and fits.

mod fit;

pub use fit::{convergence_order, linear_fit, multi_linear_fit, FitResult, MultiFit};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fullsim::{simulate_coupled, simulate_full, SimConfig, Trajectory};
use crate::model::ModelParams;
use crate::noise::{Process, SeededRng};
use crate::reduced::{simulate_manifold, AveragedPath};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn compensated_mean(values: impl IntoIterator<Item = f64>) -> (f64, usize) {
    let mut s = CompensatedSum::default();
    let mut n = 0;
    for v in values {
        s.add(v);
        n += 1;
    }
    (if n == 0 { f64::NAN } else { s.value() / n as f64 }, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Full SPDE.
    Full,
    /// Separated slow/fast system.
    Coupled,
    /// Averaged ODE plus Gaussian deviation, reconstructed in fast time.
    AveragedDeviation,
    /// Stochastic slow-manifold amplitude equation.
    Manifold,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Full,
        ModelKind::Coupled,
        ModelKind::AveragedDeviation,
        ModelKind::Manifold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Coupled => "coupled",
            Self::AveragedDeviation => "averaged-deviation",
            Self::Manifold => "manifold",
        }
    }

    fn process(self) -> Process {
        match self {
            Self::Full | Self::Coupled => Process::Spde,
            Self::AveragedDeviation => Process::Deviation,
            Self::Manifold => Process::Manifold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `a(t)`.
    Amplitude,
    /// `a(t)²`.
    AmplitudeSquared,
}

/// Ensemble settings. `sim.seed` is ignored: trajectory `i` uses the stream
/// of `(base_seed, i)` for the model's process.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub model: ModelKind,
    /// Time grid of the full and coupled models (fast time).
    pub sim: SimConfig,
    /// Fast-time step of the averaged-deviation and manifold models.
    pub reduced_dt: f64,
    pub trajectories: usize,
    pub base_seed: u64,
    /// Fraction of each trajectory discarded before averaging.
    pub burn_in: f64,
    /// Batches per trajectory for the batch-means standard error.
    pub batches: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Full,
            sim: SimConfig::default(),
            reduced_dt: 0.01,
            trajectories: 100,
            base_seed: 0,
            burn_in: 0.5,
            batches: 10,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.trajectories == 0 {
            return Err(Error::InvalidParams("ensemble needs at least one trajectory".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidParams(format!("burn_in={} outside [0, 1)", self.burn_in)));
        }
        if self.batches == 0 {
            return Err(Error::InvalidParams("batches must be >= 1".into()));
        }
        if !(self.reduced_dt > 0.0 && self.reduced_dt.is_finite()) {
            return Err(Error::InvalidStep(self.reduced_dt));
        }
        Ok(())
    }

    /// Time grid actually used by `model`: reduced models step with
    /// `reduced_dt` and keep roughly the same recording interval.
    pub fn grid_for(&self, model: ModelKind) -> SimConfig {
        match model {
            ModelKind::Full | ModelKind::Coupled => self.sim.clone(),
            ModelKind::AveragedDeviation | ModelKind::Manifold => {
                let interval = self.sim.stride as f64 * self.sim.dt;
                SimConfig {
                    dt: self.reduced_dt,
                    stride: ((interval / self.reduced_dt).round() as usize).max(1),
                    ..self.sim.clone()
                }
            }
        }
    }
}

/// Stationary summary of one observable over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Trajectories that contributed.
    pub n: usize,
    pub diverged: usize,
    pub burn_in: f64,
    pub mean: f64,
    /// Pooled variance over all retained samples of all trajectories.
    pub variance: f64,
    /// Standard error of `mean` from batch means.
    pub stderr: f64,
    /// Standard error of `√variance` from batch variances.
    pub std_stderr: f64,
    /// `variance / stderr²`.
    pub effective_samples: f64,
}

impl EnsembleStats {
    pub fn std(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Both observables of one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub amplitude: EnsembleStats,
    pub squared: EnsembleStats,
}

impl EnsembleSummary {
    pub fn get(&self, observable: Observable) -> &EnsembleStats {
        match observable {
            Observable::Amplitude => &self.amplitude,
            Observable::AmplitudeSquared => &self.squared,
        }
    }
}

/// Per-batch first moments of `a`, `a²` and `a⁴` for one trajectory.
#[derive(Debug, Clone, PartialEq)]
struct BatchMoments {
    m1: Vec<f64>,
    m2: Vec<f64>,
    m4: Vec<f64>,
}

fn window(len: usize, burn_in: f64) -> Result<usize> {
    let start = (burn_in * len as f64).floor() as usize;
    if start >= len {
        return Err(Error::EmptyWindow);
    }
    Ok(start)
}

fn batch_moments(values: &[f64], burn_in: f64, batches: usize) -> Result<BatchMoments> {
    let start = window(values.len(), burn_in)?;
    let kept = &values[start..];
    if kept.len() < batches {
        return Err(Error::EmptyWindow);
    }
    let size = kept.len() / batches;
    // The remainder goes to the last batch.
    let mut out = BatchMoments {
        m1: Vec::with_capacity(batches),
        m2: Vec::with_capacity(batches),
        m4: Vec::with_capacity(batches),
    };
    for b in 0..batches {
        let end = if b + 1 == batches { kept.len() } else { (b + 1) * size };
        let chunk = &kept[b * size..end];
        out.m1.push(compensated_mean(chunk.iter().copied()).0);
        out.m2.push(compensated_mean(chunk.iter().map(|a| a * a)).0);
        out.m4.push(compensated_mean(chunk.iter().map(|a| (a * a) * (a * a))).0);
    }
    Ok(out)
}

/// Time mean and variance of `traj.amplitude` after discarding the first
/// `burn_in` fraction of samples.
pub fn stationary_mean_var(traj: &Trajectory, burn_in: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidParams(format!("burn_in={burn_in} outside [0, 1)")));
    }
    let start = window(traj.amplitude.len(), burn_in)?;
    let kept = &traj.amplitude[start..];
    let (mean, _) = compensated_mean(kept.iter().copied());
    let (var, _) = compensated_mean(kept.iter().map(|a| (a - mean) * (a - mean)));
    Ok((mean, var))
}

/// Batch-means summary of a single stationary series, as if it were a
/// one-member ensemble.
pub fn series_stats(values: &[f64], burn_in: f64, batches: usize) -> Result<EnsembleStats> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidParams(format!("burn_in={burn_in} outside [0, 1)")));
    }
    let m = batch_moments(values, burn_in, batches)?;
    Ok(summarize(&m.m1, &m.m2, 1, 0, burn_in))
}

/// Summary from per-batch moments `(m_b, q_b)` of an observable `x`, where
/// `q_b` is the batch mean of `x²`.
fn summarize(
    first: &[f64],
    second: &[f64],
    n: usize,
    diverged: usize,
    burn_in: f64,
) -> EnsembleStats {
    let b = first.len() as f64;
    let (mean, _) = compensated_mean(first.iter().copied());
    let (second_mean, _) = compensated_mean(second.iter().copied());
    let variance = (second_mean - mean * mean).max(0.0);
    let spread = |values: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = values.collect();
        let (m, _) = compensated_mean(v.iter().copied());
        let (s, _) = compensated_mean(v.iter().map(|x| (x - m) * (x - m)));
        // unbiased batch variance, standard error over all batches
        if b > 1.0 {
            (s * b / (b - 1.0) / b).sqrt()
        } else {
            f64::NAN
        }
    };
    let stderr = spread(&mut first.iter().copied());
    // Batch estimate of the centred second moment: q_b − 2 m m_b + m².
    let var_stderr = spread(
        &mut first
            .iter()
            .zip(second)
            .map(|(m1, m2)| m2 - 2.0 * mean * m1 + mean * mean),
    );
    let std = variance.sqrt();
    EnsembleStats {
        n,
        diverged,
        burn_in,
        mean,
        variance,
        stderr,
        std_stderr: if std > 0.0 { var_stderr / (2.0 * std) } else { 0.0 },
        effective_samples: if stderr > 0.0 {
            variance / (stderr * stderr)
        } else {
            f64::INFINITY
        },
    }
}

/// Runs `config.trajectories` members and summarises `a` and `a²`.
///
/// Trajectories run in parallel on the current rayon pool; results are
/// collected in index order and reduced sequentially, so the summary is
/// bit-identical for any thread count.
pub fn run_ensemble(params: &ModelParams, config: &EnsembleConfig) -> Result<EnsembleSummary> {
    params.validate()?;
    config.validate()?;
    let moments = ensemble_trajectories(params, config, |traj| {
        batch_moments(&traj.amplitude, config.burn_in, config.batches)
    })?;
    let total = moments.len();
    let ok: Vec<BatchMoments> = moments.into_iter().flatten().collect();
    let diverged = total - ok.len();
    if ok.is_empty() || diverged * 100 > total {
        return Err(Error::EnsembleFailure { diverged, total });
    }
    let m1: Vec<f64> = ok.iter().flat_map(|m| m.m1.iter().copied()).collect();
    let m2: Vec<f64> = ok.iter().flat_map(|m| m.m2.iter().copied()).collect();
    let m4: Vec<f64> = ok.iter().flat_map(|m| m.m4.iter().copied()).collect();
    Ok(EnsembleSummary {
        amplitude: summarize(&m1, &m2, ok.len(), diverged, config.burn_in),
        squared: summarize(&m2, &m4, ok.len(), diverged, config.burn_in),
    })
}

/// Runs every member and maps its trajectory through `reduce`. Diverged
/// members give `None`; any other error aborts.
pub fn ensemble_trajectories<T, F>(
    params: &ModelParams,
    config: &EnsembleConfig,
    reduce: F,
) -> Result<Vec<Option<T>>>
where
    T: Send,
    F: Fn(Trajectory) -> Result<T> + Sync,
{
    config.validate()?;
    let model = config.model;
    let grid = config.grid_for(model);
    let path = match model {
        ModelKind::AveragedDeviation => Some(AveragedPath::new(params, &grid)?),
        _ => None,
    };
    let run_one = |i: usize| -> Result<Option<T>> {
        let seed = SeededRng::for_trajectory(config.base_seed, i as u64, model.process());
        let traj = match model {
            ModelKind::Full => simulate_full(params, &SimConfig { seed, ..grid.clone() }),
            ModelKind::Coupled => simulate_coupled(params, &SimConfig { seed, ..grid.clone() }),
            ModelKind::AveragedDeviation => path.as_ref().expect("path built above").trajectory(seed),
            ModelKind::Manifold => simulate_manifold(params, &SimConfig { seed, ..grid.clone() }),
        };
        match traj {
            Ok(t) => reduce(t).map(Some),
            Err(Error::Divergence { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    (0..config.trajectories)
        .into_par_iter()
        .map(run_one)
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Bifurcation parameter `εγ`.
    EpsGamma,
    /// Noise variance `εσ²`.
    EpsSigma2,
}

impl SweepAxis {
    /// `base` with the swept product set to `value`, `ε` unchanged.
    pub fn apply(self, base: &ModelParams, value: f64) -> Result<ModelParams> {
        let mut p = base.clone();
        match self {
            Self::EpsGamma => p.gamma = value / p.eps,
            Self::EpsSigma2 => {
                if value < 0.0 {
                    return Err(Error::InvalidParams(format!("eps*sigma^2={value} < 0")));
                }
                p.sigma = (value / p.eps).sqrt();
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::EpsGamma => "eps_gamma",
            Self::EpsSigma2 => "eps_sigma2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub covariate: f64,
    pub result: Result<EnsembleSummary>,
}

/// One ensemble per grid value. Every point uses the same base seed, so
/// neighbouring points see common random numbers. A failing point is
/// recorded and the sweep continues.
pub fn sweep(
    axis: SweepAxis,
    grid: &[f64],
    base: &ModelParams,
    config: &EnsembleConfig,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty sweep grid".into()));
    }
    Ok(grid
        .iter()
        .map(|&x| SweepPoint {
            covariate: x,
            result: axis.apply(base, x).and_then(|p| run_ensemble(&p, config)),
        })
        .collect())
}

/// Mean and standard-deviation agreement of two ensemble summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub mean_diff: f64,
    /// `|Δmean| / max(|mean_a|, |mean_b|)`.
    pub mean_rel: f64,
    pub std_diff: f64,
    pub std_rel: f64,
    /// 95% intervals of the means intersect.
    pub mean_overlap: bool,
    /// 95% intervals of the standard deviations intersect.
    pub std_overlap: bool,
}

const Z95: f64 = 1.959_963_984_540_054;

pub fn compare_models(a: &EnsembleStats, b: &EnsembleStats) -> Comparison {
    let rel = |x: f64, y: f64| {
        let scale = x.abs().max(y.abs());
        if scale == 0.0 {
            0.0
        } else {
            (x - y).abs() / scale
        }
    };
    let mean_diff = a.mean - b.mean;
    let std_diff = a.std() - b.std();
    Comparison {
        mean_diff,
        mean_rel: rel(a.mean, b.mean),
        std_diff,
        std_rel: rel(a.std(), b.std()),
        mean_overlap: mean_diff.abs() <= Z95 * (a.stderr + b.stderr),
        std_overlap: std_diff.abs() <= Z95 * (a.std_stderr + b.std_stderr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fullsim::{InitialCondition, SnapshotKind};

    fn traj(values: &[f64]) -> Trajectory {
        let mut t = Trajectory::new(SnapshotKind::Modes);
        for (k, v) in values.iter().enumerate() {
            t.push(k as f64, *v, None);
        }
        t
    }

    #[test]
    fn stationary_examples() {
        assert_eq!(stationary_mean_var(&traj(&[2.5; 10]), 0.5).unwrap(), (2.5, 0.0));
        let ramp: Vec<f64> = (0..10).map(f64::from).collect();
        let (m, v) = stationary_mean_var(&traj(&ramp), 0.9).unwrap();
        assert_eq!((m, v), (9.0, 0.0));
        assert_eq!(stationary_mean_var(&traj(&[]), 0.0), Err(Error::EmptyWindow));
        assert!(stationary_mean_var(&traj(&ramp), 1.0).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn compare_identical_is_zero() {
        let s = EnsembleStats {
            n: 10,
            diverged: 0,
            burn_in: 0.5,
            mean: 0.4,
            variance: 0.01,
            stderr: 0.001,
            std_stderr: 0.001,
            effective_samples: 1e4,
        };
        let c = compare_models(&s, &s);
        assert_eq!((c.mean_diff, c.mean_rel, c.std_rel), (0.0, 0.0, 0.0));
        assert!(c.mean_overlap && c.std_overlap);
        let far = EnsembleStats { mean: 0.5, ..s };
        assert!(!compare_models(&s, &far).mean_overlap);
    }

    #[test]
    fn noiseless_ensemble_has_zero_spread() {
        let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
        let cfg = EnsembleConfig {
            model: ModelKind::Manifold,
            sim: SimConfig {
                horizon: 20.0,
                initial: InitialCondition::DeterministicEquilibrium,
                ..SimConfig::default()
            },
            trajectories: 3,
            ..EnsembleConfig::default()
        };
        let s = run_ensemble(&p, &cfg).unwrap();
        assert!((s.amplitude.mean - p.deterministic_amplitude()).abs() < 1e-9);
        assert!(s.amplitude.stderr < 1e-12);
        assert!(s.amplitude.variance < 1e-12);
    }

    #[test]
    fn sweep_axis_sets_products() {
        let base = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
        let p = SweepAxis::EpsGamma.apply(&base, 0.4).unwrap();
        assert!((p.eps_gamma() - 0.4).abs() < 1e-15);
        let p = SweepAxis::EpsSigma2.apply(&base, 0.3).unwrap();
        assert!((p.eps_sigma2() - 0.3).abs() < 1e-15);
        assert!(SweepAxis::EpsSigma2.apply(&base, -0.1).is_err());
        let cfg = EnsembleConfig::default();
        assert!(sweep(SweepAxis::EpsGamma, &[], &base, &cfg).is_err());
    }

    #[test]
    fn diverging_members_fail_the_ensemble() {
        let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
        let cfg = EnsembleConfig {
            sim: SimConfig {
                dt: 0.5,
                horizon: 50.0,
                stride: 1,
                initial: InitialCondition::Amplitude(50.0),
                ..SimConfig::default()
            },
            trajectories: 2,
            ..EnsembleConfig::default()
        };
        assert_eq!(
            run_ensemble(&p, &cfg),
            Err(Error::EnsembleFailure {
                diverged: 2,
                total: 2
            })
        );
    }
}
