use srde_core::fullsim::{simulate_full, InitialCondition, SimConfig, SnapshotKind, Trajectory};
use srde_core::noise::{standard_normal, Process};
use srde_core::stats::{
    compare_models, linear_fit, run_ensemble, series_stats, stationary_mean_var, sweep,
    EnsembleConfig, ModelKind, SweepAxis,
};
use srde_core::{ModelParams, SeededRng};

fn manifold_config(trajectories: usize, base_seed: u64) -> EnsembleConfig {
    EnsembleConfig {
        model: ModelKind::Manifold,
        sim: SimConfig {
            horizon: 100.0,
            initial: InitialCondition::LandauEquilibrium,
            ..SimConfig::default()
        },
        trajectories,
        base_seed,
        burn_in: 0.2,
        ..EnsembleConfig::default()
    }
}

#[test]
fn reported_stderr_matches_replicate_spread() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let runs: Vec<_> = (0..30)
        .map(|r| run_ensemble(&p, &manifold_config(40, 100 + r)).unwrap().amplitude)
        .collect();
    let n = runs.len() as f64;
    let mean = runs.iter().map(|s| s.mean).sum::<f64>() / n;
    let spread = (runs.iter().map(|s| (s.mean - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let reported = runs.iter().map(|s| s.stderr).sum::<f64>() / n;
    let ratio = spread / reported;
    // 30 replicates pin the spread to roughly ±13%.
    assert!((0.6..1.5).contains(&ratio), "spread {spread} vs reported {reported}");
}

#[test]
fn stderr_shrinks_like_inverse_root_n() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let sizes = [25usize, 100, 400];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &sizes {
        // Average the log stderr over a few replicates to steady the fit.
        let reps = 4;
        let mut acc = 0.0;
        for r in 0..reps {
            acc += run_ensemble(&p, &manifold_config(n, 7 + r)).unwrap().amplitude.stderr.ln();
        }
        xs.push((n as f64).ln());
        ys.push(acc / reps as f64);
    }
    let fit = linear_fit(&xs, &ys).unwrap();
    assert!((fit.slope + 0.5).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn identical_across_thread_counts() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let mut cfg = EnsembleConfig {
        sim: SimConfig {
            horizon: 5.0,
            ..SimConfig::default()
        },
        trajectories: 16,
        base_seed: 5,
        ..EnsembleConfig::default()
    };
    for model in ModelKind::ALL {
        cfg.model = model;
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&p, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4), "{}", model.name());
    }
}

#[test]
fn single_member_matches_direct_run() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let cfg = EnsembleConfig {
        sim: SimConfig {
            horizon: 20.0,
            ..SimConfig::default()
        },
        trajectories: 1,
        base_seed: 31,
        ..EnsembleConfig::default()
    };
    let ens = run_ensemble(&p, &cfg).unwrap().amplitude;
    let traj = simulate_full(
        &p,
        &SimConfig {
            seed: SeededRng::for_trajectory(31, 0, Process::Spde),
            ..cfg.sim.clone()
        },
    )
    .unwrap();
    let direct = series_stats(&traj.amplitude, cfg.burn_in, cfg.batches).unwrap();
    assert_eq!(ens, direct);
    let (mean, _) = stationary_mean_var(&traj, cfg.burn_in).unwrap();
    assert!((mean - ens.mean).abs() < ens.stderr);
}

#[test]
fn stationary_moments_of_exact_ou_series() {
    let (theta, d) = (0.5f64, 0.8f64);
    let dt = 1.0;
    let f = (-theta * dt).exp();
    let target = d * d / (2.0 * theta);
    let s = (target * (1.0 - f * f)).sqrt();
    let mut rng = SeededRng::new(3, 0).rng();
    let mut traj = Trajectory::new(SnapshotKind::Modes);
    let mut x = 0.0;
    let n = 200_000;
    for k in 0..n {
        traj.push(k as f64 * dt, x, None);
        x = f * x + s * standard_normal(&mut rng);
    }
    let (mean, var) = stationary_mean_var(&traj, 0.01).unwrap();
    // Integrated autocorrelation time (1 + f)/(1 − f) inflates the errors.
    let tau = (1.0 + f) / (1.0 - f);
    let mean_se = (target * tau / n as f64).sqrt();
    let var_se = target * (2.0 * (1.0 + f * f) / (1.0 - f * f) / n as f64).sqrt();
    assert!(mean.abs() < 4.0 * mean_se, "mean {mean}");
    assert!((var - target).abs() < 4.0 * var_se, "var {var} vs {target}");
    let st = series_stats(&traj.amplitude, 0.01, 20).unwrap();
    assert!((st.stderr / mean_se - 1.0).abs() < 0.5, "{} vs {mean_se}", st.stderr);
    assert!(stationary_mean_var(&traj, 1.0).is_err());
}

#[test]
fn sweep_records_failing_points_and_continues() {
    let base = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let cfg = manifold_config(8, 1);
    let pts = sweep(SweepAxis::EpsSigma2, &[0.1, -1.0, 0.3], &base, &cfg).unwrap();
    assert_eq!(pts.len(), 3);
    assert!(pts[0].result.is_ok() && pts[2].result.is_ok());
    assert!(pts[1].result.is_err());
    assert!(sweep(SweepAxis::EpsGamma, &[], &base, &cfg).is_err());
}

#[test]
fn model_compared_with_itself_overlaps() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let a = run_ensemble(&p, &manifold_config(30, 2)).unwrap().amplitude;
    let b = run_ensemble(&p, &manifold_config(30, 3)).unwrap().amplitude;
    let c = compare_models(&a, &a);
    assert_eq!(c.mean_diff, 0.0);
    assert!(c.mean_overlap && c.std_overlap);
    let d = compare_models(&a, &b);
    assert!(d.mean_overlap, "{d:?}");
}
