use proptest::prelude::*;
use srde_core::fullsim::{simulate_full, InitialCondition, SimConfig};
use srde_core::noise::{standard_normal, OuState, OuStepper};
use srde_core::reduced::{
    averaged_derivative_drift, averaged_drift, covariance_b_closed_example,
    covariance_b_quadrature, integrate_averaged, manifold_shape, AveragedPath, ManifoldState,
};
use srde_core::spectral::{cubic_galerkin, CubicBackend, CubicNonlinearity};
use srde_core::stats::{convergence_order, run_ensemble, series_stats, EnsembleConfig, ModelKind};
use srde_core::{Basis, ModelParams, NoiseSpectrum, SeededRng, SlowCutoff, SpectralField};

fn scalar(a: f64) -> SpectralField {
    SpectralField::from_coeffs(vec![a])
}

fn two_slow_params() -> ModelParams {
    let basis = Basis::new(6, 1.0).unwrap();
    let cut = SlowCutoff::new(2, &basis).unwrap();
    let spec = NoiseSpectrum::new(vec![0.0, 0.0, 1.0, 0.5, 0.0, 0.0], cut).unwrap();
    ModelParams::new(0.1, 1.0, 1.0, 1.0, basis, cut, spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaged_flow_reaches_equilibrium(gamma in 0.5f64..2.0, sigma in 0.0f64..1.2, a0 in 0.05f64..2.0) {
        let p = ModelParams::mode2_forced(0.1, gamma, sigma).unwrap();
        prop_assume!(gamma - sigma * sigma / 4.0 > 0.1);
        let path = integrate_averaged(&scalar(a0), &p, 200.0, 0.01).unwrap();
        let a = path.last().unwrap().u.coeff(1);
        prop_assert!((a - p.landau_equilibrium()).abs() < 1e-6);
    }

    #[test]
    fn covariance_matches_closed_form(a in 0.0f64..2.0, sigma in 0.0f64..1.5) {
        let p = ModelParams::mode2_forced(0.1, 1.0, sigma).unwrap();
        let b = covariance_b_quadrature(&scalar(a), &p).unwrap().get(0, 0);
        let exact = covariance_b_closed_example(a, sigma);
        prop_assert!((b - exact).abs() <= 1e-6 * exact + 1e-15);
    }

    #[test]
    fn covariance_is_symmetric_psd(u1 in -2.0f64..2.0, u2 in -2.0f64..2.0) {
        let p = two_slow_params();
        let b = covariance_b_quadrature(&SpectralField::from_coeffs(vec![u1, u2]), &p).unwrap();
        prop_assert!((b.get(0, 1) - b.get(1, 0)).abs() < 1e-12);
        let tr = b.get(0, 0) + b.get(1, 1);
        let det = b.get(0, 0) * b.get(1, 1) - b.get(0, 1) * b.get(1, 0);
        prop_assert!(tr >= 0.0 && det >= -1e-12 * tr * tr);
    }

    #[test]
    fn jacobian_matches_finite_differences(u1 in -2.0f64..2.0, u2 in -2.0f64..2.0) {
        let p = two_slow_params();
        let u = SpectralField::from_coeffs(vec![u1, u2]);
        let jac = averaged_derivative_drift(&u, &p).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut up = u.clone();
            up.coeffs_mut()[k] += h;
            let mut dn = u.clone();
            dn.coeffs_mut()[k] -= h;
            let fp = averaged_drift(&up, &p).unwrap();
            let fm = averaged_drift(&dn, &p).unwrap();
            for i in 0..2 {
                let fd = (fp.coeffs()[i] - fm.coeffs()[i]) / (2.0 * h);
                prop_assert!((fd - jac[i][k]).abs() <= 1e-6 * jac[i][k].abs().max(1.0));
            }
        }
    }
}

#[test]
fn zero_noise_gives_zero_covariance() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
    let b = covariance_b_quadrature(&scalar(1.3), &p).unwrap();
    assert_eq!(b.get(0, 0), 0.0);
}

/// Long-run covariance of `∫ F dt` over windows, with `F` the slow
/// projection of the cubic evaluated on `u + η` by collocation.
#[test]
fn covariance_matches_time_integrated_fluctuations() {
    let p = two_slow_params();
    let u = [0.7, -0.4];
    let exact = covariance_b_quadrature(&SpectralField::from_coeffs(u.to_vec()), &p).unwrap();

    let mut ou = OuState::unscaled(&p).unwrap();
    let mut rng = SeededRng::new(21, 0).rng();
    let stationary = ou.stationary_variance();
    for (v, var) in ou.values.iter_mut().zip(stationary) {
        *v = var.sqrt() * standard_normal(&mut rng);
    }
    let dt = 0.002;
    let window = 3.0;
    let windows = 6000;
    let steps = (window / dt) as usize;
    let stepper = OuStepper::new(&ou, dt).unwrap();
    let cubic = CubicNonlinearity::new(6, CubicBackend::Collocation);
    let (mut f, mut scratch) = (vec![0.0; 6], Vec::new());
    let mut integrals = Vec::with_capacity(windows);
    for _ in 0..windows {
        let mut acc = [0.0; 2];
        for _ in 0..steps {
            let mut w = ou.to_coeffs(6);
            w[0] = u[0];
            w[1] = u[1];
            cubic.eval_into(&w, 1.0, &mut f, &mut scratch);
            acc[0] += f[0] * dt;
            acc[1] += f[1] * dt;
            stepper.step(&mut ou, &mut rng);
        }
        integrals.push(acc);
    }
    let n = windows as f64;
    let mean = [
        integrals.iter().map(|x| x[0]).sum::<f64>() / n,
        integrals.iter().map(|x| x[1]).sum::<f64>() / n,
    ];
    for i in 0..2 {
        for j in 0..2 {
            let cov = integrals
                .iter()
                .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                .sum::<f64>()
                / (n - 1.0)
                / window;
            let b = exact.get(i, j);
            // Standard error of a sample covariance of Gaussian integrals.
            let se = ((exact.get(i, i) * exact.get(j, j) + b * b) / n).sqrt();
            assert!(
                (cov - b).abs() < 4.0 * se + 0.02 * b.abs(),
                "B[{i}{j}]: MC {cov} vs exact {b} (se {se})"
            );
        }
    }
}

#[test]
fn deviation_std_at_landau_equilibrium() {
    // Averaged path sits at A* = 1, so the deviation is an OU process with
    // rate 3/2 and noise √(1/24).
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let cfg = SimConfig {
        dt: 0.05,
        horizon: 5000.0,
        stride: 200,
        initial: InitialCondition::LandauEquilibrium,
        ..SimConfig::default()
    };
    let path = AveragedPath::new(&p, &cfg).unwrap();
    let mut rho = Vec::new();
    for k in 0..20 {
        let dev = path.sample_deviation(SeededRng::new(4, k)).unwrap();
        rho.extend(dev.iter().skip(10).map(|d| d.rho.coeff(1)));
    }
    let var = rho.iter().map(|r| r * r).sum::<f64>() / rho.len() as f64;
    // Euler–Maruyama stationary variance D²/(θ(2 − θ dt')).
    let (theta, d2, dt) = (1.5, 1.0 / 24.0, 0.005);
    let discrete = d2 / (theta * (2.0 - theta * dt));
    let se = discrete * (2.0 / rho.len() as f64).sqrt();
    assert!((var - discrete).abs() < 3.0 * se, "var={var} vs {discrete}");
    let std = var.sqrt();
    let target = 1.0 / (6.0 * 2f64.sqrt());
    assert!((std - target).abs() / target < 0.03, "std={std} target={target}");
}

#[test]
fn manifold_stationary_moments() {
    let eps = 0.1;
    let p = ModelParams::mode2_forced(eps, 1.0, 1.0).unwrap();
    let cfg = EnsembleConfig {
        model: ModelKind::Manifold,
        sim: SimConfig {
            dt: 0.01,
            horizon: 200.0,
            stride: 10,
            initial: InitialCondition::LandauEquilibrium,
            ..SimConfig::default()
        },
        trajectories: 200,
        base_seed: 12,
        burn_in: 0.25,
        ..EnsembleConfig::default()
    };
    let s = run_ensemble(&p, &cfg).unwrap();
    let leading = 4.0 / 3.0 * eps - eps / 3.0;
    // Itô stationary law of da = (m a − b a³)dt + s a dW gives E a² = (m − s²/2)/b.
    let (m, b, sn) = (eps * 0.75, 0.75, eps / (2.0 * 6f64.sqrt()));
    let ito = (m - sn * sn / 2.0) / b;
    assert!((leading - ito).abs() < 0.003);
    assert!(
        (s.squared.mean - ito).abs() < 4.0 * s.squared.stderr + 1e-4,
        "E a² = {} vs {ito}",
        s.squared.mean
    );
    let target = eps / (6.0 * 2f64.sqrt());
    assert!((s.amplitude.std() - target).abs() / target < 0.05);
}

#[test]
fn manifold_mode_three_matches_static_balance() {
    // σ = 0: solve −α₃ c + [−(a e₁ + c e₃)³]₃ = 0 by Newton iteration.
    let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
    for a in [0.05, 0.1, 0.2] {
        let residual = |c: f64| {
            let mut w = vec![0.0; 8];
            w[0] = a;
            w[2] = c;
            let f = cubic_galerkin(&SpectralField::from_coeffs(w), 1.0, CubicBackend::ModeCoupling);
            -8.0 * c + f.coeff(3)
        };
        let mut c = 0.0;
        for _ in 0..50 {
            let h = 1e-9;
            let d = (residual(c + h) - residual(c - h)) / (2.0 * h);
            c -= residual(c) / d;
        }
        let shape = manifold_shape(&ManifoldState::new(a), &p).unwrap();
        let rel = (shape.coeff(3) - c).abs() / c;
        assert!(rel < a * a, "a={a}: manifold {} vs balance {c}", shape.coeff(3));
    }
}

#[test]
fn averaged_reconstruction_matches_deterministic_full_model() {
    let gamma = 1.0;
    let a_star = (4.0 * gamma / 3.0f64).sqrt();
    let mut epsilons = Vec::new();
    let mut gaps = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let p = ModelParams::mode2_forced(eps, gamma, 0.0).unwrap();
        let cfg = SimConfig {
            dt: 2e-3,
            horizon: 20.0 / eps,
            stride: 10_000,
            initial: InitialCondition::Amplitude(0.5 * eps.sqrt()),
            ..SimConfig::default()
        };
        let full = simulate_full(&p, &cfg).unwrap();
        let path = AveragedPath::new(&p, &cfg).unwrap();
        let avg = path.averaged();
        let a_full = full.amplitude.last().unwrap() / eps.sqrt();
        let a_avg = avg.last().unwrap().u.coeff(1);
        assert!((a_avg - a_star).abs() < 1e-6);
        epsilons.push(eps);
        gaps.push((a_full - a_avg).abs());
    }
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
    let order = convergence_order(&epsilons, &gaps).unwrap();
    assert!(order >= 0.9, "order {order}, gaps {gaps:?}");
}

#[test]
fn reduced_series_statistics_are_finite() {
    let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
    let cfg = SimConfig {
        dt: 0.01,
        horizon: 100.0,
        initial: InitialCondition::LandauEquilibrium,
        ..SimConfig::default()
    };
    let traj = srde_core::reduced::simulate_averaged_deviation(&p, &cfg).unwrap();
    traj.validate().unwrap();
    let s = series_stats(&traj.amplitude, 0.5, 5).unwrap();
    assert!((s.mean - 0.1f64.sqrt()).abs() < 0.01);
}
