//! Self-checks of the library against analytic oracles. Each check is
//! independent and reports a pass/fail line.

use std::f64::consts::PI;

use rand::Rng;

use crate::model::ModelParams;
use crate::noise::{
    isserlis_moment, lagged_moment_series, ou_exact_step, NoiseSpectrum, OuState, SeededRng,
};
use crate::reduced::{
    averaged_derivative_drift, averaged_drift, covariance_b_closed_example,
    covariance_b_quadrature, integrate_averaged,
};
use crate::spectral::{project_fast, project_slow, sine_product_integral, Basis, SlowCutoff, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Runs every check with random inputs drawn from `seed`.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        projections(seed),
        sine_products(),
        gaussian_moments(),
        ou_variance(seed),
        covariance_closed_form(),
        landau_equilibrium(),
        jacobian(seed),
    ]
}

fn random_field<R: Rng>(rng: &mut R, m: usize) -> SpectralField {
    SpectralField::from_coeffs((0..m).map(|_| rng.random_range(-2.0..2.0)).collect())
}

fn projections(seed: u64) -> CheckResult {
    let basis = Basis::new(8, 0.0).expect("valid basis");
    let cut = SlowCutoff::new(3, &basis).expect("valid cutoff");
    let mut rng = SeededRng::new(seed, 101).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = random_field(&mut rng, 8);
        let p = project_slow(&w, cut).expect("cutoff fits");
        let q = project_fast(&w, cut).expect("cutoff fits");
        let sum = p.add(&q);
        for (a, b) in sum.coeffs().iter().zip(w.coeffs()) {
            worst = worst.max((a - b).abs());
        }
        let pp = project_slow(&p, cut).expect("cutoff fits");
        let qq = project_fast(&q, cut).expect("cutoff fits");
        worst = worst.max(pp.add(&p.scale(-1.0)).norm());
        worst = worst.max(qq.add(&q.scale(-1.0)).norm());
        worst = worst.max(p.inner(&q).abs());
    }
    check(
        "projection algebra",
        worst == 0.0,
        format!("max deviation {worst:e} over 100 random fields"),
    )
}

fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let h = PI / intervals as f64;
    let mut s = f(0.0) + f(PI);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0
}

fn sine_products() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for len in 2..=4 {
        let mut idx = vec![1usize; len];
        loop {
            let exact = sine_product_integral(&idx);
            let quad = 2.0 / PI
                * simpson(
                    |x| idx.iter().map(|&i| (i as f64 * x).sin()).product(),
                    10_000,
                );
            worst = worst.max((exact - quad).abs());
            count += 1;
            // next non-decreasing tuple with entries <= 6
            let Some(pos) = idx.iter().rposition(|&i| i < 6) else {
                break;
            };
            let v = idx[pos] + 1;
            idx[pos..].iter_mut().for_each(|i| *i = v);
        }
    }
    check(
        "sine products vs Simpson",
        worst <= 1e-10,
        format!("max |exact - quadrature| = {worst:e} over {count} tuples"),
    )
}

fn gaussian_moments() -> CheckResult {
    let v = 1.0 / 6.0;
    let mut worst: f64 = 0.0;
    for rho in [0.0, 0.3, 0.8] {
        let cov = vec![vec![v, v * rho], vec![v * rho, v]];
        for a in 0..=3 {
            for b in 0..=3 {
                let direct = isserlis_moment(&cov, &[a, b]).expect("degree <= 6");
                let series: f64 = lagged_moment_series(a, b)
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * rho.powi(k as i32))
                    .sum::<f64>()
                    * v.powf((a + b) as f64 / 2.0);
                worst = worst.max((direct - series).abs());
            }
        }
    }
    check(
        "lagged Gaussian moments",
        worst <= 1e-14,
        format!("max series mismatch {worst:e}"),
    )
}

fn ou_variance(seed: u64) -> CheckResult {
    // Steps long against the decay time give independent stationary draws.
    let basis = Basis::new(6, 1.0).expect("valid basis");
    let cut = SlowCutoff::new(1, &basis).expect("valid cutoff");
    let spectrum = NoiseSpectrum::new(vec![0.0, 1.0, 0.5, 0.0, 0.0, 2.0], cut).expect("valid");
    let params = ModelParams::new(0.1, 1.0, 1.0, 1.0, basis, cut, spectrum).expect("valid");
    let mut state = OuState::fast_modes(&params).expect("forced modes decay");
    let targets = state.stationary_variance();
    let mut rng = SeededRng::new(seed, 102).rng();
    let n = 100_000;
    let mut sums = vec![0.0; targets.len()];
    for _ in 0..n {
        state = ou_exact_step(&state, 1.0, &mut rng).expect("valid step");
        for (s, v) in sums.iter_mut().zip(&state.values) {
            *s += v * v;
        }
    }
    let mut worst_z: f64 = 0.0;
    for (s, t) in sums.iter().zip(&targets) {
        let var = s / n as f64;
        let se = t * (2.0 / n as f64).sqrt();
        worst_z = worst_z.max((var - t).abs() / se);
    }
    check(
        "OU stationary variance",
        worst_z <= 3.0,
        format!("max |z| = {worst_z:.3} over modes {:?} at 1e5 samples", state.modes),
    )
}

fn covariance_closed_form() -> CheckResult {
    let mut worst: f64 = 0.0;
    for sigma in [0.5, 1.0, 1.5] {
        let params = ModelParams::mode2_forced(0.1, 1.0, sigma).expect("valid");
        for a in [0.0, 0.5, 1.0, 2.0] {
            let u = SpectralField::from_coeffs(vec![a]);
            let b = covariance_b_quadrature(&u, &params).expect("covariance").get(0, 0);
            let exact = covariance_b_closed_example(a, sigma);
            let err = if exact == 0.0 {
                b.abs()
            } else {
                (b - exact).abs() / exact
            };
            worst = worst.max(err);
        }
    }
    check(
        "deviation covariance vs closed form",
        worst <= 1e-6,
        format!("max relative error {worst:e}"),
    )
}

fn landau_equilibrium() -> CheckResult {
    let params = ModelParams::mode2_forced(0.1, 1.0, 1.0).expect("valid");
    let u0 = SpectralField::from_coeffs(vec![0.5]);
    let path = integrate_averaged(&u0, &params, 40.0, 0.01).expect("averaged path");
    let a = path.last().expect("nonempty").u.coeff(1);
    check(
        "Landau equilibrium",
        (a - 1.0).abs() <= 1e-6,
        format!("A(40) = {a}"),
    )
}

fn jacobian(seed: u64) -> CheckResult {
    let mut rng = SeededRng::new(seed, 103).rng();
    let single = ModelParams::mode2_forced(0.1, 1.0, 1.0).expect("valid");
    let basis = Basis::new(6, 1.0).expect("valid basis");
    let cut = SlowCutoff::new(2, &basis).expect("valid cutoff");
    let spectrum = NoiseSpectrum::new(vec![0.0, 0.0, 1.0, 0.5, 0.0, 0.2], cut).expect("valid");
    let double = ModelParams::new(0.1, 0.7, 1.2, 1.0, basis, cut, spectrum).expect("valid");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for params in [&single, &double] {
        let n = params.slow_modes();
        for _ in 0..20 {
            let u = random_field(&mut rng, n);
            let jac = averaged_derivative_drift(&u, params).expect("jacobian");
            for k in 0..n {
                let mut up = u.clone();
                up.coeffs_mut()[k] += h;
                let mut down = u.clone();
                down.coeffs_mut()[k] -= h;
                let fp = averaged_drift(&up, params).expect("drift");
                let fm = averaged_drift(&down, params).expect("drift");
                for i in 0..n {
                    let fd = (fp.coeffs()[i] - fm.coeffs()[i]) / (2.0 * h);
                    let err = (fd - jac[i][k]).abs() / jac[i][k].abs().max(1.0);
                    worst = worst.max(err);
                }
            }
        }
    }
    check(
        "averaged Jacobian vs finite differences",
        worst <= 1e-6,
        format!("max relative error {worst:e}"),
    )
}
