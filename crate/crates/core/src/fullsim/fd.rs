use std::f64::consts::PI;

use rand::Rng;

use super::{SimConfig, SnapshotKind, Trajectory};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::noise::standard_normal;

/// Finite-difference scheme on `n` interior points of `(0, π)`: implicit
/// second difference plus linear growth, explicit pointwise cubic, noise
/// injected through the forced sine profiles.
#[derive(Debug, Clone)]
pub struct FdStepper {
    dt: f64,
    c0: f64,
    nonlinear: bool,
    points: Vec<f64>,
    off_diag: f64,
    // Thomas factors of the constant tridiagonal matrix.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
    // One noise profile σ√ε√λ_i √dt sin(i x_j) per forced mode.
    profiles: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl FdStepper {
    pub fn new(params: &ModelParams, config: &SimConfig) -> Result<Self> {
        let n = config.grid_points;
        let dt = config.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        if n < 3 {
            return Err(Error::InvalidParams("need at least 3 grid points".into()));
        }
        let h = PI / (n + 1) as f64;
        let points: Vec<f64> = (1..=n).map(|j| j as f64 * h).collect();
        let r = dt / (h * h);
        let diag = 1.0 + 2.0 * r - dt * (params.basis.shift() + params.eps_gamma());
        let off_diag = -r;

        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_upper = 0.0;
        for j in 0..n {
            let pivot = diag - off_diag * prev_upper;
            if pivot <= 0.0 {
                return Err(Error::InvalidStep(dt));
            }
            inv_pivot[j] = 1.0 / pivot;
            upper[j] = off_diag / pivot;
            prev_upper = upper[j];
        }

        let scale = params.sigma * params.eps.sqrt() * dt.sqrt();
        let profiles = params
            .forced_modes()
            .map(|(mode, lambda)| {
                points
                    .iter()
                    .map(|x| scale * lambda.sqrt() * (mode as f64 * x).sin())
                    .collect()
            })
            .collect();
        Ok(Self {
            dt,
            c0: params.c0,
            nonlinear: config.nonlinear,
            points,
            off_diag,
            upper,
            inv_pivot,
            profiles,
            rhs: vec![0.0; n],
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Discrete `⟨w, e₁⟩` by the trapezoid rule.
    pub fn amplitude(&self, w: &[f64]) -> f64 {
        let n = self.points.len();
        let s: f64 = w.iter().zip(&self.points).map(|(v, x)| v * x.sin()).sum();
        2.0 * s / (n + 1) as f64
    }

    /// Samples sine coefficients on the grid.
    pub fn grid_values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|x| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * x).sin())
                    .sum()
            })
            .collect()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, w: &mut [f64], rng: &mut R) {
        for (r, v) in self.rhs.iter_mut().zip(w.iter()) {
            *r = if self.nonlinear {
                v - self.dt * self.c0 * v * v * v
            } else {
                *v
            };
        }
        for profile in &self.profiles {
            let xi = standard_normal(rng);
            for (r, p) in self.rhs.iter_mut().zip(profile) {
                *r += p * xi;
            }
        }
        // Forward sweep then back substitution.
        let n = w.len();
        let mut prev = 0.0;
        for j in 0..n {
            let y = (self.rhs[j] - self.off_diag * prev) * self.inv_pivot[j];
            w[j] = y;
            prev = y;
        }
        for j in (0..n - 1).rev() {
            w[j] -= self.upper[j] * w[j + 1];
        }
    }
}

pub(super) fn run(
    mut stepper: FdStepper,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Trajectory> {
    let coeffs = config.initial.field(params)?.into_coeffs();
    let mut w = stepper.grid_values(&coeffs);
    let mut rng = config.seed.rng();
    let steps = config.steps();
    let mut traj = Trajectory::new(SnapshotKind::Grid);
    let record = |traj: &mut Trajectory, k: usize, w: &[f64], a: f64| {
        let snap = config.snapshots.then(|| w.to_vec());
        traj.push(k as f64 * config.dt, a, snap);
    };
    record(&mut traj, 0, &w, stepper.amplitude(&w));
    for k in 1..=steps {
        stepper.step(&mut w, &mut rng);
        if !w.iter().sum::<f64>().is_finite() {
            return Err(Error::Divergence {
                time: k as f64 * config.dt,
            });
        }
        if k % config.stride == 0 || k == steps {
            let a = stepper.amplitude(&w);
            record(&mut traj, k, &w, a);
        }
    }
    Ok(traj)
}
