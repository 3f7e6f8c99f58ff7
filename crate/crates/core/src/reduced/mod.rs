//! Reduced models for the slow modes: the averaged ODE, the Gaussian
//! deviation SDE with its covariance `B(u_N)`, the reconstruction of the
//! fundamental amplitude, and the stochastic slow-manifold model.
//!
//! Averaged and deviation equations live in slow time `t' = εt`; the
//! reconstruction and the manifold model return fast-time trajectories.

mod covariance;
mod deviation;
mod manifold;

pub use covariance::{covariance_b_closed_example, covariance_b_quadrature, CovarianceMatrix};
pub use deviation::{
    deviation_step, reconstruct, simulate_averaged_deviation, AveragedPath, DeviationState,
};
pub use manifold::{manifold_shape, manifold_step, simulate_manifold, ManifoldState, ManifoldStepper};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{sine_product_integral, SpectralField};

/// A forced fast mode as seen by the averaged equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FastMode {
    pub mode: usize,
    pub alpha: f64,
    /// Stationary `E η²`.
    pub variance: f64,
}

/// Precomputed coupling data shared by the averaged drift, its Jacobian and
/// the deviation covariance.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    slow: usize,
    gamma: f64,
    c0: f64,
    /// `−α_i` for the slow modes: the slow-time action of `A_N`.
    slow_rates: Vec<f64>,
    fast: Vec<FastMode>,
    /// `⟨e_i e_j e_k e_l⟩` over slow indices, row-major `N⁴`.
    tensor: Vec<f64>,
    /// `Σ_f E η_f² ⟨e_i e_k e_f e_f⟩`, row-major `N²`.
    noise_matrix: Vec<f64>,
}

impl ReducedModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let n = params.slow_modes();
        let variances = eta_mean_square(params)?;
        let fast: Vec<FastMode> = params
            .forced_modes()
            .map(|(mode, _)| FastMode {
                mode,
                alpha: params.basis.eigenvalue(mode),
                variance: variances[mode - 1],
            })
            .collect();
        let mut tensor = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        tensor[((i * n + j) * n + k) * n + l] =
                            sine_product_integral(&[i + 1, j + 1, k + 1, l + 1]);
                    }
                }
            }
        }
        let mut noise_matrix = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                noise_matrix[i * n + k] = fast
                    .iter()
                    .map(|f| f.variance * sine_product_integral(&[i + 1, k + 1, f.mode, f.mode]))
                    .sum();
            }
        }
        Ok(Self {
            slow: n,
            gamma: params.gamma,
            c0: params.c0,
            slow_rates: (1..=n).map(|i| -params.basis.eigenvalue(i)).collect(),
            fast,
            tensor,
            noise_matrix,
        })
    }

    pub fn slow_modes(&self) -> usize {
        self.slow
    }

    pub fn slow_rates(&self) -> &[f64] {
        &self.slow_rates
    }

    pub(crate) fn fast_modes(&self) -> &[FastMode] {
        &self.fast
    }

    pub(crate) fn c0(&self) -> f64 {
        self.c0
    }

    fn t(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.slow;
        self.tensor[((i * n + j) * n + k) * n + l]
    }

    /// `γu − c₀ P_N(u³ + 3u Σ_f Eη_f² e_f²)` written into `out`.
    pub fn drift_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.slow;
        for i in 0..n {
            let mut cubic = 0.0;
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        cubic += self.t(i, j, k, l) * u[j] * u[k] * u[l];
                    }
                }
            }
            let noise: f64 = (0..n).map(|k| self.noise_matrix[i * n + k] * u[k]).sum();
            out[i] = self.gamma * u[i] - self.c0 * (cubic + 3.0 * noise);
        }
    }

    /// Right side of the averaged ODE in slow time: `A_N u + f̄(u)`.
    pub fn vector_field_into(&self, u: &[f64], out: &mut [f64]) {
        self.drift_into(u, out);
        for ((o, r), x) in out.iter_mut().zip(&self.slow_rates).zip(u) {
            *o += r * x;
        }
    }

    /// Jacobian of [`drift_into`](Self::drift_into), row-major `N²`.
    pub fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.slow;
        for i in 0..n {
            for k in 0..n {
                let mut quad = 0.0;
                for j in 0..n {
                    for l in 0..n {
                        quad += self.t(i, k, j, l) * u[j] * u[l];
                    }
                }
                let diag = if i == k { self.gamma } else { 0.0 };
                out[i * n + k] = diag - 3.0 * self.c0 * (quad + self.noise_matrix[i * n + k]);
            }
        }
    }
}

/// `E η̄_i² = σ² λ_i / (2 α_i)` per mode (zero on unforced modes).
pub fn eta_mean_square(params: &ModelParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; params.modes()];
    for (mode, lambda) in params.forced_modes() {
        let alpha = params.basis.eigenvalue(mode);
        if alpha <= 0.0 {
            return Err(Error::DegenerateDecay { mode, alpha });
        }
        out[mode - 1] = params.sigma * params.sigma * lambda / (2.0 * alpha);
    }
    Ok(out)
}

fn check_slow(u: &SpectralField, params: &ModelParams) -> Result<()> {
    if u.len() != params.slow_modes() {
        return Err(Error::InvalidInput(format!(
            "slow state has {} coefficients, expected {}",
            u.len(),
            params.slow_modes()
        )));
    }
    Ok(())
}

/// Averaged nonlinearity `γu − c₀ P_N(u³ + 3u Eη̄²)` on the slow modes.
///
/// The slow-time diffusion `A_N u` is not included; see [`integrate_averaged`].
pub fn averaged_drift(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    check_slow(u, params)?;
    let model = ReducedModel::new(params)?;
    let mut out = vec![0.0; u.len()];
    model.drift_into(u.coeffs(), &mut out);
    Ok(SpectralField::from_coeffs(out))
}

/// Jacobian of [`averaged_drift`] as rows of an `N × N` matrix.
pub fn averaged_derivative_drift(u: &SpectralField, params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    check_slow(u, params)?;
    let model = ReducedModel::new(params)?;
    let n = u.len();
    let mut flat = vec![0.0; n * n];
    model.jacobian_into(u.coeffs(), &mut flat);
    Ok(flat.chunks(n).map(<[f64]>::to_vec).collect())
}

/// Slow-mode state of the averaged equation.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedState {
    pub u: SpectralField,
    /// Slow time.
    pub clock: f64,
}

/// Classical RK4 step of the averaged ODE.
pub(crate) fn rk4_step(model: &ReducedModel, u: &mut [f64], dt: f64, k: &mut [Vec<f64>; 5]) {
    let n = u.len();
    let [k1, k2, k3, k4, tmp] = k;
    model.vector_field_into(u, k1);
    for i in 0..n {
        tmp[i] = u[i] + 0.5 * dt * k1[i];
    }
    model.vector_field_into(tmp, k2);
    for i in 0..n {
        tmp[i] = u[i] + 0.5 * dt * k2[i];
    }
    model.vector_field_into(tmp, k3);
    for i in 0..n {
        tmp[i] = u[i] + dt * k3[i];
    }
    model.vector_field_into(tmp, k4);
    for i in 0..n {
        u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates `du/dt' = A_N u + f̄(u)` with RK4 and returns every step,
/// starting with `u0` at `t' = 0`.
pub fn integrate_averaged(
    u0: &SpectralField,
    params: &ModelParams,
    horizon: f64,
    dt: f64,
) -> Result<Vec<AveragedState>> {
    check_slow(u0, params)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParams(format!("horizon={horizon}")));
    }
    let model = ReducedModel::new(params)?;
    let n = u0.len();
    let steps = (horizon / dt).round() as usize;
    let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut u = u0.coeffs().to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(AveragedState {
        u: u0.clone(),
        clock: 0.0,
    });
    for s in 1..=steps {
        rk4_step(&model, &mut u, dt, &mut k);
        let clock = s as f64 * dt;
        if !u.iter().all(|x| x.is_finite()) {
            return Err(Error::Divergence { time: clock });
        }
        out.push(AveragedState {
            u: SpectralField::from_coeffs(u.clone()),
            clock,
        });
    }
    Ok(out)
}
