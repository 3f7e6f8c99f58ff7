use rand::Rng;

use super::standard_normal;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Independent Ornstein–Uhlenbeck components
/// `dη_i = −θ_i η_i dt + D_i dβ_i`, one per forced mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OuState {
    /// 1-based mode numbers of the components.
    pub modes: Vec<usize>,
    pub values: Vec<f64>,
    pub decay: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub clock: f64,
}

impl OuState {
    /// Fast modes of the linear equation in slow time:
    /// `θ_i = α_i/ε`, `D_i = σ √(λ_i/ε)`, started at zero.
    pub fn fast_modes(params: &ModelParams) -> Result<Self> {
        Self::build(params, params.eps)
    }

    /// Same process in the unscaled fast time (`θ_i = α_i`, `D_i = σ √λ_i`).
    pub fn unscaled(params: &ModelParams) -> Result<Self> {
        Self::build(params, 1.0)
    }

    fn build(params: &ModelParams, eps: f64) -> Result<Self> {
        let mut state = Self {
            modes: Vec::new(),
            values: Vec::new(),
            decay: Vec::new(),
            diffusion: Vec::new(),
            clock: 0.0,
        };
        for (mode, lambda) in params.forced_modes() {
            let alpha = params.basis.eigenvalue(mode);
            if alpha <= 0.0 {
                return Err(Error::DegenerateDecay { mode, alpha });
            }
            state.modes.push(mode);
            state.values.push(0.0);
            state.decay.push(alpha / eps);
            state.diffusion.push(params.sigma * (lambda / eps).sqrt());
        }
        Ok(state)
    }

    /// `D²/(2θ)` per component.
    pub fn stationary_variance(&self) -> Vec<f64> {
        self.decay
            .iter()
            .zip(&self.diffusion)
            .map(|(theta, d)| d * d / (2.0 * theta))
            .collect()
    }

    /// Embeds the components into a field of `modes` coefficients.
    pub fn to_coeffs(&self, modes: usize) -> Vec<f64> {
        let mut out = vec![0.0; modes];
        for (m, v) in self.modes.iter().zip(&self.values) {
            out[m - 1] = *v;
        }
        out
    }
}

/// Precomputed exact transition for a fixed step.
#[derive(Debug, Clone)]
pub struct OuStepper {
    factor: Vec<f64>,
    noise_std: Vec<f64>,
    dt: f64,
}

impl OuStepper {
    pub fn new(state: &OuState, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        let mut factor = Vec::with_capacity(state.decay.len());
        let mut noise_std = Vec::with_capacity(state.decay.len());
        for ((&theta, &d), &mode) in state.decay.iter().zip(&state.diffusion).zip(&state.modes) {
            if theta <= 0.0 {
                return Err(Error::DegenerateDecay { mode, alpha: theta });
            }
            factor.push((-theta * dt).exp());
            noise_std.push((d * d / (2.0 * theta) * -(-2.0 * theta * dt).exp_m1()).sqrt());
        }
        Ok(Self {
            factor,
            noise_std,
            dt,
        })
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &mut OuState, rng: &mut R) {
        for ((v, f), s) in state.values.iter_mut().zip(&self.factor).zip(&self.noise_std) {
            *v = *v * f + s * standard_normal(rng);
        }
        state.clock += self.dt;
    }
}

/// Exact Gaussian transition of every component over `dt`.
pub fn ou_exact_step<R: Rng + ?Sized>(state: &OuState, dt: f64, rng: &mut R) -> Result<OuState> {
    let stepper = OuStepper::new(state, dt)?;
    let mut next = state.clone();
    stepper.step(&mut next, rng);
    Ok(next)
}

/// One draw of the fast modes from their stationary law
/// `N(0, σ² λ_i / (2 α_i))`, slow-time scaling.
pub fn ou_stationary_sample<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<OuState> {
    let mut state = OuState::fast_modes(params)?;
    let variances = state.stationary_variance();
    for (v, var) in state.values.iter_mut().zip(variances) {
        *v = var.sqrt() * standard_normal(rng);
    }
    Ok(state)
}

/// Stationary autocovariance `(σ² λ_i / (2 α_i)) e^{−α_i lag}` of mode
/// `mode` of the unscaled linear process.
pub fn ou_autocovariance(mode: usize, lag: f64, params: &ModelParams) -> Result<f64> {
    if lag.is_nan() || lag < 0.0 {
        return Err(Error::InvalidInput(format!("negative lag {lag}")));
    }
    let lambda = params.spectrum.lambda(mode);
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let alpha = params.basis.eigenvalue(mode);
    if alpha <= 0.0 {
        return Err(Error::DegenerateDecay { mode, alpha });
    }
    let variance = params.sigma * params.sigma * lambda / (2.0 * alpha);
    Ok(variance * (-alpha * lag).exp())
}

/// Stationary variance of mode `mode` of the stochastic convolution.
pub fn stochastic_convolution_variance(mode: usize, params: &ModelParams) -> Result<f64> {
    if mode <= params.slow_modes() || mode > params.modes() {
        return Err(Error::NotForced { mode });
    }
    ou_autocovariance(mode, 0.0, params)
}
