use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::noise::standard_normal;
use crate::spectral::{an_rate, CubicBackend, CubicNonlinearity};

/// Semi-implicit Euler–Maruyama step for a diagonal linear part:
///
/// `w_i ← (w_i + dt·N_i(w) + noise_i) / (1 − dt·L_i)`.
#[derive(Debug, Clone)]
pub struct SpectralStepper {
    dt: f64,
    c0: f64,
    inv_denominator: Vec<f64>,
    // (0-based index, σ √ε √λ_i √dt)
    noise: Vec<(usize, f64)>,
    cubic: Option<CubicNonlinearity>,
    cubic_out: Vec<f64>,
    scratch: Vec<f64>,
}

impl SpectralStepper {
    /// Linear rates `−α_i + εγ` on every mode.
    pub fn full(params: &ModelParams, dt: f64, nonlinear: bool) -> Result<Self> {
        let rates = (1..=params.modes())
            .map(|i| -params.basis.eigenvalue(i) + params.eps_gamma())
            .collect();
        Self::with_rates(params, dt, rates, nonlinear, CubicBackend::Collocation)
    }

    /// Slow modes relax at `ε` times their natural rate.
    pub fn coupled(params: &ModelParams, dt: f64, nonlinear: bool) -> Result<Self> {
        let rates = (1..=params.modes())
            .map(|i| an_rate(&params.basis, params.cutoff, params.eps, i) + params.eps_gamma())
            .collect();
        Self::with_rates(params, dt, rates, nonlinear, CubicBackend::Collocation)
    }

    pub fn with_rates(
        params: &ModelParams,
        dt: f64,
        rates: Vec<f64>,
        nonlinear: bool,
        backend: CubicBackend,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        let m = params.modes();
        if rates.len() != m {
            return Err(Error::InvalidInput(format!(
                "{} linear rates for {m} modes",
                rates.len()
            )));
        }
        let mut inv_denominator = Vec::with_capacity(m);
        for rate in rates {
            let denom = 1.0 - dt * rate;
            if denom <= 0.0 {
                // Implicit Euler on a growing mode needs dt·rate < 1.
                return Err(Error::InvalidStep(dt));
            }
            inv_denominator.push(1.0 / denom);
        }
        let scale = params.sigma * params.eps.sqrt() * dt.sqrt();
        let noise = params
            .forced_modes()
            .map(|(mode, lambda)| (mode - 1, scale * lambda.sqrt()))
            .collect();
        Ok(Self {
            dt,
            c0: params.c0,
            inv_denominator,
            noise,
            cubic: nonlinear.then(|| CubicNonlinearity::new(m, backend)),
            cubic_out: vec![0.0; m],
            scratch: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step<R: Rng + ?Sized>(&mut self, w: &mut [f64], rng: &mut R) {
        if let Some(cubic) = &self.cubic {
            cubic.eval_into(w, self.c0, &mut self.cubic_out, &mut self.scratch);
            for (c, n) in w.iter_mut().zip(&self.cubic_out) {
                *c += self.dt * n;
            }
        }
        for &(i, amp) in &self.noise {
            w[i] += amp * standard_normal(rng);
        }
        for (c, f) in w.iter_mut().zip(&self.inv_denominator) {
            *c *= f;
        }
    }
}
