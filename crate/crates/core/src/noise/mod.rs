//! Diagonal Q-Wiener noise, Ornstein–Uhlenbeck processes and Gaussian
//! moments.

mod isserlis;
mod ou;

pub use isserlis::{isserlis_moment, lagged_moment_series};
pub use ou::{
    ou_autocovariance, ou_exact_step, ou_stationary_sample, stochastic_convolution_variance,
    OuState, OuStepper,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SlowCutoff, SpectralField};

/// Random generator used for every stream.
pub type StreamRng = ChaCha8Rng;

/// Eigenvalues `λ_i` of the noise covariance `Q` in the sine basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseSpectrum {
    lambdas: Vec<f64>,
}

impl NoiseSpectrum {
    pub fn new(lambdas: Vec<f64>, cutoff: SlowCutoff) -> Result<Self> {
        let spectrum = Self { lambdas };
        spectrum.check_cutoff(cutoff)?;
        Ok(spectrum)
    }

    /// `λ_mode = lambda`, all other entries zero.
    pub fn single(modes: usize, mode: usize, lambda: f64) -> Self {
        let mut lambdas = vec![0.0; modes];
        lambdas[mode - 1] = lambda;
        Self { lambdas }
    }

    pub(crate) fn check_cutoff(&self, cutoff: SlowCutoff) -> Result<()> {
        if let Some((k, l)) = self
            .lambdas
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l >= 0.0))
        {
            return Err(Error::InvalidParams(format!(
                "lambda_{} = {l} must be finite and >= 0",
                k + 1
            )));
        }
        if let Some(k) = self.lambdas.iter().take(cutoff.get()).position(|l| *l != 0.0) {
            return Err(Error::InvalidParams(format!(
                "slow mode {} is forced; noise must act on fast modes only",
                k + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `λ` of the 1-based `mode`, zero beyond the truncation.
    pub fn lambda(&self, mode: usize) -> f64 {
        self.lambdas.get(mode - 1).copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// `(1-based mode, λ)` for every mode with `λ > 0`.
    pub fn forced(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lambdas
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > 0.0)
            .map(|(k, l)| (k + 1, *l))
    }
}

/// Independent random processes within one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Process {
    /// Space-time noise of the full or coupled SPDE.
    Spde = 0,
    /// Wiener process of the deviation equation.
    Deviation = 1,
    /// Effective noise of the slow-manifold amplitude equation.
    Manifold = 2,
    /// Draws of initial states from a stationary law.
    Initial = 3,
}

const PROCESSES: u64 = 8;

/// A `(seed, stream)` pair naming one reproducible ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededRng {
    pub seed: u64,
    pub stream: u64,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream of `process` in trajectory `index` of an ensemble.
    pub fn for_trajectory(seed: u64, index: u64, process: Process) -> Self {
        Self::new(seed, index * PROCESSES + process as u64)
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One increment of `W(t) = Σ √λ_i β_i(t) e_i` over a step `dt`.
pub fn wiener_increment<R: Rng + ?Sized>(
    spectrum: &NoiseSpectrum,
    dt: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    let sqrt_dt = dt.sqrt();
    let coeffs = spectrum
        .lambdas
        .iter()
        .map(|&l| {
            if l > 0.0 {
                l.sqrt() * sqrt_dt * standard_normal(rng)
            } else {
                0.0
            }
        })
        .collect();
    Ok(SpectralField::from_coeffs(coeffs))
}
