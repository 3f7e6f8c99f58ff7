//! Model parameters shared by every simulator and reduced model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpectrum;
use crate::spectral::{Basis, SlowCutoff};

/// Parameters of
///
/// ```text
/// ∂t w = (∂xx + shift) w + εγ w − c₀ w³ + σ √ε ∂t W,   w(0) = w(π) = 0
/// ```
///
/// in fast time `t`. The reduced models live in slow time `t' = ε t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub eps: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub c0: f64,
    pub basis: Basis,
    pub cutoff: SlowCutoff,
    pub spectrum: NoiseSpectrum,
}

impl ModelParams {
    pub fn new(
        eps: f64,
        gamma: f64,
        sigma: f64,
        c0: f64,
        basis: Basis,
        cutoff: SlowCutoff,
        spectrum: NoiseSpectrum,
    ) -> Result<Self> {
        let params = Self {
            eps,
            gamma,
            sigma,
            c0,
            basis,
            cutoff,
            spectrum,
        };
        params.validate()?;
        Ok(params)
    }

    /// Noise on `sin 2x` only, `A = ∂xx + 1`, one slow mode, `c₀ = 1`,
    /// truncated at eight modes.
    pub fn mode2_forced(eps: f64, gamma: f64, sigma: f64) -> Result<Self> {
        Self::mode2_forced_with_modes(eps, gamma, sigma, 8)
    }

    pub fn mode2_forced_with_modes(eps: f64, gamma: f64, sigma: f64, modes: usize) -> Result<Self> {
        let basis = Basis::new(modes, 1.0)?;
        let cutoff = SlowCutoff::new(1, &basis)?;
        let spectrum = NoiseSpectrum::single(modes, 2, 1.0);
        Self::new(eps, gamma, sigma, 1.0, basis, cutoff, spectrum)
    }

    /// Same as [`mode2_forced`](Self::mode2_forced) but parametrised by the
    /// products `εγ` and `εσ²` that the full equation actually depends on.
    pub fn mode2_forced_scaled(eps: f64, eps_gamma: f64, eps_sigma2: f64) -> Result<Self> {
        if eps_sigma2 < 0.0 {
            return Err(Error::InvalidParams(format!("eps*sigma^2={eps_sigma2} < 0")));
        }
        Self::mode2_forced(eps, eps_gamma / eps, (eps_sigma2 / eps).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidParams(format!("eps={} outside (0, 1]", self.eps)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma={} not finite", self.gamma)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma={} must be >= 0", self.sigma)));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidParams(format!("c0={} must be > 0", self.c0)));
        }
        let m = self.basis.total_modes();
        SlowCutoff::new(self.cutoff.get(), &self.basis)?;
        if self.spectrum.len() != m {
            return Err(Error::InvalidParams(format!(
                "noise spectrum has {} entries, basis has {m} modes",
                self.spectrum.len()
            )));
        }
        self.spectrum.check_cutoff(self.cutoff)?;
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.basis.total_modes()
    }

    pub fn slow_modes(&self) -> usize {
        self.cutoff.get()
    }

    pub fn eps_gamma(&self) -> f64 {
        self.eps * self.gamma
    }

    pub fn eps_sigma2(&self) -> f64 {
        self.eps * self.sigma * self.sigma
    }

    /// Forced modes as `(1-based mode, λ)` pairs.
    pub fn forced_modes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.spectrum.forced()
    }

    /// Deterministic equilibrium amplitude of the fundamental in fast
    /// time, `√(4εγ/3)`, or zero below the bifurcation.
    pub fn deterministic_amplitude(&self) -> f64 {
        (4.0 * self.eps_gamma() / (3.0 * self.c0)).max(0.0).sqrt()
    }

    /// Equilibrium of the averaged Landau equation in slow time,
    /// `√(4(γ − σ²/4)/3)` for the single-mode-forced example.
    pub fn landau_equilibrium(&self) -> f64 {
        let lambda2 = self.spectrum.lambda(2);
        let mu = self.gamma - self.c0 * self.sigma * self.sigma * lambda2 / 4.0;
        (4.0 * mu / (3.0 * self.c0)).max(0.0).sqrt()
    }
}
