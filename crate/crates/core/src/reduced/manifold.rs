use rand::Rng;

use crate::error::{Error, Result};
use crate::fullsim::{SimConfig, SnapshotKind, Trajectory};
use crate::model::ModelParams;
use crate::noise::standard_normal;
use crate::spectral::SpectralField;

/// Amplitude on the stochastic slow manifold together with the two history
/// convolutions of the mode-2 noise,
/// `h₁ = e^{−α₂t} ⋆ dβ₂` and `h₂ = e^{−α₂t} ⋆ h₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldState {
    pub a: f64,
    pub h1: f64,
    pub h2: f64,
    /// Fast time.
    pub clock: f64,
}

impl ManifoldState {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            h1: 0.0,
            h2: 0.0,
            clock: 0.0,
        }
    }
}

fn check_supported(params: &ModelParams) -> Result<(f64, f64)> {
    let forced: Vec<(usize, f64)> = params.forced_modes().collect();
    let ok = params.slow_modes() == 1
        && params.basis.eigenvalue(1) == 0.0
        && params.modes() >= 3
        && forced.len() <= 1
        && forced.iter().all(|(m, _)| *m == 2);
    if !ok {
        return Err(Error::Unsupported(
            "the slow-manifold model needs one neutral slow mode, at least three modes \
             and noise on sin 2x only"
                .into(),
        ));
    }
    let alpha2 = params.basis.eigenvalue(2);
    if alpha2 <= 0.0 {
        return Err(Error::DegenerateDecay {
            mode: 2,
            alpha: alpha2,
        });
    }
    Ok((params.spectrum.lambda(2), alpha2))
}

/// Fixed-step integrator of
///
/// ```text
/// da = [ε(γ − c₀σ²λ₂/4) a − (3/4) c₀ a³] dt + c₀ ε σ² λ₂ a / (2√6) dβ̃
/// ```
///
/// (Euler–Maruyama) with exact Gaussian updates of the history convolutions.
#[derive(Debug, Clone)]
pub struct ManifoldStepper {
    dt: f64,
    linear: f64,
    cubic: f64,
    noise: f64,
    decay: f64,
    // Cholesky factor of the covariance of the history increments.
    chol: [f64; 3],
}

impl ManifoldStepper {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        let (lambda2, alpha2) = check_supported(params)?;
        let s2 = params.sigma * params.sigma * lambda2;
        let c0 = params.c0;
        let b = 2.0 * alpha2;
        let x = b * dt;
        let e = (-x).exp();
        // ∫₀^dt u^k e^{−bu} du for k = 0, 1, 2.
        let m0 = -(-x).exp_m1() / b;
        let m1 = (1.0 - e * (1.0 + x)) / (b * b);
        let m2 = (2.0 - e * (x * x + 2.0 * x + 2.0)) / (b * b * b);
        let l11 = m0.sqrt();
        let l21 = m1 / l11;
        let l22 = (m2 - l21 * l21).max(0.0).sqrt();
        Ok(Self {
            dt,
            linear: params.eps * (params.gamma - c0 * s2 / 4.0),
            cubic: 0.75 * c0,
            noise: c0 * params.eps * s2 / (2.0 * 6f64.sqrt()),
            decay: (-alpha2 * dt).exp(),
            chol: [l11, l21, l22],
        })
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &mut ManifoldState, rng: &mut R) {
        let a = state.a;
        let drift = self.linear * a - self.cubic * a * a * a;
        state.a = a + self.dt * drift + self.noise * a * self.dt.sqrt() * standard_normal(rng);

        let z1 = standard_normal(rng);
        let z2 = standard_normal(rng);
        let [l11, l21, l22] = self.chol;
        let h1 = state.h1;
        state.h2 = self.decay * state.h2 + self.dt * self.decay * h1 + l21 * z1 + l22 * z2;
        state.h1 = self.decay * h1 + l11 * z1;
        state.clock += self.dt;
    }
}

/// One step of the slow-manifold model.
pub fn manifold_step<R: Rng + ?Sized>(
    state: &ManifoldState,
    params: &ModelParams,
    dt: f64,
    rng: &mut R,
) -> Result<ManifoldState> {
    let stepper = ManifoldStepper::new(params, dt)?;
    let mut next = *state;
    stepper.step(&mut next, rng);
    if !next.a.is_finite() {
        return Err(Error::Divergence { time: next.clock });
    }
    Ok(next)
}

/// Field on the manifold:
/// `a e₁ + (c₀a³/(4α₃)) e₃ + √ε σ√λ₂ h₁ e₂ + ε^{3/2} γ σ√λ₂ h₂ e₂`.
pub fn manifold_shape(state: &ManifoldState, params: &ModelParams) -> Result<SpectralField> {
    let (lambda2, _) = check_supported(params)?;
    let eps = params.eps;
    let s = params.sigma * lambda2.sqrt();
    let mut c = vec![0.0; params.modes()];
    c[0] = state.a;
    c[1] = eps.sqrt() * s * state.h1 + eps.powf(1.5) * params.gamma * s * state.h2;
    c[2] = params.c0 * state.a.powi(3) / (4.0 * params.basis.eigenvalue(3));
    Ok(SpectralField::from_coeffs(c))
}

/// Integrates the manifold model in fast time on the grid of `config`.
pub fn simulate_manifold(params: &ModelParams, config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let stepper = ManifoldStepper::new(params, config.dt)?;
    let mut state = ManifoldState::new(config.initial.amplitude(params));
    let mut rng = config.seed.rng();
    let steps = config.steps();
    let mut traj = Trajectory::new(SnapshotKind::Modes);
    let record = |traj: &mut Trajectory, k: usize, s: &ManifoldState| -> Result<()> {
        let snap = if config.snapshots {
            Some(manifold_shape(s, params)?.into_coeffs())
        } else {
            None
        };
        traj.push(k as f64 * config.dt, s.a, snap);
        Ok(())
    };
    record(&mut traj, 0, &state)?;
    for k in 1..=steps {
        stepper.step(&mut state, &mut rng);
        if !state.a.is_finite() {
            return Err(Error::Divergence {
                time: k as f64 * config.dt,
            });
        }
        if k % config.stride == 0 || k == steps {
            record(&mut traj, k, &state)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SeededRng;

    #[test]
    fn noiseless_step_is_landau_flow() {
        let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
        let mut rng = SeededRng::new(0, 0).rng();
        let s = manifold_step(&ManifoldState::new(0.2), &p, 0.01, &mut rng).unwrap();
        let expected = 0.2 + 0.01 * (0.1 * 0.2 - 0.75 * 0.008);
        assert!((s.a - expected).abs() < 1e-15);
    }

    #[test]
    fn shape_examples() {
        let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
        let zero = manifold_shape(&ManifoldState::new(0.0), &p).unwrap();
        assert!(zero.coeffs().iter().all(|c| *c == 0.0));
        let one = manifold_shape(&ManifoldState::new(1.0), &p).unwrap();
        assert_eq!(one.coeff(1), 1.0);
        assert_eq!(one.coeff(3), 1.0 / 32.0);
        assert_eq!(one.coeff(2), 0.0);
    }

    #[test]
    fn history_variances_match_stationary_values() {
        // Stationary: Var h₁ = 1/6, Var h₂ = 1/(4·27) for decay 3.
        let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
        let stepper = ManifoldStepper::new(&p, 0.05).unwrap();
        let mut rng = SeededRng::new(9, 0).rng();
        let mut s = ManifoldState::new(0.0);
        for _ in 0..200 {
            stepper.step(&mut s, &mut rng);
        }
        let n = 200_000;
        let (mut v1, mut v2) = (0.0, 0.0);
        for _ in 0..n {
            stepper.step(&mut s, &mut rng);
            v1 += s.h1 * s.h1;
            v2 += s.h2 * s.h2;
        }
        let (v1, v2) = (v1 / n as f64, v2 / n as f64);
        assert!((v1 / (1.0 / 6.0) - 1.0).abs() < 0.05, "{v1}");
        assert!((v2 / (1.0 / 108.0) - 1.0).abs() < 0.08, "{v2}");
    }

    #[test]
    fn unsupported_configurations() {
        let p = ModelParams::mode2_forced_with_modes(0.1, 1.0, 1.0, 2).unwrap();
        assert!(matches!(ManifoldStepper::new(&p, 0.01), Err(Error::Unsupported(_))));
    }
}
