use rand::Rng;

use super::covariance::CovarianceModel;
use super::{check_slow, rk4_step, AveragedState, ReducedModel};
use crate::error::{Error, Result};
use crate::fullsim::{SimConfig, SnapshotKind, Trajectory};
use crate::model::ModelParams;
use crate::noise::{standard_normal, SeededRng};
use crate::spectral::SpectralField;

/// Slow-mode deviation `ρ` in slow time.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationState {
    pub rho: SpectralField,
    pub clock: f64,
}

impl DeviationState {
    /// `ρ(0) = 0`.
    pub fn new(slow_modes: usize) -> Self {
        Self {
            rho: SpectralField::zeros(slow_modes),
            clock: 0.0,
        }
    }
}

/// Euler–Maruyama step of `dρ = [A_N ρ + f̄'(u)ρ] dt' + √B(u) dβ̄`.
pub fn deviation_step<R: Rng + ?Sized>(
    state: &DeviationState,
    u: &SpectralField,
    params: &ModelParams,
    dt: f64,
    rng: &mut R,
) -> Result<DeviationState> {
    check_slow(u, params)?;
    check_slow(&state.rho, params)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    let model = ReducedModel::new(params)?;
    let n = model.slow_modes();
    let mut drift = vec![0.0; n * n];
    model.jacobian_into(u.coeffs(), &mut drift);
    for (i, r) in model.slow_rates().iter().enumerate() {
        drift[i * n + i] += r;
    }
    let noise = CovarianceModel::new(&model).eval(u.coeffs())?.sqrt_flat();
    let mut rho = state.rho.coeffs().to_vec();
    let mut xi = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    em_step(&mut rho, &drift, &noise, dt, &mut xi, &mut scratch, rng);
    let clock = state.clock + dt;
    if !rho.iter().all(|x| x.is_finite()) {
        return Err(Error::Divergence { time: clock });
    }
    Ok(DeviationState {
        rho: SpectralField::from_coeffs(rho),
        clock,
    })
}

fn em_step<R: Rng + ?Sized>(
    rho: &mut [f64],
    drift: &[f64],
    noise: &[f64],
    dt: f64,
    xi: &mut [f64],
    scratch: &mut [f64],
    rng: &mut R,
) {
    let n = rho.len();
    let sqrt_dt = dt.sqrt();
    for x in xi.iter_mut() {
        *x = standard_normal(rng);
    }
    for i in 0..n {
        let mut d = 0.0;
        let mut s = 0.0;
        for k in 0..n {
            d += drift[i * n + k] * rho[k];
            s += noise[i * n + k] * xi[k];
        }
        scratch[i] = rho[i] + dt * d + sqrt_dt * s;
    }
    rho.copy_from_slice(scratch);
}

/// Recombines averaged and deviation paths into the fast-time amplitude
/// `a(t) = √ε u₁(εt) + ε ρ₁(εt)`; snapshots hold all slow modes.
pub fn reconstruct(
    averaged: &[AveragedState],
    deviation: &[DeviationState],
    eps: f64,
) -> Result<Trajectory> {
    if averaged.len() != deviation.len() {
        return Err(Error::GridMismatch(format!(
            "{} averaged samples vs {} deviation samples",
            averaged.len(),
            deviation.len()
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParams(format!("eps={eps} outside (0, 1]")));
    }
    let root = eps.sqrt();
    let mut traj = Trajectory::new(SnapshotKind::Modes);
    for (k, (a, d)) in averaged.iter().zip(deviation).enumerate() {
        if (a.clock - d.clock).abs() > 1e-9 * a.clock.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "sample {k}: clocks {} and {}",
                a.clock, d.clock
            )));
        }
        if a.u.len() != d.rho.len() {
            return Err(Error::GridMismatch(format!(
                "sample {k}: {} vs {} slow modes",
                a.u.len(),
                d.rho.len()
            )));
        }
        let field: Vec<f64> = a
            .u
            .coeffs()
            .iter()
            .zip(d.rho.coeffs())
            .map(|(u, r)| root * u + eps * r)
            .collect();
        traj.push(a.clock / eps, field[0], Some(field));
    }
    Ok(traj)
}

/// The deterministic averaged path with the deviation drift matrix and
/// noise square root precomputed at every step, shared by all members of an
/// ensemble.
#[derive(Debug, Clone)]
pub struct AveragedPath {
    eps: f64,
    slow: usize,
    dt: f64,
    steps: usize,
    stride: usize,
    u: Vec<f64>,
    drift: Vec<f64>,
    noise: Vec<f64>,
}

impl AveragedPath {
    /// `config.dt` and `config.horizon` are in fast time; the slow step is
    /// `ε·dt`. The initial slow state is the slow part of the configured
    /// initial field divided by `√ε`.
    pub fn new(params: &ModelParams, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let model = ReducedModel::new(params)?;
        let cov = CovarianceModel::new(&model);
        let n = model.slow_modes();
        let eps = params.eps;
        let dt = eps * config.dt;
        let steps = config.steps();
        let initial = config.initial.field(params)?;
        let mut u: Vec<f64> = initial.coeffs()[..n].iter().map(|c| c / eps.sqrt()).collect();

        let mut path_u = Vec::with_capacity((steps + 1) * n);
        let mut drift = Vec::with_capacity(steps * n * n);
        let mut noise = Vec::with_capacity(steps * n * n);
        let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
        let mut jac = vec![0.0; n * n];
        path_u.extend_from_slice(&u);
        for s in 0..steps {
            model.jacobian_into(&u, &mut jac);
            for (i, r) in model.slow_rates().iter().enumerate() {
                jac[i * n + i] += r;
            }
            drift.extend_from_slice(&jac);
            noise.extend(cov.eval(&u)?.sqrt_flat());
            rk4_step(&model, &mut u, dt, &mut k);
            if !u.iter().all(|x| x.is_finite()) {
                return Err(Error::Divergence {
                    time: (s + 1) as f64 * dt,
                });
            }
            path_u.extend_from_slice(&u);
        }
        Ok(Self {
            eps,
            slow: n,
            dt,
            steps,
            stride: config.stride,
            u: path_u,
            drift,
            noise,
        })
    }

    fn recorded(&self, s: usize) -> bool {
        s.is_multiple_of(self.stride) || s == self.steps
    }

    /// Slow step `dt'`.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Averaged states at the recorded steps.
    pub fn averaged(&self) -> Vec<AveragedState> {
        let n = self.slow;
        (0..=self.steps)
            .filter(|&s| self.recorded(s))
            .map(|s| AveragedState {
                u: SpectralField::from_coeffs(self.u[s * n..(s + 1) * n].to_vec()),
                clock: s as f64 * self.dt,
            })
            .collect()
    }

    /// One deviation path, recorded on the same steps as [`averaged`](Self::averaged).
    pub fn sample_deviation(&self, seed: SeededRng) -> Result<Vec<DeviationState>> {
        let n = self.slow;
        let mut rng = seed.rng();
        let mut rho = vec![0.0; n];
        let mut xi = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut out = Vec::new();
        out.push(DeviationState::new(n));
        for s in 0..self.steps {
            let m = s * n * n..(s + 1) * n * n;
            em_step(
                &mut rho,
                &self.drift[m.clone()],
                &self.noise[m],
                self.dt,
                &mut xi,
                &mut scratch,
                &mut rng,
            );
            let clock = (s + 1) as f64 * self.dt;
            if !rho.iter().all(|x| x.is_finite()) {
                return Err(Error::Divergence { time: clock });
            }
            if self.recorded(s + 1) {
                out.push(DeviationState {
                    rho: SpectralField::from_coeffs(rho.clone()),
                    clock,
                });
            }
        }
        Ok(out)
    }

    /// Reconstructed fast-time trajectory for one deviation sample.
    pub fn trajectory(&self, seed: SeededRng) -> Result<Trajectory> {
        reconstruct(&self.averaged(), &self.sample_deviation(seed)?, self.eps)
    }
}

/// Averaged plus deviation model on the fast-time grid of `config`.
pub fn simulate_averaged_deviation(params: &ModelParams, config: &SimConfig) -> Result<Trajectory> {
    AveragedPath::new(params, config)?.trajectory(config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fullsim::InitialCondition;

    fn scalar(a: f64) -> SpectralField {
        SpectralField::from_coeffs(vec![a])
    }

    #[test]
    fn zero_noise_keeps_deviation_at_zero() {
        let p = ModelParams::mode2_forced(0.1, 1.0, 0.0).unwrap();
        let mut rng = SeededRng::new(1, 0).rng();
        let mut s = DeviationState::new(1);
        for _ in 0..100 {
            s = deviation_step(&s, &scalar(1.0), &p, 0.01, &mut rng).unwrap();
        }
        assert_eq!(s.rho.coeff(1), 0.0);
        assert!((s.clock - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruct_examples() {
        let avg = vec![
            AveragedState {
                u: scalar(1.0),
                clock: 0.0,
            },
            AveragedState {
                u: scalar(2.0),
                clock: 0.5,
            },
        ];
        let dev = vec![
            DeviationState {
                rho: scalar(0.0),
                clock: 0.0,
            },
            DeviationState {
                rho: scalar(3.0),
                clock: 0.5,
            },
        ];
        let t = reconstruct(&avg, &dev, 1.0).unwrap();
        assert_eq!(t.amplitude, vec![1.0, 5.0]);
        assert_eq!(t.times, vec![0.0, 0.5]);
        let t = reconstruct(&avg, &dev, 0.25).unwrap();
        assert_eq!(t.amplitude, vec![0.5, 1.0 + 0.75]);
        assert_eq!(t.times, vec![0.0, 2.0]);
        assert!(matches!(
            reconstruct(&avg, &dev[..1], 0.25),
            Err(Error::GridMismatch(_))
        ));
        let mut shifted = dev.clone();
        shifted[1].clock = 0.6;
        assert!(matches!(
            reconstruct(&avg, &shifted, 0.25),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn path_matches_single_steps() {
        let p = ModelParams::mode2_forced(0.1, 1.0, 1.0).unwrap();
        let cfg = SimConfig {
            dt: 0.05,
            horizon: 2.0,
            stride: 1,
            initial: InitialCondition::Amplitude(0.1f64.sqrt() * 0.8),
            ..SimConfig::default()
        };
        let path = AveragedPath::new(&p, &cfg).unwrap();
        let avg = path.averaged();
        let seed = SeededRng::new(3, 1);
        let devs = path.sample_deviation(seed).unwrap();
        let mut rng = seed.rng();
        let mut s = DeviationState::new(1);
        for k in 0..avg.len() - 1 {
            s = deviation_step(&s, &avg[k].u, &p, path.dt(), &mut rng).unwrap();
            assert!((s.rho.coeff(1) - devs[k + 1].rho.coeff(1)).abs() < 1e-13);
        }
    }
}
