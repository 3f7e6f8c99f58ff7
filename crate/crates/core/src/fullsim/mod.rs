//! Time integration of the full SPDE and of the separated slow/fast system.
//!
//! Both systems are integrated in fast time with a semi-implicit
//! Euler–Maruyama scheme: the linear part is implicit, the cubic term
//! explicit and the additive noise enters as a Wiener increment.

mod fd;
mod spectral;

pub use fd::FdStepper;
pub use spectral::SpectralStepper;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::noise::SeededRng;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Galerkin truncation in the sine basis with dealiased collocation.
    Spectral,
    /// Central differences on a uniform grid of interior points.
    FiniteDifference,
}

/// Initial field of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    Zero,
    /// `a · e₁` with `a` in fast-time field units.
    Amplitude(f64),
    /// `√(4εγ/3) · e₁`, the noise-free pitchfork branch.
    DeterministicEquilibrium,
    /// `√ε A* · e₁` with `A*` the equilibrium of the averaged Landau equation.
    LandauEquilibrium,
    /// Explicit sine coefficients.
    Field(Vec<f64>),
}

impl InitialCondition {
    /// Amplitude of the fundamental in fast-time field units.
    pub fn amplitude(&self, params: &ModelParams) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Amplitude(a) => *a,
            Self::DeterministicEquilibrium => params.deterministic_amplitude(),
            Self::LandauEquilibrium => params.eps.sqrt() * params.landau_equilibrium(),
            Self::Field(c) => c.first().copied().unwrap_or(0.0),
        }
    }

    pub fn field(&self, params: &ModelParams) -> Result<SpectralField> {
        let m = params.modes();
        match self {
            Self::Field(c) => {
                if c.len() != m {
                    return Err(Error::InvalidInput(format!(
                        "initial field has {} coefficients, expected {m}",
                        c.len()
                    )));
                }
                Ok(SpectralField::from_coeffs(c.clone()))
            }
            other => Ok(SpectralField::mode(m, 1, other.amplitude(params))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Fast-time step.
    pub dt: f64,
    /// Fast-time horizon.
    pub horizon: f64,
    pub backend: Backend,
    /// Interior grid points of the finite-difference backend.
    pub grid_points: usize,
    /// Record every `stride` steps.
    pub stride: usize,
    /// Keep the full state at every recorded time.
    pub snapshots: bool,
    /// When false the cubic term is switched off (linear test problem).
    pub nonlinear: bool,
    pub initial: InitialCondition,
    pub seed: SeededRng,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 10.0,
            backend: Backend::Spectral,
            grid_points: 15,
            stride: 10,
            snapshots: false,
            nonlinear: true,
            initial: InitialCondition::DeterministicEquilibrium,
            seed: SeededRng::new(0, 0),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidStep(self.dt));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon={}", self.horizon)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParams("stride must be >= 1".into()));
        }
        if self.backend == Backend::FiniteDifference && self.grid_points < 3 {
            return Err(Error::InvalidParams("need at least 3 grid points".into()));
        }
        Ok(())
    }

    /// Number of time steps covering the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotKind {
    /// Sine coefficients `c_1..c_M`.
    Modes,
    /// Values at interior grid points.
    Grid,
}

/// Recorded amplitude of the fundamental mode, with optional snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub snapshot_kind: SnapshotKind,
}

impl Trajectory {
    pub fn new(snapshot_kind: SnapshotKind) -> Self {
        Self {
            times: Vec::new(),
            amplitude: Vec::new(),
            snapshots: Vec::new(),
            snapshot_kind,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, a: f64, snapshot: Option<Vec<f64>>) {
        self.times.push(t);
        self.amplitude.push(a);
        if let Some(s) = snapshot {
            self.snapshots.push(s);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude.len() != self.times.len() {
            return Err(Error::InvalidInput("amplitude length differs from times".into()));
        }
        if !self.snapshots.is_empty() && self.snapshots.len() != self.times.len() {
            return Err(Error::InvalidInput("snapshot count differs from times".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// `⟨w, e₁⟩`, the amplitude of the fundamental mode.
pub fn slow_amplitude(w: &SpectralField) -> f64 {
    w.coeff(1)
}

/// One semi-implicit Euler–Maruyama step of the full spectral system.
pub fn step_full<R: rand::Rng + ?Sized>(
    state: &SpectralField,
    params: &ModelParams,
    dt: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    if !state.is_finite() {
        return Err(Error::Divergence { time: 0.0 });
    }
    let mut stepper = SpectralStepper::full(params, dt, true)?;
    let mut next = state.clone();
    stepper.step(next.coeffs_mut(), rng);
    if !next.is_finite() {
        return Err(Error::Divergence { time: dt });
    }
    Ok(next)
}

/// Integrates the full SPDE over `[0, horizon]`.
pub fn simulate_full(params: &ModelParams, config: &SimConfig) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    match config.backend {
        Backend::Spectral => {
            let stepper = SpectralStepper::full(params, config.dt, config.nonlinear)?;
            run_spectral(stepper, params, config)
        }
        Backend::FiniteDifference => {
            let stepper = FdStepper::new(params, config)?;
            fd::run(stepper, params, config)
        }
    }
}

/// Integrates the separated system in which `A_N` slows the slow modes by
/// `ε` and the noise acts on fast modes only.
pub fn simulate_coupled(params: &ModelParams, config: &SimConfig) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    if config.backend != Backend::Spectral {
        return Err(Error::Unsupported(
            "the separated slow/fast system needs the spectral backend".into(),
        ));
    }
    let stepper = SpectralStepper::coupled(params, config.dt, config.nonlinear)?;
    run_spectral(stepper, params, config)
}

fn run_spectral(
    mut stepper: SpectralStepper,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Trajectory> {
    let mut w = config.initial.field(params)?.into_coeffs();
    let mut rng = config.seed.rng();
    let steps = config.steps();
    let mut traj = Trajectory::new(SnapshotKind::Modes);
    let record = |traj: &mut Trajectory, k: usize, w: &[f64]| {
        let snap = config.snapshots.then(|| w.to_vec());
        traj.push(k as f64 * config.dt, w[0], snap);
    };
    record(&mut traj, 0, &w);
    for k in 1..=steps {
        stepper.step(&mut w, &mut rng);
        if !w.iter().sum::<f64>().is_finite() {
            return Err(Error::Divergence {
                time: k as f64 * config.dt,
            });
        }
        if k % config.stride == 0 || k == steps {
            record(&mut traj, k, &w);
        }
    }
    Ok(traj)
}
