//! Simulation and macroscopic reduction of cubic stochastic
//! reaction-diffusion equations on `(0, π)` with Dirichlet boundaries.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: sine eigenbasis, slow/fast projections, the high-pass
//!   operator and cubic mode coupling.
//! * [`noise`]: Q-Wiener increments, exact Ornstein–Uhlenbeck sampling and
//!   Gaussian moment evaluation.
//! * [`fullsim`]: time integration of the full SPDE and of the artificially
//!   separated slow/fast system.
//! * [`reduced`]: averaged equation, deviation covariance and SDE, and the
//!   stochastic slow-manifold model.
//! * [`stats`]: reproducible Monte Carlo ensembles, stationary statistics,
//!   least-squares fits and model comparison.
//! * [`verify`]: the analytic-oracle invariant suite.

pub mod error;
pub mod fullsim;
pub mod model;
pub mod noise;
pub mod reduced;
pub mod spectral;
pub mod stats;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
pub use fullsim::{Backend, InitialCondition, SimConfig, Trajectory};
pub use model::ModelParams;
pub use noise::{NoiseSpectrum, SeededRng};
pub use spectral::{Basis, SlowCutoff, SpectralField};
pub use stats::{EnsembleStats, FitResult, Observable};
