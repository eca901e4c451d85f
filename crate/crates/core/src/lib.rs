//! Monte Carlo wave-function solver for the quantum linear Boltzmann equation.
//!
//! The master equation describes a test particle of mass `M` coupled to an
//! ideal background gas (mass `m`, temperature `1/β`, density `n_gas`) through
//! elastic collisions with microscopic scattering amplitudes. Because the
//! generator is translation covariant, a pure state that starts as a finite
//! superposition of momentum eigenstates stays one, and the unraveling reduces
//! to a piecewise-deterministic process on the amplitudes and momenta of the
//! superposition. This crate provides:
//!
//! - [`units`]: physical parameters and the dimensionless scalings used
//!   throughout the engine,
//! - [`scattering`]: elastic amplitudes (s-wave hard sphere, exact partial
//!   waves from a radial log-derivative solver, Gaussian Born approximation),
//! - [`rates`]: the total jump rate Γ(U) by importance-sampled Monte Carlo
//!   integration, plus thermally averaged and Brownian-limit rates,
//! - [`engine`]: trajectory evolution (deterministic drift, waiting times,
//!   jump sampling via Metropolis-Hastings, jump application),
//! - [`observables`]: ensemble estimators (coherences, position density
//!   matrix, localization rates, energies, variances, fringe visibility),
//! - [`reference`]: closed-form and quadrature predictions of the limiting
//!   forms, used as oracles by tests and reports.

pub mod engine;
pub mod numerics;
pub mod observables;
pub mod rates;
pub mod reference;
pub mod scattering;
pub mod units;

mod error;

pub use engine::{JumpParams, MhSettings, TrajectoryState};
pub use error::Error;
pub use observables::{ObservableKind, ObservableSeries};
pub use rates::RateTable;
pub use scattering::{PhaseShiftTable, ScatteringModel};
pub use units::GasEnvironment;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
