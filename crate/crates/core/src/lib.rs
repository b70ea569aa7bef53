//! Deterministic solver and verification suite for the hard-sphere Boltzmann
//! equation with a small external force on a periodic box.
//!
//! The crate is organized around the pieces of the problem:
//!
//! * [`velocity`] — truncated velocity lattice, Maxwellian tables, collision
//!   frequency, and the five-dimensional collision-invariant basis.
//! * [`collision`] — the bilinear collision operator `Q`, its linearization
//!   `L = nu - K`, the macroscopic projector, and coercivity estimates.
//! * [`spectral`] — spatial Fourier transforms, Littlewood-Paley blocks, and
//!   the Besov/Sobolev/energy norm evaluators.
//! * [`semigroup`] — per-mode propagators for `B = -v.grad_x - L` and decay
//!   rate verification.
//! * [`forcing`] — closed-form external force fields and their norms.
//! * [`solver`] — IMEX/Strang time integration of the perturbation equation.
//! * [`period`] — the period-map (Serrin) iteration for time-periodic states.
//! * [`stability`] — two-solution difference decay experiments.
//! * [`config`], [`report`], [`cache`] — run configuration, artifacts, and
//!   binary table caches behind the CLI.

pub mod cache;
pub mod collision;
pub mod config;
pub mod derivatives;
pub mod field;
pub mod fit;
pub mod forcing;
pub mod period;
pub mod report;
pub mod rng;
pub mod semigroup;
pub mod solver;
pub mod spectral;
pub mod stability;
pub mod velocity;

pub use velocity::VelocityGrid;

/// Errors shared across the solver modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
