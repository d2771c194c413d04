//! Packing of identical spheres under non-overlapping constraints.
//!
//! Starting from an arbitrary (typically overlapping) set of sphere centers,
//! the solvers in this crate search for a nearby packed configuration by
//! minimizing a global quadratic attraction potential subject to pairwise
//! non-overlapping constraints, in either smooth (`d^2 - |x_k - x_l|^2`) or
//! non-smooth (`d - |x_k - x_l|`) form.
//!
//! Four iterative methods are provided:
//! - [`solvers::Method::Aha`]: the classical Arrow-Hurwicz saddle-point
//!   iteration (kept as a baseline; it orbits rather than converges on
//!   packing problems),
//! - [`solvers::Method::Daha`]: a damped, second-order-in-time Arrow-Hurwicz
//!   variant with damping `c` and cross-term weight `gamma`,
//! - [`solvers::Method::Nap`]: a nested (linearly constrained Lagrangian)
//!   scheme iterating on positions,
//! - [`solvers::Method::Nav`]: a nested scheme iterating on velocities with
//!   an Euler position update.
//!
//! The [`stability`] module analyzes the associated two-sphere ODE systems in
//! one dimension (Jacobians, eigenvalue classification, sufficient stability
//! conditions, nonlinear integration), and [`harness`] runs seeded multi-seed
//! benchmarks producing the statistical indicators `T`, `sigma^2` and `A`.

pub mod constraints;
pub mod geom;
pub mod harness;
pub mod potential;
pub mod solvers;
pub mod stability;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid pair ({k}, {l}) for N={n}")]
    InvalidPair { k: usize, l: usize, n: usize },
    #[error("configuration shape mismatch: expected {expected} coordinates, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("degenerate norm: |X_old| <= {floor}")]
    DegenerateNorm { floor: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical divergence: non-finite state at step {step}")]
    Diverged { step: usize },
    #[error("all seeds diverged or exhausted the budget; no converged runs to aggregate")]
    NoConvergedRuns,
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
