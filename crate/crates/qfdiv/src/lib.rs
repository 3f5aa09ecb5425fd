//! # qfdiv
//!
//! Single-copy maximized measured f-divergence between finite-dimensional
//! quantum states.
//!
//! Given a pair of density operators ρ₁, ρ₂ and a convex generator f, the
//! measured f-divergence is the supremum of the classical f-divergence of the
//! outcome distributions over all POVMs applied to one copy of each state:
//!
//! ```text
//! D_f^min(ρ₁‖ρ₂) = sup_M D_f(P_{ρ₁}^M ‖ P_{ρ₂}^M)
//! ```
//!
//! When the convex conjugate f* (or the conjugate of the reversal f̂) is
//! operator convex, this equals the supremum of the concave functional
//! `G(T) = tr ρ₁T − tr ρ₂ f*(T)` over Hermitian T with spectrum in dom f*,
//! which this crate maximizes by projected gradient ascent, with closed-form
//! fast paths for the χ², fidelity, trace-distance and pure-state cases.
//!
//! Modules:
//!
//! - [`convex`] — convex generators f, conjugates, reversal, classical
//!   f-divergence on discrete measures.
//! - [`matrix`] — Hermitian linear algebra: spectral calculus, Fréchet
//!   derivatives by divided differences, Lyapunov solves, fidelity.
//! - [`solver`] — finiteness classification, spectral bounds, kernel
//!   reduction and the constrained concave maximization itself.
//! - [`oracle`] — brute-force lower bound: direct optimization of the
//!   classical divergence over projective measurements.
//! - [`fisher`] — SLD Fisher information and the second-order expansion of
//!   the divergence for infinitesimally close states.
//! - [`asymptotics`] — sandwiched Rényi values, single-copy vs asymptotic
//!   gap reports, pure-state Chernoff/Hoeffding bounds.
//! - [`io`] — JSON problem parsing and the CLI command dispatch.

use thiserror::Error;

pub mod asymptotics;
pub mod convex;
pub mod fisher;
pub mod io;
pub mod matrix;
pub mod oracle;
pub mod solver;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("eigenvalue {eigenvalue} lies outside the function domain {domain}")]
    DomainViolation { eigenvalue: f64, domain: String },

    #[error("spectrum violates the declared spectral box by {0:.3e}")]
    SpectralBoxViolation(f64),

    #[error("operator is not supported on the required subspace (violation {0:.3e})")]
    SupportViolation(f64),

    #[error("measure length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("weights of a discrete measure must be nonnegative (got {0})")]
    NegativeWeight(f64),

    #[error("invalid divergence family: {0}")]
    InvalidFamily(String),

    #[error("hypotheses for {op} not satisfied: {reason}")]
    PreconditionFailed { op: &'static str, reason: String },

    #[error("neither the conjugate nor the reversed conjugate is operator convex; no certified solver path")]
    UnsupportedFamily,

    #[error("rank change along the state family: {0}")]
    RankChange(String),

    #[error("vector is not normalized (norm {0})")]
    NotUnit(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use convex::{DiscreteMeasure, DivergenceGenerator, Interval};
pub use matrix::{DensityOperator, HermitianOperator};
pub use oracle::Measurement;
pub use solver::{DivergenceResult, SolveOptions, SolverPath, SpectralBounds};
