//! Numerical toolkit for a two-layer coupled Lengyel-Epstein reaction-diffusion
//! system on an interval: layered singular steady states, spectral (SLEP-type)
//! stability constants, Turing and delayed-coupling Hopf thresholds, and direct
//! PDE simulation / discretized eigenproblems for cross-validation.
//!
//! The scalar math kernels ([`kinetics`], [`nullcline`], [`roots`], [`quad`],
//! [`tridiag`]) are generic over the floating type via [`Real`]; the solver
//! pipeline (profiles, eigenproblems, time integration) is instantiated at
//! `f64`, with concrete aliases exported at the crate root.

pub mod arnoldi;
pub mod banded;
pub mod grid;
pub mod kinetics;
pub mod nullcline;
pub mod profile;
pub mod quad;
pub mod real;
pub mod roots;
pub mod simulate;
pub mod slep;
pub mod spectral;
pub mod steady;
pub mod sums;
pub mod tridiag;

pub use real::Real;

/// Errors shared by every solver layer.
///
/// `Domain`/`Regime`/`Bracket` are parameter diagnostics (exit code 2 in the
/// CLI); `Convergence`/`Eigen` are numerical failures (exit code 3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("regime diagnostic: {0}")]
    Regime(String),
    #[error("bracketing failure: {0}")]
    Bracket(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;

// Concrete aliases for the generic kernel types at the pipeline scalar.
pub type Scalar = f64;
pub type ModelParams = kinetics::ModelParams<Scalar>;
pub type OriginalParams = kinetics::OriginalParams<Scalar>;
pub type KineticsEval = kinetics::KineticsEval<Scalar>;
pub type NullclineBranches = nullcline::NullclineBranches<Scalar>;
