//! Delay Lyapunov matrices for linear time-delay systems
//!
//! ```text
//! x'(t) = A0 x(t) + A1 x(t-h) + ∫_{-h}^{0} Cd e^{Ad θ} Bd x(t+θ) dθ
//! ```
//!
//! The delay Lyapunov matrix `P(τ)`, `τ ∈ [-h, h]`, is obtained without
//! time-stepping the delay equation: the matrix delay equation it satisfies
//! is lifted to a delay-free linear ODE for six stacked blocks
//! `Ω1 … Ω6` whose endpoint values are coupled algebraically. The coupling
//! conditions collapse to one square linear system for the initial state,
//! after which every `Ω(τ)` (and hence `P(τ)`) is a single matrix
//! exponential away.
//!
//! Modules:
//!
//! * [`matcore`]: vec/Kronecker algebra, matrix exponential, guarded solves.
//! * [`model`]: the plant, its kernel and the symmetric weight.
//! * [`odec`]: operator assembly, boundary solve, `P(τ)` and residuals.
//! * [`spectrum`]: existence/uniqueness diagnostic and characteristic function.
//! * [`ddesim`]: independent simulation path (method of steps, cost-to-go,
//!   `P(τ)` from its defining integral).
//! * [`quadrature`]: composite Gauss–Legendre for matrix-valued integrands.

pub mod ddesim;
pub mod matcore;
pub mod model;
pub mod odec;
pub mod quadrature;
pub mod spectrum;

pub use matcore::{Matrix, Vector};
pub use model::{TimeDelaySystem, Violation, Weight};
pub use odec::{LyapunovSolution, OdecOperator, OmegaBlocks};
pub use spectrum::{SpectrumReport, SpectrumThresholds, Verdict};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("linear system is numerically singular (reciprocal condition {rcond:e})")]
    SingularSystem { rcond: f64 },

    #[error("invalid system: {}", join_violations(.0))]
    InvalidSystem(Vec<Violation>),

    #[error("weight is not symmetric (relative asymmetry {asymmetry:e})")]
    AsymmetricWeight { asymmetry: f64 },

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "spectrum condition violated: sigma_min(G) = {sigma_min:e} (relative {sigma_min_relative:e})"
    )]
    SpectrumConditionViolated {
        sigma_min: f64,
        sigma_min_relative: f64,
    },

    #[error("step {dt} does not divide the delay {h} into at least {min_steps} equal steps")]
    IncommensurateStep { dt: f64, h: f64, min_steps: usize },

    #[error("simulation blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
