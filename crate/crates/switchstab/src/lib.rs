//! Switched affine system toolbox for grid-side converter LVRT dynamics.
//!
//! The crate models a wind-turbine grid-side converter (WT-GSC) that
//! repeatedly enters and exits low-voltage ride-through (LVRT) as a
//! two-mode switched affine system, and provides:
//!
//! * [`switched`] — generic switched affine systems, trajectory simulation
//!   with switching-event localization, equilibrium classification.
//! * [`wtgsc`] — construction of the normal-operation and LVRT subsystems
//!   from physical and control parameters, voltage/power reconstruction.
//! * [`stability`] — common quadratic Lyapunov certificates with a scalar
//!   stability index, built from the boundary equilibrium on the switching
//!   surface.
//! * [`sensitivity`] — Sobol' variance-based global sensitivity analysis
//!   over the parameter hypercube (Saltelli design).
//! * [`pso`] — bounded particle swarm optimization of the stability index.
//! * [`config`] — flat key-value run configuration and the pipeline runner
//!   behind the `switchstab` binary.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod config;
pub mod linalg;
pub mod pso;
pub mod sensitivity;
pub mod stability;
pub mod switched;
pub mod wtgsc;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix in subsystem {label}: |det| = {det:e}")]
    SingularMatrix { label: usize, det: f64 },

    #[error("switched system has no output map; required for voltage-threshold operations")]
    MissingOutputMap,

    #[error("weights violate the simplex constraint: {0}")]
    WeightDomain(String),

    #[error("switching-event count exceeded the guard of {max_events} (chattering) at t = {t}")]
    EventOverflow { max_events: usize, t: f64 },

    #[error("state diverged beyond {limit:e} p.u. at t = {t} (voltage collapse)")]
    NonFiniteState { t: f64, limit: f64 },

    #[error("degenerate denominator w^2 Lg^2 + K_pd K_pq = {0:e}")]
    DegenerateDenominator(f64),

    #[error("(I - E F) is singular: |det| = {0:e}")]
    SingularClosure(f64),

    #[error("active-current limit binds: i_dmax = {i_dmax} < I_d2 = {i_d2}; two-mode model invalid")]
    CurrentLimitBinds { i_dmax: f64, i_d2: f64 },

    #[error("no sign bracket for the boundary equilibrium: residual has the same sign at both simplex endpoints")]
    NoBracket,

    #[error("convex combination of subsystem matrices is singular at lambda1 = {0}")]
    SingularCombination(f64),

    #[error("subsystem drives coincide at the equilibrium (|b1 - b2| <= 1e-12); no switching surface normal")]
    DegenerateDifference,

    #[error("second drive-difference component is zero (|d2| <= 1e-12); Lyapunov family undefined")]
    ZeroD2,

    #[error("certificate audit failed at step {step}: {detail}")]
    AuditFailure { step: char, detail: String },

    #[error("Sobol' sequence supports at most 16 dimensions, got {0}")]
    DimensionUnsupported(usize),

    #[error("Saltelli sample count must be a power of two, got {0}")]
    BadSampleCount(usize),

    #[error("all sampled evaluations were invalid; nothing to estimate")]
    AllInvalid,

    #[error("invalid parameters: {0}")]
    ParamDomain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors that mean "the stability criterion does not apply here",
    /// as opposed to a computation failure. Reported separately from
    /// "unstable" everywhere the index is aggregated.
    pub fn is_criterion_inapplicable(&self) -> bool {
        matches!(
            self,
            Error::NoBracket
                | Error::SingularCombination(_)
                | Error::DegenerateDifference
                | Error::ZeroD2
                | Error::SingularMatrix { .. }
                | Error::SingularClosure(_)
                | Error::DegenerateDenominator(_)
                | Error::CurrentLimitBinds { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
