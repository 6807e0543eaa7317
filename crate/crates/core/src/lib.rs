//! Simulation toolkit for periodically-modulated two-mode entanglement in a
//! nondegenerate optical parametric oscillator (NOPO).
//!
//! The crate covers four connected calculations for a NOPO whose pump
//! amplitude is a periodic function of time (constant, harmonically
//! modulated, or a rectangular pulse train):
//!
//! * [`semiclassical`] — the periodic mean photon number of the subharmonic
//!   modes, by quadrature of the over-transient integral and independently
//!   by noiseless mean-field ODE integration;
//! * [`variance`] — the linearized two-mode quadrature variance, its
//!   periodic asymptotic solution, closed-form special cases, and
//!   entanglement classification (inseparability and EPR criteria);
//! * [`positive_p`] — direct Ito stochastic simulation in the positive-P
//!   representation, as an independent verification channel;
//! * [`scan`] — parameter-space scans (minimum variance versus pump level,
//!   modulation depth and modulation frequency) and the validity margin of
//!   the linearized treatment.
//!
//! All rates are in units of the subharmonic decay rate `gamma` and time in
//! units of `1/gamma`. Intracavity quantities convert to measured output
//! fluxes through a factor `2 gamma` ([`variance::to_output`]).
//!
//! Monte Carlo trajectories and scan rows are data-parallel; with the
//! default `parallel` feature they run on a rayon pool, and
//! [`exec::ExecMode::Sequential`] forces the single-threaded path. Results
//! are bitwise independent of the worker count.

pub mod config;
pub mod exec;
pub mod ode;
pub mod params;
pub mod positive_p;
pub mod quad;
pub mod scan;
pub mod semiclassical;
pub mod variance;

pub use config::RunConfig;
pub use params::{DerivedConstants, Model, PumpProfile, Regime, SystemParams};

use thiserror::Error as ThisError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{what} (residual {residual:.3e})")]
    Solver { what: &'static str, residual: f64 },
    #[error("no periodic convergence after {periods} periods (residual {residual:.3e})")]
    NoConvergence { periods: usize, residual: f64 },
    #[error("no nontrivial semiclassical branch in the critical band")]
    NoNontrivialBranch,
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("grid too coarse: {points_per_period} points per period (need >= 16)")]
    GridTooCoarse { points_per_period: usize },
    #[error("escaped trajectory fraction {fraction:.3} exceeds 10%; statistics unreliable")]
    EscapedFraction { fraction: f64 },
    #[error("config error: {0}")]
    Config(String),
}
