use thiserror::Error;

use crate::signal::Interval;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval ({a}, {b}): endpoints must be finite with a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid piecewise-linear function: {0}")]
    InvalidFunction(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("domain mismatch: {left} vs {right}")]
    DomainMismatch { left: Interval, right: Interval },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The tube is empty at `x`: the lower obstacle (or pinned value) lies
    /// above the upper one.
    #[error("infeasible tube at x = {x}: lower {lower} > upper {upper}")]
    Infeasible { x: f64, lower: f64, upper: f64 },

    #[error("oracle did not converge within {sweeps} sweeps (last update {last_update:e})")]
    SweepCap { sweeps: usize, last_update: f64 },

    #[error("oracle objective increased in sweep {sweep}: {before} -> {after}")]
    NonMonotoneObjective {
        sweep: usize,
        before: f64,
        after: f64,
    },

    #[error("energy derivative is not increasing near s = {at}")]
    NonMonotoneDerivative { at: f64 },

    #[error("sweep invariant violated: {0}")]
    SweepInvariant(String),
}
