//! One-dimensional total-variation (ROF) denoising of piecewise-constant
//! signals by the taut string algorithm.
//!
//! [`rof_denoise`] returns the exact minimizer of `λJ(u) + ½‖f − u‖²`
//! together with its taut string and a dual certificate, in linear time.
//! [`isotonic_fit`] solves the one-sided variant. The [`oracles`] module holds
//! slow independent solvers used for cross-checking, and [`analysis`] turns
//! the structural properties of the denoiser into executable checks.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod isotonic;
pub mod oracles;
pub mod signal;
pub mod taut_string;

/// Default relative tolerance for contact detection and verification.
pub const DEFAULT_TOL: f64 = 1e-9;

pub use error::{Error, Result};
pub use isotonic::{isotonic_fit, lower_convex_envelope, pava_oracle, IsotonicResult};
pub use signal::{
    cumulative, derivative, jordan_decomposition, jump_measure, l2_distance, l2_inner, l2_norm,
    linf_norm_pl, mean_zero_split, pairing_with_certificate, sup_distance, total_variation, Atom,
    AtomicMeasure, Interval, PiecewiseConstantSignal, PiecewiseLinearFunction,
};
pub use taut_string::{
    rof_denoise, rof_denoise_with_tol, solve_tube, verify_certificate, CertificateVerdict,
    CertificateViolation, Contact, DenoiseResult, Knot, TautString, Tube,
};
