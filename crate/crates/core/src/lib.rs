//! Exact distribution of the equivalent SNR `γ_z = min(γ_x, γ_y)` of a
//! dual-hop decode-and-forward relay over independent, dissimilar Rician
//! fading hops, and the ergodic capacity of three adaptive transmission
//! policies built on it:
//!
//! * constant power with optimal rate adaptation (ORA),
//! * optimal simultaneous power and rate adaptation (OPRA),
//! * truncated channel inversion with fixed rate (TIFR).
//!
//! Closed-form series are paired with adaptive quadrature everywhere, and
//! [`montecarlo`] provides an independent simulation oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod cli;
pub mod distribution;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod special_functions;

pub use capacity::{AdaptiveScheme, CapacityResult};
pub use distribution::{MinSnrDistribution, RicianHop, SeriesControl};
pub use error::{Error, Result};
pub use montecarlo::SimulationEstimate;
pub use quadrature::QuadratureSpec;
pub use special_functions::Backend;

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear SNR to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
