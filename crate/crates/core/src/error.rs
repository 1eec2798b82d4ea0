use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series did not reach tolerance {tolerance:e} within {max_terms} terms (remaining tail bound {tail_bound:e})")]
    SeriesTruncation {
        max_terms: usize,
        tolerance: f64,
        tail_bound: f64,
    },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("root not bracketed on [{lower:e}, {upper:e}]: h(lower) = {h_lower:e}, h(upper) = {h_upper:e}")]
    RootNotBracketed {
        lower: f64,
        upper: f64,
        h_lower: f64,
        h_upper: f64,
    },

    #[error("cutoff equation is not decreasing near gamma0 = {at:e}")]
    NonMonotoneCutoff { at: f64 },

    #[error("degenerate Monte Carlo sample: {0}")]
    DegenerateSample(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Error {
    Error::Domain {
        function,
        message: message.into(),
    }
}
