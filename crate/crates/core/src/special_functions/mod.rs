//! Special-function kernels: gamma and incomplete gamma, the exponential
//! integral, and the `G^{3,0}_{2,3}` Meijer kernel with the log-weighted gamma
//! integrals that the capacity closed forms reduce to.
//!
//! Every closed form here has a quadrature counterpart taking a
//! [`QuadratureSpec`](crate::quadrature::QuadratureSpec).

mod expint;
mod gamma;
mod meijer;

use serde::Serialize;

pub use expint::{exponential_integral_e1, scaled_exponential_integral_e1, EULER_GAMMA};
pub use gamma::{
    gamma, ln_binomial, ln_factorial, ln_gamma, ln_poisson_pmf, ln_regularized_upper_gamma,
    poisson_upper_tail, regularized_upper_gamma, upper_incomplete_gamma,
};
pub use meijer::{
    log_ratio_gamma_integral, log_ratio_gamma_integral_quadrature, log_weighted_gamma_integral,
    log_weighted_gamma_integral_quadrature, meijer_g_2_3_kernel, meijer_g_2_3_kernel_quadrature,
    ClosedFormEvaluation, MeijerKernelTable, CONDITIONING_LIMIT,
};

pub(crate) use gamma::xlogy;
pub(crate) use meijer::normalized_log_weighted;

/// Which evaluation route produced a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Series,
    Quadrature,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Series => "series",
            Backend::Quadrature => "quadrature",
        })
    }
}
