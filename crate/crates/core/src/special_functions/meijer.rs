//! The `G^{3,0}_{2,3}(μ | 0,0; −1,−1,q)` kernel and the two log-weighted
//! gamma integrals built on it.
//!
//! The kernel is defined through the order derivative of the upper
//! incomplete gamma function,
//!
//! ```text
//! ∂/∂ν Γ(ν, μ) = ln μ · Γ(ν, μ) + μ · G(μ | 0,0; −1,−1,ν−1),
//! ```
//!
//! so `μ G(μ, q) = L_q(μ) := ∫_μ^∞ t^q e^{−t} ln(t/μ) dt`. Integrating by
//! parts gives `L_q = q L_{q−1} + Γ(q, μ)` with `L_0 = E1(μ)`, a recurrence of
//! positive terms. It is carried in scaled form `ℓ_q = e^μ L_q / q!`:
//!
//! ```text
//! ℓ_0 = e^μ E1(μ),    ℓ_q = ℓ_{q−1} + e_{q−1}(μ) / q,
//! ```
//!
//! where `e_n(μ) = Σ_{m≤n} μ^m/m!`. Everything is kept in log domain.

use crate::error::{domain, Result};
use crate::quadrature::{integrate_semi_infinite_relative, QuadratureSpec};

use super::expint::scaled_exponential_integral_e1;
use super::gamma::{ln_factorial, ln_regularized_upper_gamma, log_add_exp, xlogy};
use super::Backend;

/// Above this ratio of `Σ|terms| / |Σ terms|` the alternating closed form of
/// the log-weighted integral is abandoned for quadrature.
pub const CONDITIONING_LIMIT: f64 = 1e8;

/// Scaled kernel values `ℓ_q(μ)` for `q = 0..=q_max` at a fixed `μ`.
#[derive(Debug, Clone)]
pub struct MeijerKernelTable {
    mu: f64,
    ln_scaled: Vec<f64>,
}

impl MeijerKernelTable {
    pub fn new(mu: f64, q_max: u32) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(domain(
                "meijer_g_2_3_kernel",
                format!("argument must be positive and finite, got {mu}"),
            ));
        }
        let mut ln_scaled = Vec::with_capacity(q_max as usize + 1);
        let mut ln_ell = scaled_exponential_integral_e1(mu)?.ln();
        ln_scaled.push(ln_ell);
        // ln e_{q-1}(μ), starting from e_0 = 1
        let mut ln_partial_exp = 0.0;
        let ln_mu = mu.ln();
        for q in 1..=q_max {
            if q > 1 {
                let m = (q - 1) as f64;
                ln_partial_exp = log_add_exp(ln_partial_exp, m * ln_mu - ln_factorial(q - 1));
            }
            ln_ell = log_add_exp(ln_ell, ln_partial_exp - (q as f64).ln());
            ln_scaled.push(ln_ell);
        }
        Ok(Self { mu, ln_scaled })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn q_max(&self) -> u32 {
        (self.ln_scaled.len() - 1) as u32
    }

    /// `ln ℓ_q(μ) = μ + ln L_q(μ) − ln q!`
    pub fn ln_scaled(&self, q: u32) -> f64 {
        self.ln_scaled[q as usize]
    }

    /// `ln G^{3,0}_{2,3}(μ | 0,0; −1,−1,q)`
    pub fn ln_kernel(&self, q: u32) -> f64 {
        self.ln_scaled(q) - self.mu + ln_factorial(q) - self.mu.ln()
    }

    /// `e^{−μ} ℓ_q(μ)`: the mean of `ln(W/η)·1{W ≥ η}` for `W ~ Gamma(q+1)`
    /// with unit rate and `η = μ`.
    pub fn normalized_log_ratio(&self, q: u32) -> f64 {
        (self.ln_scaled(q) - self.mu).exp()
    }
}

/// `G^{3,0}_{2,3}(μ | 0,0; −1,−1,q)` for `μ > 0`.
pub fn meijer_g_2_3_kernel(mu: f64, q: u32) -> Result<f64> {
    Ok(MeijerKernelTable::new(mu, q)?.ln_kernel(q).exp())
}

/// The same kernel by adaptive quadrature of
/// `(1/μ) ∫_μ^∞ t^q e^{−t} ln(t/μ) dt`, after `t = μ(1+u)`.
pub fn meijer_g_2_3_kernel_quadrature(mu: f64, q: u32, spec: &QuadratureSpec) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(domain(
            "meijer_g_2_3_kernel",
            format!("argument must be positive and finite, got {mu}"),
        ));
    }
    let qf = q as f64;
    // G = μ^q e^{−μ} ∫_0^∞ (1+u)^q e^{−μu} ln(1+u) du
    let integrand = |u: f64| {
        let l = u.ln_1p();
        (qf * l - mu * u).exp() * l
    };
    // (1+u)^q ln(1+u) ≤ (1+u)^{q+1}, whose tail is e^μ Γ(q+2, μ(1+T)) / μ^{q+2}
    let tail = |t: f64| {
        let x = mu * (1.0 + t);
        let ln_q = ln_regularized_upper_gamma(q + 2, x).unwrap_or(f64::NEG_INFINITY);
        (mu + ln_factorial(q + 1) + ln_q - (qf + 2.0) * mu.ln()).exp()
    };
    let mode = (qf / mu).max(1.0);
    let r = integrate_semi_infinite_relative(integrand, 0.0, 4.0 * mode, tail, spec)?;
    Ok((xlogy(qf, mu) - mu).exp() * r.value)
}

/// Outcome of a closed-form evaluation that may fall back to quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormEvaluation {
    pub value: f64,
    pub backend: Backend,
    /// `Σ|terms| / |Σ terms|` of the alternating closed form.
    pub conditioning: f64,
}

/// Closed form of `(β^{α+1}/α!) ∫_0^∞ w^α e^{−βw} ln(1+w) dw`, i.e. the mean
/// of `ln(1+W)` for `W ~ Gamma(α+1, rate β)`, from a kernel table at `μ = β`.
///
/// Returns the value and the conditioning of the alternating sum.
pub(crate) fn normalized_log_weighted_closed_form(
    alpha: u32,
    table: &MeijerKernelTable,
) -> (f64, f64) {
    let beta = table.mu();
    let ln_beta = beta.ln();
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for q in 0..=alpha {
        let d = alpha - q;
        let magnitude = (table.ln_scaled(q) + d as f64 * ln_beta - ln_factorial(d)).exp();
        abs_sum += magnitude;
        if d.is_multiple_of(2) {
            sum += magnitude;
        } else {
            sum -= magnitude;
        }
    }
    let conditioning = if sum > 0.0 {
        abs_sum / sum
    } else {
        f64::INFINITY
    };
    (sum, conditioning)
}

/// Quadrature route for the normalized log-weighted integral.
pub(crate) fn normalized_log_weighted_quadrature(
    alpha: u32,
    beta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let a = alpha as f64;
    let ln_norm = (a + 1.0) * beta.ln() - ln_factorial(alpha);
    let integrand = |w: f64| (ln_norm + xlogy(a, w) - beta * w).exp() * w.ln_1p();
    // ln(1+w) ≤ w, so the tail is at most E[W; W ≥ T] = (α+1)/β · Q(α+2, βT)
    let tail = |t: f64| {
        let lq = ln_regularized_upper_gamma(alpha + 2, beta * t).unwrap_or(f64::NEG_INFINITY);
        (a + 1.0) / beta * lq.exp()
    };
    let mean = (a + 1.0) / beta;
    let sd = (a + 1.0).sqrt() / beta;
    let r = integrate_semi_infinite_relative(integrand, 0.0, mean + 8.0 * sd, tail, spec)?;
    Ok(r.value)
}

/// Normalized log-weighted integral, closed form with quadrature fallback.
pub(crate) fn normalized_log_weighted(
    alpha: u32,
    table: &MeijerKernelTable,
    spec: &QuadratureSpec,
) -> Result<ClosedFormEvaluation> {
    let (value, conditioning) = normalized_log_weighted_closed_form(alpha, table);
    if conditioning <= CONDITIONING_LIMIT {
        Ok(ClosedFormEvaluation {
            value,
            backend: Backend::Series,
            conditioning,
        })
    } else {
        Ok(ClosedFormEvaluation {
            value: normalized_log_weighted_quadrature(alpha, table.mu(), spec)?,
            backend: Backend::Quadrature,
            conditioning,
        })
    }
}

fn check_beta(function: &'static str, beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain(
            function,
            format!("beta must be positive and finite, got {beta}"),
        ));
    }
    Ok(())
}

/// `∫_0^∞ w^α e^{−βw} ln(1+w) dw` via the binomial sum of kernels
///
/// ```text
/// Σ_{q=0}^{α} C(α,q) (−1)^{α−q} e^β β^{−q} G(β | 0,0; −1,−1,q).
/// ```
///
/// The `e^β/β^q` factors and factorials are combined in log domain. When the
/// alternating sum loses more than [`CONDITIONING_LIMIT`] in cancellation the
/// quadrature route is used and reported in the returned backend.
pub fn log_weighted_gamma_integral(alpha: u32, beta: f64) -> Result<ClosedFormEvaluation> {
    check_beta("log_weighted_gamma_integral", beta)?;
    let table = MeijerKernelTable::new(beta, alpha)?;
    let normalized = normalized_log_weighted(alpha, &table, &QuadratureSpec::default())?;
    let scale = (ln_factorial(alpha) - (alpha as f64 + 1.0) * beta.ln()).exp();
    Ok(ClosedFormEvaluation {
        value: normalized.value * scale,
        ..normalized
    })
}

/// Direct adaptive quadrature of `∫_0^∞ w^α e^{−βw} ln(1+w) dw`.
///
/// The integrand is carried as `α!/β^{α+1}` times a Gamma density so that
/// `w^α e^{−βw}` never under- or overflows.
pub fn log_weighted_gamma_integral_quadrature(
    alpha: u32,
    beta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_beta("log_weighted_gamma_integral", beta)?;
    let normalized = normalized_log_weighted_quadrature(alpha, beta, spec)?;
    Ok(normalized * (ln_factorial(alpha) - (alpha as f64 + 1.0) * beta.ln()).exp())
}

/// `∫_η^∞ w^α e^{−βw} ln(w/η) dw = (η / β^α) G(βη | 0,0; −1,−1,α)`.
pub fn log_ratio_gamma_integral(alpha: u32, beta: f64, eta: f64) -> Result<f64> {
    check_beta("log_ratio_gamma_integral", beta)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(domain(
            "log_ratio_gamma_integral",
            format!("eta must be positive and finite, got {eta}"),
        ));
    }
    let table = MeijerKernelTable::new(beta * eta, alpha)?;
    Ok((eta.ln() - alpha as f64 * beta.ln() + table.ln_kernel(alpha)).exp())
}

/// Direct adaptive quadrature of `∫_η^∞ w^α e^{−βw} ln(w/η) dw`, carried as
/// `α!/β^{α+1}` times a Gamma density like the log-weighted variant.
pub fn log_ratio_gamma_integral_quadrature(
    alpha: u32,
    beta: f64,
    eta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_beta("log_ratio_gamma_integral", beta)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(domain(
            "log_ratio_gamma_integral",
            format!("eta must be positive and finite, got {eta}"),
        ));
    }
    let a = alpha as f64;
    let ln_norm = (a + 1.0) * beta.ln() - ln_factorial(alpha);
    let integrand = |w: f64| (ln_norm + a * w.ln() - beta * w).exp() * (w / eta).ln();
    // ln(w/η) ≤ w/η, so the tail is at most E[W; W ≥ T]/η
    let tail = |t: f64| {
        let lq = ln_regularized_upper_gamma(alpha + 2, beta * t).unwrap_or(f64::NEG_INFINITY);
        (a + 1.0) / (beta * eta) * lq.exp()
    };
    let span = (a + 1.0) / beta + 8.0 * (a + 1.0).sqrt() / beta;
    let normalized = integrate_semi_infinite_relative(integrand, eta, span, tail, spec)?.value;
    Ok(normalized * (ln_factorial(alpha) - (a + 1.0) * beta.ln()).exp())
}
