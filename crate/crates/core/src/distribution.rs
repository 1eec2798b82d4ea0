//! Distribution of `γ_z = min(γ_x, γ_y)` for two independent Rician-faded
//! SNRs (noncentral chi-square with two degrees of freedom).
//!
//! The single-hop density `A e^{−aγ} I₀(2√(Kaγ))` is expanded through the
//! power series of `I₀`. Writing each coefficient as
//!
//! ```text
//! A · B(n) γ^n = Poisson(K)_n · a (aγ)^n e^{...} / n!
//! ```
//!
//! shows the hop SNR is a Poisson(K) mixture of Gamma(n+1, rate a) laws, so
//! every series term is bounded by a Poisson weight and truncation after `N`
//! terms leaves at most `Pr(Poisson(K) ≥ N)` of probability mass.

use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};
use crate::special_functions::{
    exponential_integral_e1, ln_binomial, ln_factorial, ln_poisson_pmf, poisson_upper_tail, xlogy,
};

/// Fading parameters of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianHop {
    k_factor: f64,
    mean_snr: f64,
}

impl RicianHop {
    pub fn new(k_factor: f64, mean_snr: f64) -> Result<Self> {
        if !(k_factor >= 0.0) || !k_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "K factor must be finite and nonnegative, got {k_factor}"
            )));
        }
        if !(mean_snr > 0.0) || !mean_snr.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean SNR must be finite and positive, got {mean_snr}"
            )));
        }
        Ok(Self { k_factor, mean_snr })
    }

    pub fn from_db(k_factor: f64, mean_snr_db: f64) -> Result<Self> {
        Self::new(k_factor, crate::db_to_linear(mean_snr_db))
    }

    pub fn k_factor(&self) -> f64 {
        self.k_factor
    }

    pub fn mean_snr(&self) -> f64 {
        self.mean_snr
    }

    /// `a = (1+K)/γ̄`
    pub fn rate(&self) -> f64 {
        (1.0 + self.k_factor) / self.mean_snr
    }

    /// `A = a e^{−K}`
    pub fn amplitude(&self) -> f64 {
        self.rate() * (-self.k_factor).exp()
    }

    /// `ln B(k)` with `B(k) = K^k (1+K)^k / (γ̄^k k!²)`.
    pub fn ln_bessel_coefficient(&self, k: u32) -> f64 {
        xlogy(k as f64, self.k_factor * self.rate()) - 2.0 * ln_factorial(k)
    }

    /// `ln B̃(k)` with `B̃(k) = B(k) / a^{k+1}`.
    pub fn ln_scaled_coefficient(&self, k: u32) -> f64 {
        self.ln_bessel_coefficient(k) - (k as f64 + 1.0) * self.rate().ln()
    }

    /// `ln Pr(N = n)` for the Poisson(K) mixing law.
    pub fn ln_mixing_weight(&self, n: u32) -> f64 {
        ln_poisson_pmf(self.k_factor, n)
    }

    /// Number of series terms needed for `tolerance`, capped by `max_terms`.
    /// The flag reports whether the tolerance was reached.
    pub fn terms_for(&self, control: &SeriesControl) -> (usize, bool) {
        let mut n = 1usize;
        while n < control.max_terms {
            if poisson_upper_tail(self.k_factor, n as u32) < control.tolerance {
                return (n, true);
            }
            n += 1;
        }
        let converged = poisson_upper_tail(self.k_factor, n as u32) < control.tolerance;
        (n, converged)
    }

    /// Density and survival function using at least the first `terms`
    /// series terms. Further terms, up to `control.max_terms`, are added
    /// while the remainder could still exceed `control.tolerance` relative to
    /// the running sums, which matters far in the tail where high orders
    /// dominate.
    fn pdf_and_survival(&self, gamma: f64, terms: usize, control: &SeriesControl) -> (f64, f64) {
        if gamma == 0.0 {
            // I₀(0) = 1; all mass lies above zero
            return (self.amplitude(), 1.0);
        }
        let a = self.rate();
        let k = self.k_factor;
        let x = a * gamma;
        let ln_x = x.ln();
        let mut pdf = 0.0;
        let mut survival = 0.0;
        // e^{−x} Σ_{m≤n} x^m/m! accumulated alongside
        let mut regularized = 0.0;
        let mut ln_t = -x;
        let mut n = 0u32;
        loop {
            if n > 0 {
                ln_t += ln_x - (n as f64).ln();
            }
            let t = ln_t.exp();
            regularized += t;
            let weight = self.ln_mixing_weight(n).exp();
            let pdf_term = weight * t;
            let survival_term = weight * regularized.min(1.0);
            pdf += pdf_term;
            survival += survival_term;
            n += 1;
            if n as usize >= control.max_terms.max(terms) {
                break;
            }
            if n as usize >= terms {
                // term ratios from here on are at most these
                let m = n as f64 + 1.0;
                let r_pdf = k * x / (m * m);
                let r_surv = k / m * (1.0 + x / m);
                if k == 0.0
                    || (r_pdf <= 0.5
                        && r_surv <= 0.5
                        && pdf_term <= control.tolerance * pdf
                        && survival_term <= control.tolerance * survival)
                {
                    break;
                }
            }
        }
        (a * pdf, survival)
    }

    /// Chernoff bound `Pr(γ > g) ≤ 2 e^K e^{−ag/2}`.
    pub fn survival_envelope(&self, gamma: f64) -> f64 {
        (2f64.ln() + self.k_factor - 0.5 * self.rate() * gamma).exp()
    }
}

/// Truncation policy for the power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub tolerance: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_terms: 512,
        }
    }
}

impl SeriesControl {
    pub fn new(tolerance: f64, max_terms: usize) -> Result<Self> {
        let c = Self {
            tolerance,
            max_terms,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "series tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParameter(
                "max_terms must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Control used by the quadrature cross-check routes.
    pub fn reference() -> Self {
        Self {
            tolerance: 1e-16,
            max_terms: 4096,
        }
    }
}

/// A series value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEvaluation {
    pub value: f64,
    /// Upper bound on the contribution of the dropped terms.
    pub truncation_error: f64,
    pub terms: usize,
    pub converged: bool,
}

fn check_gamma(function: &'static str, gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(domain(
            function,
            format!("SNR must be nonnegative, got {gamma}"),
        ));
    }
    Ok(())
}

/// `f(γ) = A e^{−aγ} I₀(2√(Kaγ))` by its series.
pub fn single_hop_pdf(
    hop: &RicianHop,
    gamma: f64,
    control: &SeriesControl,
) -> Result<SeriesEvaluation> {
    check_gamma("single_hop_pdf", gamma)?;
    control.validate()?;
    let (terms, converged) = hop.terms_for(control);
    let (pdf, _) = hop.pdf_and_survival(gamma, terms, control);
    Ok(SeriesEvaluation {
        value: pdf,
        // each Gamma density is at most a
        truncation_error: hop.rate() * poisson_upper_tail(hop.k_factor, terms as u32),
        terms,
        converged,
    })
}

/// `S(γ) = Σ_n Poisson(K)_n · Q(n+1, aγ)`.
pub fn single_hop_survival(
    hop: &RicianHop,
    gamma: f64,
    control: &SeriesControl,
) -> Result<SeriesEvaluation> {
    check_gamma("single_hop_survival", gamma)?;
    control.validate()?;
    let (terms, converged) = hop.terms_for(control);
    let (_, survival) = hop.pdf_and_survival(gamma, terms, control);
    Ok(SeriesEvaluation {
        value: survival,
        truncation_error: poisson_upper_tail(hop.k_factor, terms as u32),
        terms,
        converged,
    })
}

/// `f_z` regrouped by powers of `γ`: a finite mixture of
/// Gamma(α+1, rate `a_x + a_y`) densities.
///
/// The weight of component `α` collects the double-series coefficients
/// `A_x A_y B̃_x(n) B̃_y(k−n) a_x^{n+1} (k−n)! a_y^m / m!` (and the mirrored
/// ones) whose power of `γ` is `α`, times `α!/(a_x+a_y)^{α+1}`.
#[derive(Debug, Clone)]
pub struct GammaMixture {
    rate: f64,
    weights: Vec<f64>,
    deficit: f64,
    converged: bool,
}

impl GammaMixture {
    fn build(hop_x: &RicianHop, hop_y: &RicianHop, nx: usize, ny: usize, converged: bool) -> Self {
        let rate = hop_x.rate() + hop_y.rate();
        let mut weights = vec![0.0; nx + ny - 1];
        let mut add_side =
            |first: &RicianHop, other: &RicianHop, n_first: usize, n_other: usize| {
                let ln_rho_first = (first.rate() / rate).ln();
                let ln_rho_other = (other.rate() / rate).ln();
                // Pr(N_other ≥ m) restricted to the retained terms
                let mut other_tail = vec![0.0; n_other + 1];
                for j in (0..n_other).rev() {
                    other_tail[j] = other_tail[j + 1] + other.ln_mixing_weight(j as u32).exp();
                }
                for n in 0..n_first {
                    let ln_p = first.ln_mixing_weight(n as u32);
                    if ln_p == f64::NEG_INFINITY {
                        continue;
                    }
                    for (m, &tail) in other_tail.iter().take(n_other).enumerate() {
                        if tail <= 0.0 {
                            continue;
                        }
                        let alpha = n + m;
                        let ln_w = ln_p
                            + tail.ln()
                            + ln_binomial(alpha as u32, m as u32)
                            + (n as f64 + 1.0) * ln_rho_first
                            + m as f64 * ln_rho_other;
                        weights[alpha] += ln_w.exp();
                    }
                }
            };
        add_side(hop_x, hop_y, nx, ny);
        add_side(hop_y, hop_x, ny, nx);
        let total: f64 = weights.iter().sum();
        Self {
            rate,
            weights,
            deficit: (1.0 - total).max(0.0),
            converged,
        }
    }

    /// Common rate `a_x + a_y` of all components.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Weight of the Gamma(α+1) component, indexed by `α`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Probability mass lost to truncation.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn max_order(&self) -> u32 {
        (self.weights.len() - 1) as u32
    }

    /// Density of the mixture at `gamma`.
    pub fn pdf(&self, gamma: f64) -> f64 {
        let x = self.rate * gamma;
        let ln_x = x.ln();
        let mut ln_t = -x;
        let mut sum = 0.0;
        for (alpha, &w) in self.weights.iter().enumerate() {
            if alpha > 0 {
                ln_t = if x == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_t + ln_x - (alpha as f64).ln()
                };
            }
            sum += w * ln_t.exp();
        }
        self.rate * sum
    }
}

/// The pair of hops and the truncation policy.
#[derive(Debug, Clone)]
pub struct MinSnrDistribution {
    hop_x: RicianHop,
    hop_y: RicianHop,
    control: SeriesControl,
    terms_x: usize,
    terms_y: usize,
    converged: bool,
    mixture: OnceLock<GammaMixture>,
}

impl PartialEq for MinSnrDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.hop_x == other.hop_x && self.hop_y == other.hop_y && self.control == other.control
    }
}

impl MinSnrDistribution {
    pub fn new(hop_x: RicianHop, hop_y: RicianHop, control: SeriesControl) -> Result<Self> {
        control.validate()?;
        let (terms_x, cx) = hop_x.terms_for(&control);
        let (terms_y, cy) = hop_y.terms_for(&control);
        Ok(Self {
            hop_x,
            hop_y,
            control,
            terms_x,
            terms_y,
            converged: cx && cy,
            mixture: OnceLock::new(),
        })
    }

    pub fn with_default_control(hop_x: RicianHop, hop_y: RicianHop) -> Result<Self> {
        Self::new(hop_x, hop_y, SeriesControl::default())
    }

    pub fn hop_x(&self) -> &RicianHop {
        &self.hop_x
    }

    pub fn hop_y(&self) -> &RicianHop {
        &self.hop_y
    }

    pub fn control(&self) -> &SeriesControl {
        &self.control
    }

    /// Series terms kept for each hop.
    pub fn terms(&self) -> (usize, usize) {
        (self.terms_x, self.terms_y)
    }

    /// Whether both hop series reached the tolerance within `max_terms`.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// The same hops with a different truncation policy.
    pub fn with_control(&self, control: SeriesControl) -> Result<Self> {
        Self::new(self.hop_x, self.hop_y, control)
    }

    fn truncation_bound(&self) -> f64 {
        poisson_upper_tail(self.hop_x.k_factor, self.terms_x as u32)
            + poisson_upper_tail(self.hop_y.k_factor, self.terms_y as u32)
    }

    /// `(S_x(γ), S_y(γ), f_x(γ), f_y(γ))`
    fn hop_values(&self, gamma: f64) -> (f64, f64, f64, f64) {
        let (fx, sx) = self
            .hop_x
            .pdf_and_survival(gamma, self.terms_x, &self.control);
        let (fy, sy) = self
            .hop_y
            .pdf_and_survival(gamma, self.terms_y, &self.control);
        (sx, sy, fx, fy)
    }

    /// `Pr(γ_z > γ) = S_x(γ) S_y(γ)`.
    pub fn min_survival(&self, gamma: f64) -> Result<f64> {
        check_gamma("min_survival", gamma)?;
        let (sx, sy, _, _) = self.hop_values(gamma);
        Ok(sx * sy)
    }

    /// `F_z(γ) = 1 − S_x(γ) S_y(γ)`.
    pub fn min_cdf(&self, gamma: f64) -> Result<f64> {
        Ok(self.min_cdf_detailed(gamma)?.value)
    }

    pub fn min_cdf_detailed(&self, gamma: f64) -> Result<SeriesEvaluation> {
        check_gamma("min_cdf", gamma)?;
        let (sx, sy, _, _) = self.hop_values(gamma);
        Ok(SeriesEvaluation {
            value: (1.0 - sx * sy).clamp(0.0, 1.0),
            truncation_error: self.truncation_bound(),
            terms: self.terms_x.max(self.terms_y),
            converged: self.converged,
        })
    }

    /// `f_z(γ) = f_x(γ) S_y(γ) + f_y(γ) S_x(γ)`.
    pub fn min_pdf(&self, gamma: f64) -> Result<f64> {
        Ok(self.min_pdf_detailed(gamma)?.value)
    }

    pub fn min_pdf_detailed(&self, gamma: f64) -> Result<SeriesEvaluation> {
        check_gamma("min_pdf", gamma)?;
        let (sx, sy, fx, fy) = self.hop_values(gamma);
        let error = self.hop_x.rate()
            * poisson_upper_tail(self.hop_x.k_factor, self.terms_x as u32)
            + self.hop_y.rate() * poisson_upper_tail(self.hop_y.k_factor, self.terms_y as u32);
        Ok(SeriesEvaluation {
            value: fx * sy + fy * sx,
            truncation_error: error,
            terms: self.terms_x.max(self.terms_y),
            converged: self.converged,
        })
    }

    /// `f_z` as a Gamma mixture, built on first use.
    pub fn gamma_mixture(&self) -> &GammaMixture {
        self.mixture.get_or_init(|| {
            GammaMixture::build(
                &self.hop_x,
                &self.hop_y,
                self.terms_x,
                self.terms_y,
                self.converged,
            )
        })
    }

    /// Bound on `Pr(γ_z > γ)` from the hop moment generating functions.
    pub fn survival_envelope(&self, gamma: f64) -> f64 {
        let ex = self.hop_x.survival_envelope(gamma);
        let ey = self.hop_y.survival_envelope(gamma);
        ex.min(ey).min(ex * ey).min(1.0)
    }

    fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::SeriesTruncation {
                max_terms: self.control.max_terms,
                tolerance: self.control.tolerance,
                tail_bound: self.truncation_bound(),
            })
        }
    }

    /// `E[γ_z⁻¹ ; γ_z ≥ γ₀]` from the double series with the branch function
    ///
    /// ```text
    /// 𝒢(u, vγ₀) = Γ(u, vγ₀)/v^u  (u > 0),    E₁(vγ₀)  (u = 0).
    /// ```
    pub fn min_expected_inverse_tail(&self, gamma0: f64) -> Result<f64> {
        Ok(self.min_expected_inverse_tail_detailed(gamma0)?.value)
    }

    pub fn min_expected_inverse_tail_detailed(&self, gamma0: f64) -> Result<SeriesEvaluation> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(domain(
                "min_expected_inverse_tail",
                format!("cutoff must be positive and finite, got {gamma0}"),
            ));
        }
        self.require_converged()?;
        let mixture = self.gamma_mixture();
        let s = mixture.rate();
        let mu = s * gamma0;
        let ln_mu = mu.ln();
        // Q(α, μ) built up as e^{−μ} Σ_{m<α} μ^m/m!
        let mut regularized = 0.0;
        let mut ln_t = -mu;
        let mut sum = 0.0;
        for (alpha, &w) in mixture.weights().iter().enumerate() {
            let branch = if alpha == 0 {
                exponential_integral_e1(mu)?
            } else {
                if alpha > 1 {
                    ln_t += ln_mu - ((alpha - 1) as f64).ln();
                }
                regularized += ln_t.exp();
                regularized.min(1.0) / alpha as f64
            };
            sum += w * branch;
        }
        Ok(SeriesEvaluation {
            value: s * sum,
            truncation_error: mixture.deficit() / gamma0,
            terms: self.terms_x.max(self.terms_y),
            converged: mixture.converged(),
        })
    }

    /// `E[γ_z⁻¹ ; γ_z ≥ γ₀]` by adaptive quadrature of `f_z(γ)/γ`.
    ///
    /// Integrates in `u = ln(γ/γ₀)` so the `1/γ` factor disappears.
    pub fn min_expected_inverse_tail_quadrature(
        &self,
        gamma0: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(domain(
                "min_expected_inverse_tail",
                format!("cutoff must be positive and finite, got {gamma0}"),
            ));
        }
        let reference = self.with_control(SeriesControl::reference())?;
        let integrand = |u: f64| {
            let g = gamma0 * u.exp();
            let (sx, sy, fx, fy) = reference.hop_values(g);
            fx * sy + fy * sx
        };
        // ∫_{γ₀e^U}^∞ f/γ ≤ Pr(γ_z > γ₀e^U) / (γ₀e^U)
        let tail = |u: f64| {
            let g = gamma0 * u.exp();
            self.survival_envelope(g) / g
        };
        let r = integrate_semi_infinite(integrand, 0.0, 4.0, tail, spec)?;
        Ok(r.value)
    }
}
