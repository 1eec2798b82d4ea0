//! Ergodic capacity of the dual-hop link under the three adaptive policies.
//!
//! All values are per unit bandwidth (bit/s/Hz) and carry the half-duplex
//! factor 0.5. The closed forms sum over the Gamma-mixture regrouping of
//! `f_z` (see [`GammaMixture`](crate::distribution::GammaMixture)); the
//! quadrature routes integrate the factorized density directly and serve as
//! the cross-check recorded in [`CapacityResult::error_estimate`].

use std::f64::consts::LOG2_E;

use serde::Serialize;

use crate::distribution::{MinSnrDistribution, SeriesControl};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadratureSpec};
use crate::special_functions::{normalized_log_weighted, Backend, MeijerKernelTable};

/// Lower end of the bracket for the OPRA cutoff.
pub const CUTOFF_BRACKET_LOW: f64 = 1e-12;
/// Bisection stops once `|h(γ₀)|` falls below this.
pub const CUTOFF_RESIDUAL_TARGET: f64 = 1e-10;
/// Search interval and tolerance of the TIFR cutoff optimizer.
pub const TIFR_SEARCH_LOW: f64 = 1e-6;
pub const TIFR_SEARCH_HIGH: f64 = 1.0;
pub const TIFR_CUTOFF_TOLERANCE: f64 = 1e-6;

const HALF_DUPLEX: f64 = 0.5;

/// The three adaptive transmission policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AdaptiveScheme {
    /// Constant power, optimal rate adaptation.
    #[serde(rename = "ORA")]
    Ora,
    /// Optimal simultaneous power and rate adaptation.
    #[serde(rename = "OPRA")]
    Opra,
    /// Truncated channel inversion with fixed rate.
    #[serde(rename = "TIFR")]
    Tifr,
}

impl AdaptiveScheme {
    pub const ALL: [AdaptiveScheme; 3] = [
        AdaptiveScheme::Ora,
        AdaptiveScheme::Opra,
        AdaptiveScheme::Tifr,
    ];
}

impl std::fmt::Display for AdaptiveScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdaptiveScheme::Ora => "ORA",
            AdaptiveScheme::Opra => "OPRA",
            AdaptiveScheme::Tifr => "TIFR",
        })
    }
}

impl std::str::FromStr for AdaptiveScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ora" => Ok(AdaptiveScheme::Ora),
            "opra" => Ok(AdaptiveScheme::Opra),
            "tifr" => Ok(AdaptiveScheme::Tifr),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}' (expected ora, opra or tifr)"
            ))),
        }
    }
}

/// Capacity of one scheme at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub scheme: AdaptiveScheme,
    /// bit/s/Hz
    pub capacity: f64,
    /// `γ₀` for OPRA, `β₀` for TIFR.
    pub cutoff: Option<f64>,
    /// TIFR only.
    pub outage_probability: Option<f64>,
    /// Route that produced `capacity`.
    pub backend: Backend,
    /// Relative disagreement between the series and quadrature routes.
    pub error_estimate: f64,
    /// Closed-form terms that fell back to quadrature on poor conditioning.
    pub fallback_terms: usize,
}

impl CapacityResult {
    /// Capacity in bit/s for bandwidth `bandwidth_hz`.
    pub fn scaled(&self, bandwidth_hz: f64) -> f64 {
        self.capacity * bandwidth_hz
    }
}

fn relative_gap(primary: f64, check: f64) -> f64 {
    (primary - check).abs() / check.abs().max(f64::MIN_POSITIVE)
}

fn require_converged(dist: &MinSnrDistribution) -> Result<()> {
    if dist.converged() {
        return Ok(());
    }
    let c = dist.control();
    let (nx, ny) = dist.terms();
    Err(Error::SeriesTruncation {
        max_terms: c.max_terms,
        tolerance: c.tolerance,
        tail_bound: crate::special_functions::poisson_upper_tail(
            dist.hop_x().k_factor(),
            nx as u32,
        ) + crate::special_functions::poisson_upper_tail(
            dist.hop_y().k_factor(),
            ny as u32,
        ),
    })
}

fn negligible_weight(dist: &MinSnrDistribution) -> f64 {
    dist.control().tolerance * 1e-6
}

/// `∫_X^∞ Pr(γ_z > γ) dγ` bound from the exponential envelopes.
fn envelope_integral(dist: &MinSnrDistribution, x: f64) -> f64 {
    let hx = dist.hop_x();
    let hy = dist.hop_y();
    let single = |k: f64, c: f64| 2.0 * (k - c * x).exp() / c;
    let cx = 0.5 * hx.rate();
    let cy = 0.5 * hy.rate();
    let both = 4.0 * (hx.k_factor() + hy.k_factor() - (cx + cy) * x).exp() / (cx + cy);
    single(hx.k_factor(), cx)
        .min(single(hy.k_factor(), cy))
        .min(both)
}

fn initial_span(dist: &MinSnrDistribution) -> f64 {
    let k = dist.hop_x().k_factor().max(dist.hop_y().k_factor());
    4.0 * (1.0 + k) / (dist.hop_x().rate() + dist.hop_y().rate())
}

fn reference(dist: &MinSnrDistribution) -> Result<MinSnrDistribution> {
    dist.with_control(SeriesControl::reference())
}

fn pdf_of(dist: &MinSnrDistribution) -> impl Fn(f64) -> f64 + '_ {
    move |g: f64| dist.min_pdf(g).unwrap_or(f64::NAN)
}

/// ORA series: `0.5 log₂e · Σ_α c_α · E[ln(1+W_α)]`, each expectation from the
/// binomial sum of Meijer kernels.
pub fn capacity_ora_series(
    dist: &MinSnrDistribution,
    spec: &QuadratureSpec,
) -> Result<(f64, usize)> {
    require_converged(dist)?;
    let mixture = dist.gamma_mixture();
    let table = MeijerKernelTable::new(mixture.rate(), mixture.max_order())?;
    let cut = negligible_weight(dist);
    let mut sum = 0.0;
    let mut fallbacks = 0;
    for (alpha, &w) in mixture.weights().iter().enumerate() {
        if w < cut {
            continue;
        }
        let e = normalized_log_weighted(alpha as u32, &table, spec)?;
        if e.backend == Backend::Quadrature {
            fallbacks += 1;
        }
        sum += w * e.value;
    }
    Ok((HALF_DUPLEX * LOG2_E * sum, fallbacks))
}

/// ORA by quadrature: `0.5 ∫_0^∞ log₂(1+γ) f_z(γ) dγ`.
pub fn capacity_ora_quadrature(dist: &MinSnrDistribution, spec: &QuadratureSpec) -> Result<f64> {
    let r = reference(dist)?;
    let pdf = pdf_of(&r);
    let integrand = |g: f64| g.ln_1p() * pdf(g);
    let tail =
        |x: f64| x.ln_1p() * dist.survival_envelope(x) + envelope_integral(dist, x) / (1.0 + x);
    let v = integrate_semi_infinite(integrand, 0.0, initial_span(dist), tail, spec)?;
    Ok(HALF_DUPLEX * LOG2_E * v.value)
}

/// Constant power with optimal rate adaptation.
pub fn capacity_ora(dist: &MinSnrDistribution) -> Result<CapacityResult> {
    let spec = QuadratureSpec::default();
    let (series, fallback_terms) = capacity_ora_series(dist, &spec)?;
    let check = capacity_ora_quadrature(dist, &spec)?;
    Ok(CapacityResult {
        scheme: AdaptiveScheme::Ora,
        capacity: series,
        cutoff: None,
        outage_probability: None,
        backend: Backend::Series,
        error_estimate: relative_gap(series, check),
        fallback_terms,
    })
}

/// `h(γ₀) = (1 − F(γ₀))/γ₀ − E[γ⁻¹; γ ≥ γ₀] − 1`, the OPRA cutoff equation.
pub fn opra_cutoff_equation(dist: &MinSnrDistribution, gamma0: f64) -> Result<f64> {
    let survival = dist.min_survival(gamma0)?;
    let inverse = dist.min_expected_inverse_tail(gamma0)?;
    Ok(survival / gamma0 - inverse - 1.0)
}

/// Optimal OPRA cutoff `γ₀ ∈ (0, 1]`, by bisection on the bracket
/// `[1e-12, 1]` after checking that the cutoff equation decreases.
pub fn opra_cutoff(dist: &MinSnrDistribution) -> Result<f64> {
    require_converged(dist)?;
    let h = |g: f64| opra_cutoff_equation(dist, g);

    let mut lo = CUTOFF_BRACKET_LOW;
    let mut hi = 1.0;
    let h_lo = h(lo)?;
    let h_hi = h(hi)?;
    if !(h_lo > 0.0 && h_hi < 0.0) {
        return Err(Error::RootNotBracketed {
            lower: lo,
            upper: hi,
            h_lower: h_lo,
            h_upper: h_hi,
        });
    }

    // Sanity check on a log grid: h must decrease.
    let mut previous = h_lo;
    for i in 1..=24 {
        let g = lo * (hi / lo).powf(i as f64 / 24.0);
        let v = h(g)?;
        if v > previous + 1e-12 * previous.abs().max(1.0) {
            return Err(Error::NonMonotoneCutoff { at: g });
        }
        previous = v;
    }

    let mut best = (hi, h_hi.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = h(mid)?;
        if v.abs() < best.1 {
            best = (mid, v.abs());
        }
        if v.abs() < CUTOFF_RESIDUAL_TARGET * 1e-4 || hi - lo <= 4.0 * f64::EPSILON * mid {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

/// `∫_{γ₀}^∞ (1/γ₀ − 1/γ) f_z(γ) dγ − 1` by quadrature alone.
pub fn cutoff_residual_quadrature(
    dist: &MinSnrDistribution,
    gamma0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(gamma0 > 0.0) {
        return Err(domain(
            "cutoff_residual",
            format!("cutoff must be positive, got {gamma0}"),
        ));
    }
    let r = reference(dist)?;
    let pdf = pdf_of(&r);
    // with γ = γ₀ e^u: (1/γ₀ − 1/γ) f dγ = (e^u − 1) f du
    let integrand = |u: f64| u.exp_m1() * pdf(gamma0 * u.exp());
    let tail = |u: f64| dist.survival_envelope(gamma0 * u.exp()) / gamma0;
    let v = integrate_semi_infinite(integrand, 0.0, 4.0, tail, spec)?;
    Ok(v.value - 1.0)
}

/// OPRA series: `0.5 log₂e · Σ_α c_α · E[ln(W_α/γ₀); W_α ≥ γ₀]`, each term
/// the normalized log-ratio integral `(η/β^α) G(βη | 0,0; −1,−1,α)`.
pub fn capacity_opra_series(dist: &MinSnrDistribution, gamma0: f64) -> Result<f64> {
    require_converged(dist)?;
    if !(gamma0 > 0.0) {
        return Err(domain(
            "capacity_opra",
            format!("cutoff must be positive, got {gamma0}"),
        ));
    }
    let mixture = dist.gamma_mixture();
    let table = MeijerKernelTable::new(mixture.rate() * gamma0, mixture.max_order())?;
    let sum: f64 = mixture
        .weights()
        .iter()
        .enumerate()
        .map(|(alpha, &w)| w * table.normalized_log_ratio(alpha as u32))
        .sum();
    Ok(HALF_DUPLEX * LOG2_E * sum)
}

/// OPRA by quadrature: `0.5 ∫_{γ₀}^∞ log₂(γ/γ₀) f_z(γ) dγ`.
pub fn capacity_opra_quadrature(
    dist: &MinSnrDistribution,
    gamma0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(gamma0 > 0.0) {
        return Err(domain(
            "capacity_opra",
            format!("cutoff must be positive, got {gamma0}"),
        ));
    }
    let r = reference(dist)?;
    let pdf = pdf_of(&r);
    let integrand = |g: f64| (g / gamma0).ln() * pdf(g);
    let tail =
        |x: f64| (x / gamma0).ln() * dist.survival_envelope(x) + envelope_integral(dist, x) / x;
    let v = integrate_semi_infinite(integrand, gamma0, initial_span(dist), tail, spec)?;
    Ok(HALF_DUPLEX * LOG2_E * v.value)
}

/// Optimal simultaneous power and rate adaptation.
pub fn capacity_opra(dist: &MinSnrDistribution) -> Result<CapacityResult> {
    let gamma0 = opra_cutoff(dist)?;
    let series = capacity_opra_series(dist, gamma0)?;
    let check = capacity_opra_quadrature(dist, gamma0, &QuadratureSpec::default())?;
    Ok(CapacityResult {
        scheme: AdaptiveScheme::Opra,
        capacity: series,
        cutoff: Some(gamma0),
        outage_probability: None,
        backend: Backend::Series,
        error_estimate: relative_gap(series, check),
        fallback_terms: 0,
    })
}

/// `P_out = Pr(γ_z < β₀) = F_z(β₀)`.
pub fn outage_probability(dist: &MinSnrDistribution, beta0: f64) -> Result<f64> {
    if !(beta0 >= 0.0) {
        return Err(domain(
            "outage_probability",
            format!("cutoff must be nonnegative, got {beta0}"),
        ));
    }
    dist.min_cdf(beta0)
}

fn check_tifr_cutoff(beta0: f64) -> Result<()> {
    if !(beta0 > 0.0) || !beta0.is_finite() {
        return Err(domain(
            "capacity_tifr",
            format!("cutoff must be positive and finite (the inverse moment diverges at 0), got {beta0}"),
        ));
    }
    Ok(())
}

fn tifr_formula(inverse_tail: f64, outage: f64) -> f64 {
    // no mass above the cutoff: S ln(1 + 1/I) → 0 since I ≤ S/β₀
    if outage >= 1.0 || inverse_tail == 0.0 {
        return 0.0;
    }
    HALF_DUPLEX * (1.0 / inverse_tail).ln_1p() * LOG2_E * (1.0 - outage)
}

/// TIFR series value at `β₀`: `(capacity, outage)`.
pub fn capacity_tifr_series(dist: &MinSnrDistribution, beta0: f64) -> Result<(f64, f64)> {
    check_tifr_cutoff(beta0)?;
    let inverse = dist.min_expected_inverse_tail(beta0)?;
    let outage = outage_probability(dist, beta0)?;
    Ok((tifr_formula(inverse, outage), outage))
}

/// TIFR by quadrature of both the inverse moment and the outage integral.
pub fn capacity_tifr_quadrature(
    dist: &MinSnrDistribution,
    beta0: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_tifr_cutoff(beta0)?;
    let inverse = dist.min_expected_inverse_tail_quadrature(beta0, spec)?;
    let r = reference(dist)?;
    let outage = integrate(pdf_of(&r), 0.0, beta0, spec)?.value;
    Ok(tifr_formula(inverse, outage))
}

/// Truncated channel inversion with fixed rate at cutoff `β₀ > 0`.
pub fn capacity_tifr(dist: &MinSnrDistribution, beta0: f64) -> Result<CapacityResult> {
    let (series, outage) = capacity_tifr_series(dist, beta0)?;
    let check = capacity_tifr_quadrature(dist, beta0, &QuadratureSpec::default())?;
    Ok(CapacityResult {
        scheme: AdaptiveScheme::Tifr,
        capacity: series,
        cutoff: Some(beta0),
        outage_probability: Some(outage),
        backend: Backend::Series,
        error_estimate: relative_gap(series, check),
        fallback_terms: 0,
    })
}

/// Maximizer of the TIFR capacity over `β₀ ∈ [1e-6, 1]` by golden-section
/// search, compared against both endpoints.
pub fn optimize_tifr_cutoff(dist: &MinSnrDistribution) -> Result<CapacityResult> {
    let beta0 = tifr_argmax(dist)?;
    capacity_tifr(dist, beta0)
}

/// The maximizing `β₀` alone (series objective only).
pub fn tifr_argmax(dist: &MinSnrDistribution) -> Result<f64> {
    let objective = |b: f64| capacity_tifr_series(dist, b).map(|(c, _)| c);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (TIFR_SEARCH_LOW, TIFR_SEARCH_HIGH);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while b - a > TIFR_CUTOFF_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for end in [TIFR_SEARCH_LOW, TIFR_SEARCH_HIGH] {
        let v = objective(end)?;
        if v > best.1 {
            best = (end, v);
        }
    }
    Ok(best.0)
}

/// Capacity of `scheme`; TIFR is optimized over `β₀ ≤ 1`.
pub fn capacity(dist: &MinSnrDistribution, scheme: AdaptiveScheme) -> Result<CapacityResult> {
    match scheme {
        AdaptiveScheme::Ora => capacity_ora(dist),
        AdaptiveScheme::Opra => capacity_opra(dist),
        AdaptiveScheme::Tifr => optimize_tifr_cutoff(dist),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::RicianHop;
    use crate::special_functions::exponential_integral_e1;

    fn dist(kx: f64, ky: f64, gx: f64, gy: f64) -> MinSnrDistribution {
        MinSnrDistribution::with_default_control(
            RicianHop::new(kx, gx).unwrap(),
            RicianHop::new(ky, gy).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rayleigh_ora_closed_form() {
        let d = dist(0.0, 0.0, 10.0, 10.0);
        let lambda: f64 = 0.2;
        let expected = 0.5 * LOG2_E * lambda.exp() * exponential_integral_e1(lambda).unwrap();
        let r = capacity_ora(&d).unwrap();
        assert!(((r.capacity - expected) / expected).abs() < 1e-9);
        assert!((r.capacity - 1.077_223_415_758_445).abs() < 1e-9);
        assert!(r.error_estimate < 1e-8);
    }

    #[test]
    fn vanishing_snr() {
        let d = dist(1.0, 2.0, 1e-6, 1e-6);
        assert!(capacity_ora(&d).unwrap().capacity < 1e-6);
    }

    #[test]
    fn opra_dominates_ora() {
        for &(kx, ky, g) in &[(2.0, 2.0, 1.0), (0.0, 5.0, 5.0), (7.0, 1.0, 31.6)] {
            let d = dist(kx, ky, g, g);
            let ora = capacity_ora(&d).unwrap();
            let opra = capacity_opra(&d).unwrap();
            assert!(opra.capacity >= ora.capacity - 1e-9);
            let g0 = opra.cutoff.unwrap();
            assert!(g0 > 0.0 && g0 <= 1.0);
            assert!(opra.error_estimate < 1e-6, "{:?}", opra);
        }
    }

    #[test]
    fn cutoff_equation_decreases() {
        let d = dist(2.0, 2.0, 10.0, 10.0);
        let mut prev = f64::INFINITY;
        for i in 1..=50 {
            let g = i as f64 / 50.0;
            let v = opra_cutoff_equation(&d, g).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let g0 = opra_cutoff(&d).unwrap();
        let residual = cutoff_residual_quadrature(&d, g0, &QuadratureSpec::default()).unwrap();
        assert!(residual.abs() <= 1e-8, "residual {residual}");
    }

    #[test]
    fn tifr_checks() {
        let d = dist(2.0, 2.0, 10.0, 10.0);
        assert!(capacity_tifr(&d, 0.0).is_err());
        assert!(outage_probability(&d, -1.0).is_err());
        assert_eq!(outage_probability(&d, 0.0).unwrap(), 0.0);
        let r = capacity_tifr(&d, 0.5).unwrap();
        assert!(r.error_estimate < 1e-7, "{:?}", r);
        let opt = optimize_tifr_cutoff(&d).unwrap();
        assert!(opt.capacity >= r.capacity);
        let b = opt.cutoff.unwrap();
        assert!(b > 0.0 && b <= 1.0);
        let opra = capacity_opra(&d).unwrap();
        assert!(opt.capacity <= opra.capacity + 1e-9);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            "OPRA".parse::<AdaptiveScheme>().unwrap(),
            AdaptiveScheme::Opra
        );
        assert!("foo".parse::<AdaptiveScheme>().is_err());
    }
}
