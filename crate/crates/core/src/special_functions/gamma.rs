//! Gamma function, incomplete gamma functions and Poisson weights.

use crate::error::{domain, Result};

#[allow(clippy::excessive_precision)]
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln n!`
pub fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `Γ(x)` for `x > 0`; overflows to `+∞` above about 171.6.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `n ln x` with the convention `0 ln 0 = 0`.
pub(crate) fn xlogy(n: f64, x: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * x.ln()
    }
}

const SERIES_EPS: f64 = 1e-17;
const MAX_ITER: usize = 10_000;

/// Lower regularized `P(a, x)` by its power series; good for `x < a + 1`.
fn lower_regularized_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * SERIES_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// `ln Γ(a, x)` by the Lentz continued fraction; good for `x ≥ a + 1`.
fn ln_upper_continued_fraction(a: f64, x: f64) -> f64 {
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < SERIES_EPS {
            break;
        }
    }
    -x + a * x.ln() + h.ln()
}

/// Upper incomplete gamma `Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    const NAME: &str = "upper_incomplete_gamma";
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(
            NAME,
            format!("order must be positive and finite, got {a}"),
        ));
    }
    if !(x >= 0.0) {
        return Err(domain(
            NAME,
            format!("argument must be nonnegative, got {x}"),
        ));
    }
    if x == 0.0 {
        return Ok(gamma(a));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        let p = lower_regularized_series(a, x);
        Ok(gamma(a) * (1.0 - p))
    } else {
        Ok(ln_upper_continued_fraction(a, x).exp())
    }
}

/// `ln Q(n+1, x) = ln( e^{-x} Σ_{m=0}^{n} x^m / m! )` for integer order.
///
/// Sums the finite series outward from its largest term so that neither
/// `x^m` nor `m!` is formed explicitly.
pub fn ln_regularized_upper_gamma(n_plus_1: u32, x: f64) -> Result<f64> {
    const NAME: &str = "regularized_upper_gamma";
    if n_plus_1 == 0 {
        return Err(domain(NAME, "integer order must be at least 1"));
    }
    if !(x >= 0.0) {
        return Err(domain(
            NAME,
            format!("argument must be nonnegative, got {x}"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let n = n_plus_1 - 1;
    let peak = (x.floor().min(n as f64)) as u32;
    let ln_peak = xlogy(peak as f64, x) - ln_factorial(peak);

    let mut sum = 1.0;
    let mut ratio = 1.0;
    for m in (1..=peak).rev() {
        ratio *= m as f64 / x;
        sum += ratio;
        if ratio < f64::EPSILON * 1e-3 * sum {
            break;
        }
    }
    ratio = 1.0;
    for m in peak + 1..=n {
        ratio *= x / m as f64;
        sum += ratio;
        if ratio < f64::EPSILON * 1e-3 * sum {
            break;
        }
    }
    Ok(-x + ln_peak + sum.ln())
}

/// Regularized upper gamma `Q(n+1, x) = Γ(n+1, x) / n!` for integer order.
pub fn regularized_upper_gamma(n_plus_1: u32, x: f64) -> Result<f64> {
    Ok(ln_regularized_upper_gamma(n_plus_1, x)?.exp().min(1.0))
}

/// `ln Pr(N = n)` for `N ~ Poisson(mean)`; `mean = 0` puts all mass on 0.
pub fn ln_poisson_pmf(mean: f64, n: u32) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + xlogy(n as f64, mean) - ln_factorial(n)
}

/// `Pr(N ≥ n)` for `N ~ Poisson(mean)`, accurate deep into the tail.
pub fn poisson_upper_tail(mean: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    if (n as f64) <= mean + 1.0 {
        let head: f64 = (0..n).map(|m| ln_poisson_pmf(mean, m).exp()).sum();
        return (1.0 - head).max(0.0);
    }
    // Terms decay at least geometrically once m + 1 > mean.
    let mut term = ln_poisson_pmf(mean, n).exp();
    let mut sum = term;
    let mut m = n;
    while term > sum * f64::EPSILON * 1e-3 && term > 0.0 {
        m += 1;
        term *= mean / m as f64;
        sum += term;
    }
    sum
}
