//! Exponential integral `E1`.

use crate::error::{domain, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(x) = ∫_1^∞ t^{-1} e^{-xt} dt` for `x > 0`.
pub fn exponential_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(
            "exponential_integral_e1",
            format!("argument must be positive, got {x}"),
        ));
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(scaled_e1_continued_fraction(x) * (-x).exp())
    }
}

/// `e^x E1(x)`, finite for large `x` where `E1` alone underflows.
pub fn scaled_exponential_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(
            "scaled_exponential_integral_e1",
            format!("argument must be positive, got {x}"),
        ));
    }
    if x <= 1.0 {
        Ok(e1_series(x) * x.exp())
    } else {
        Ok(scaled_e1_continued_fraction(x))
    }
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 1..200 {
        power *= -x / k as f64;
        let term = power / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn scaled_e1_continued_fraction(x: f64) -> f64 {
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-17 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};

    fn quadrature_e1(x: f64) -> f64 {
        let spec = QuadratureSpec {
            relative_tolerance: 1e-13,
            ..Default::default()
        };
        // tail ∫_T^∞ e^{-xt}/t dt ≤ e^{-xT}/(xT)
        integrate_semi_infinite(
            |t: f64| (-x * t).exp() / t,
            1.0,
            1.0,
            |t: f64| (-x * t).exp() / (x * t),
            &spec,
        )
        .unwrap()
        .value
    }

    #[test]
    fn e1_at_one_matches_quadrature() {
        let oracle = quadrature_e1(1.0);
        let v = exponential_integral_e1(1.0).unwrap();
        assert!(((v - oracle) / oracle).abs() < 1e-12);
        assert!((v - 0.219_383_934_395_520_27).abs() < 1e-15);
    }

    #[test]
    fn e1_across_branches() {
        for &x in &[0.05, 0.5, 0.999, 1.001, 2.0, 7.5, 30.0] {
            let oracle = quadrature_e1(x);
            let v = exponential_integral_e1(x).unwrap();
            assert!(((v - oracle) / oracle).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn e1_small_argument_limit() {
        let x = 1e-6;
        let v = exponential_integral_e1(x).unwrap() + x.ln();
        assert!((v + EULER_GAMMA).abs() < 1e-6);
    }

    #[test]
    fn e1_vanishes_at_infinity() {
        assert!(exponential_integral_e1(800.0).unwrap() == 0.0);
        let s = scaled_exponential_integral_e1(800.0).unwrap();
        assert!((s * 800.0 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn e1_domain() {
        assert!(exponential_integral_e1(0.0).is_err());
        assert!(exponential_integral_e1(-1.0).is_err());
    }
}
