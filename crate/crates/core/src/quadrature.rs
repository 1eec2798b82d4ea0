//! Adaptive Gauss–Kronrod quadrature.
//!
//! A global-subdivision driver over the 21-point Kronrod extension of the
//! 10-point Gauss rule, with the QUADPACK error rescaling. Semi-infinite
//! integrals are truncated at a point where a caller-supplied analytic tail
//! bound drops below the absolute tolerance; the bound is added to the
//! reported error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and subdivision budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-14,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(
        relative_tolerance: f64,
        absolute_tolerance: f64,
        max_subdivisions: usize,
    ) -> Result<Self> {
        let spec = Self {
            relative_tolerance,
            absolute_tolerance,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) || !(self.absolute_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerances must be positive (relative {}, absolute {})",
                self.relative_tolerance, self.absolute_tolerance
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
    /// Upper limit actually used for semi-infinite integrals.
    pub truncation_point: Option<f64>,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[allow(clippy::needless_range_loop)]
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut result_gauss = 0.0;
    let mut result_kronrod = f_center * WGK[10];
    let mut result_abs = result_kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        result_gauss += WG[j] * (f1 + f2);
        result_kronrod += WGK[jtw] * (f1 + f2);
        result_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        result_kronrod += WGK[jtwm1] * (f1 + f2);
        result_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * result_kronrod;
    let mut result_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = result_kronrod * half;
    let result_abs = result_abs * half.abs();
    let result_asc = result_asc * half.abs();
    let mut error = ((result_kronrod - result_gauss) * half).abs();
    if result_asc != 0.0 && error != 0.0 {
        error = result_asc * (200.0 * error / result_asc).powf(1.5).min(1.0);
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * result_abs);
    }

    Segment { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
            truncation_point: None,
        });
    }

    let first = kronrod21(&f, a, b);
    let mut total = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;

    loop {
        let target = spec
            .absolute_tolerance
            .max(spec.relative_tolerance * total.abs());
        if total_error <= target {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: total_error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: total_error,
                subdivisions,
            });
        }
        let left = kronrod21(&f, worst.a, mid);
        let right = kronrod21(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;

        // Running sums drift; resum periodically.
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_error = heap.iter().map(|s| s.error).sum();
        }
    }

    let value = heap.iter().map(|s| s.value).sum();
    let abs_error = heap.iter().map(|s| s.error).sum();
    Ok(QuadratureResult {
        value,
        abs_error,
        subdivisions,
        truncation_point: None,
    })
}

/// Integrates `f` over `[lower, ∞)`.
///
/// `tail_bound(x)` must bound `∫_x^∞ |f(t)| dt` from above and tend to zero.
/// The range is truncated at `lower + L`, doubling `L` from `initial_length`
/// until the bound falls under the absolute tolerance.
pub fn integrate_semi_infinite<F, T>(
    f: F,
    lower: f64,
    initial_length: f64,
    tail_bound: T,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(initial_length > 0.0) || !lower.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "semi-infinite quadrature needs finite lower limit and positive initial length, got {lower}, {initial_length}"
        )));
    }
    let mut length = initial_length;
    let mut tail = tail_bound(lower + length);
    let mut doublings = 0;
    while !(tail < spec.absolute_tolerance) {
        length *= 2.0;
        doublings += 1;
        if doublings > 200 || !length.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                estimate: f64::NAN,
                error: tail,
                subdivisions: 0,
            });
        }
        tail = tail_bound(lower + length);
    }
    let upper = lower + length;
    let body = integrate(f, lower, upper, spec)?;
    Ok(QuadratureResult {
        value: body.value,
        abs_error: body.abs_error + tail,
        subdivisions: body.subdivisions,
        truncation_point: Some(upper),
    })
}

/// As [`integrate_semi_infinite`], with the absolute tolerance taken relative
/// to the size of the integral.
///
/// A coarse pilot pass over `[lower, lower + initial_length]` fixes the
/// magnitude `M`; the integrand and tail bound are divided by `M` so the
/// absolute floor does not swamp integrals that are tiny or huge.
pub fn integrate_semi_infinite_relative<F, T>(
    f: F,
    lower: f64,
    initial_length: f64,
    tail_bound: T,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let pilot_spec = QuadratureSpec {
        relative_tolerance: 1e-3,
        absolute_tolerance: f64::MIN_POSITIVE,
        max_subdivisions: spec.max_subdivisions,
    };
    let pilot = integrate(&f, lower, lower + initial_length, &pilot_spec)
        .map(|r| r.value.abs())
        .unwrap_or(0.0);
    let scale = if pilot.is_finite() && pilot > 0.0 {
        pilot
    } else {
        1.0
    };
    let r = integrate_semi_infinite(
        |x| f(x) / scale,
        lower,
        initial_length,
        |x| tail_bound(x) / scale,
        spec,
    )?;
    Ok(QuadratureResult {
        value: r.value * scale,
        abs_error: r.abs_error * scale,
        ..r
    })
}
