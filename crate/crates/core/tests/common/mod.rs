//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use std::sync::OnceLock;

pub const EULER: f64 = 0.577_215_664_901_532_9;

pub fn rel_err(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// `ln n!` by direct summation.
pub fn ln_fact(n: u32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut v = vec![0.0; 5001];
        for k in 1..v.len() {
            v[k] = v[k - 1] + (k as f64).ln();
        }
        v
    });
    t[n as usize]
}

/// `p·ln x` with `0·ln 0 = 0`.
fn pow_ln(p: f64, ln_x: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * ln_x
    }
}

/// 20-point Gauss–Legendre rule on `[-1, 1]` by Newton iteration.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 20usize;
        let mut out = Vec::with_capacity(n);
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre()
        .iter()
        .map(|&(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl_panel(f, a, m);
    let right = gl_panel(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adapt(f, a, m, left, 0.5 * tol, depth - 1) + adapt(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Legendre on a finite interval, absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gl_panel(&f, a, b);
    adapt(&f, a, b, whole, tol, 16)
}

/// Fixed composite rule with `panels` equal panels.
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gl_panel(&f, a + h * i as f64, a + h * (i + 1) as f64))
        .sum()
}

/// `∫_a^b f` to relative accuracy `rel`.
pub fn integrate_rel<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    let scale = composite(&f, a, b, 32).abs();
    integrate(&f, a, b, (scale * rel).max(1e-300))
}

/// `∫_a^∞ f` over panels of width `width`, doubling after the first few,
/// until a panel adds less than `1e-17` of the running total.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, width: f64) -> f64 {
    let probe = composite(&f, a, a + 64.0 * width, 256).abs();
    let tol = (probe * 1e-14).max(1e-300);
    let mut total = 0.0;
    let mut lo = a;
    let mut w = width;
    for i in 0..200 {
        let piece = integrate(&f, lo, lo + w, tol);
        total += piece;
        lo += w;
        if i >= 4 {
            w *= 2.0;
            if piece.abs() <= 1e-17 * total.abs() {
                break;
            }
        }
    }
    total
}

/// `E₁(x)`: power series below 2, backward continued fraction above.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 2.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        -EULER - x.ln() - sum
    } else {
        // e^{-x} / (x + 1/(1 + 1/(x + 2/(1 + 2/(x + …)))))
        let mut t = x;
        for k in (1..400).rev() {
            let k = k as f64;
            t = x + k / (1.0 + k / t);
        }
        (-x).exp() / t
    }
}

/// `e^{−z} I₀(z)` from the power series, each term taken in log domain.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let ln_half = (0.5 * z).ln();
    let mut sum = 0.0;
    for k in 0..5000u32 {
        let lt = 2.0 * k as f64 * ln_half - 2.0 * ln_fact(k) - z;
        let t = lt.exp();
        sum += t;
        if k as f64 > 0.5 * z && t < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// One hop's SNR density `A e^{−aγ} I₀(2√(Kaγ))`.
pub fn rician_pdf(k: f64, mean: f64, g: f64) -> f64 {
    let a = (1.0 + k) / mean;
    let z = 2.0 * (k * a * g).sqrt();
    a * (-k - a * g + z).exp() * bessel_i0_scaled(z)
}

/// One hop's survival by quadrature of the Bessel-form density.
pub fn rician_survival(k: f64, mean: f64, g: f64) -> f64 {
    let width = mean / (1.0 + k) * 4.0;
    integrate_to_infinity(|t| rician_pdf(k, mean, t), g, width)
}

/// `ln B̃(n) = ln[K^n (1+K)^n / (γ̄^n n!² a^{n+1})]`.
fn ln_b_tilde(k: f64, mean: f64, n: u32) -> f64 {
    let a = (1.0 + k) / mean;
    let nf = n as f64;
    if k == 0.0 && n > 0 {
        return f64::NEG_INFINITY;
    }
    pow_ln(nf, k.ln()) + nf * (1.0 + k).ln()
        - nf * mean.ln()
        - 2.0 * ln_fact(n)
        - (nf + 1.0) * a.ln()
}

/// Expanded double series for the CDF of the minimum, with every upper
/// incomplete gamma of integer order written as a finite sum.
pub fn double_sum_cdf(kx: f64, gx: f64, ky: f64, gy: f64, g: f64, k_max: u32) -> f64 {
    let ax = (1.0 + kx) / gx;
    let ay = (1.0 + ky) / gy;
    let ln_ax_big = ax.ln() - kx;
    let ln_ay_big = ay.ln() - ky;
    // ln Γ(r+1, b γ) = −bγ + ln r! + ln Σ_m (bγ)^m/m!
    let ln_upper = |r: u32, b: f64| -> f64 {
        let x = b * g;
        let mut s = 0.0;
        for m in 0..=r {
            s += (pow_ln(m as f64, x.ln()) - ln_fact(m)).exp();
        }
        -x + ln_fact(r) + s.ln()
    };
    let ux: Vec<f64> = (0..=k_max).map(|r| ln_upper(r, ax)).collect();
    let uy: Vec<f64> = (0..=k_max).map(|r| ln_upper(r, ay)).collect();
    let mut sum = 0.0;
    for k in 0..=k_max {
        for n in 0..=k {
            let j = k - n;
            let lt = ln_ax_big
                + ln_ay_big
                + ln_b_tilde(kx, gx, n)
                + ln_b_tilde(ky, gy, j)
                + ux[n as usize]
                + uy[j as usize];
            sum += lt.exp();
        }
    }
    1.0 - sum
}

/// The expanded triple series for the density of the minimum.
pub fn triple_sum_pdf(kx: f64, gx: f64, ky: f64, gy: f64, g: f64, k_max: u32) -> f64 {
    let ax = (1.0 + kx) / gx;
    let ay = (1.0 + ky) / gy;
    let s = ax + ay;
    let ln_g = g.ln();
    let base = ax.ln() - kx + ay.ln() - ky;
    let mut sum = 0.0;
    for k in 0..=k_max {
        for n in 0..=k {
            let j = k - n;
            let pref = base + ln_b_tilde(kx, gx, n) + ln_b_tilde(ky, gy, j);
            if pref == f64::NEG_INFINITY {
                continue;
            }
            let p1 = pref + (n as f64 + 1.0) * ax.ln() + ln_fact(j);
            for m1 in 0..=j {
                let e = p1 + pow_ln(m1 as f64, ay.ln()) - ln_fact(m1)
                    + pow_ln((n + m1) as f64, ln_g)
                    - s * g;
                sum += e.exp();
            }
            let p2 = pref + (j as f64 + 1.0) * ay.ln() + ln_fact(n);
            for m2 in 0..=n {
                let e = p2 + pow_ln(m2 as f64, ax.ln()) - ln_fact(m2)
                    + pow_ln((j + m2) as f64, ln_g)
                    - s * g;
                sum += e.exp();
            }
        }
    }
    sum
}

/// Density of the minimum from the Bessel forms: `f_x S_y + f_y S_x`.
pub fn bessel_min_pdf(kx: f64, gx: f64, ky: f64, gy: f64, g: f64) -> f64 {
    rician_pdf(kx, gx, g) * rician_survival(ky, gy, g)
        + rician_pdf(ky, gy, g) * rician_survival(kx, gx, g)
}

/// Total rate `a_x + a_y`.
pub fn rate_sum(kx: f64, gx: f64, ky: f64, gy: f64) -> f64 {
    (1.0 + kx) / gx + (1.0 + ky) / gy
}

/// Standard normal two-sided tail helper: |z| at or below `limit`.
pub fn within_z(value: f64, reference: f64, stderr: f64, limit: f64) -> bool {
    (value - reference).abs() <= limit * stderr
}
