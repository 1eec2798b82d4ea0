//! Monte Carlo oracle for the analytic results.
//!
//! Each hop SNR is drawn as `G₁² + G₂²` with `G₁ ~ N(s, σ²/2)`,
//! `G₂ ~ N(0, σ²/2)`, `σ² = γ̄/(1+K)` and `s² = Kσ²`. Draw `i` of a hop is a
//! pure function of `(seed, stream, i)`: a ChaCha8 stream positioned at word
//! `4i` feeds one Box–Muller pair. Hop x uses stream 0 and hop y stream 1.
//! Work is split into fixed-size chunks that may run in parallel; partial
//! results are merged in chunk order, so estimates do not depend on the
//! number of threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::AdaptiveScheme;
use crate::distribution::{MinSnrDistribution, RicianHop};
use crate::error::{Error, Result};

const CHUNK: usize = 1 << 16;
/// `u32` words consumed per hop draw (two `u64` uniforms).
const WORDS_PER_DRAW: u128 = 4;
const STREAM_X: u64 = 0;
const STREAM_Y: u64 = 1;

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;

/// A Monte Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl SimulationEstimate {
    /// `(value − reference) / standard_error`; zero when both errors vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.value - reference;
        if self.standard_error > 0.0 {
            d / self.standard_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct HopSampler {
    los_in_phase: f64,
    los_quadrature: f64,
    component_sd: f64,
}

impl HopSampler {
    fn new(hop: &RicianHop, los_phase: f64) -> Self {
        let scatter = hop.mean_snr() / (1.0 + hop.k_factor());
        let los = (hop.k_factor() * scatter).sqrt();
        Self {
            los_in_phase: los * los_phase.cos(),
            los_quadrature: los * los_phase.sin(),
            component_sd: (scatter / 2.0).sqrt(),
        }
    }

    fn fill(&self, seed: u64, stream: u64, start: usize, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(start as u128 * WORDS_PER_DRAW);
        for v in out.iter_mut() {
            let u1 = open_unit(rng.next_u64());
            let u2 = open_unit(rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt();
            let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
            let g1 = self.los_in_phase + self.component_sd * r * cos;
            let g2 = self.los_quadrature + self.component_sd * r * sin;
            *v = g1 * g1 + g2 * g2;
        }
    }
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| {
            let start = c * CHUNK;
            (start, (start + CHUNK).min(n))
        })
        .collect()
}

/// `n` draws of one hop's instantaneous SNR.
pub fn sample_hop_snr(hop: &RicianHop, seed: u64, n: usize) -> Vec<f64> {
    sample_hop_snr_with_phase(hop, 0.0, seed, n)
}

/// As [`sample_hop_snr`] with the LOS power split as `(s cos φ, s sin φ)`.
pub fn sample_hop_snr_with_phase(hop: &RicianHop, los_phase: f64, seed: u64, n: usize) -> Vec<f64> {
    let sampler = HopSampler::new(hop, los_phase);
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, slice)| sampler.fill(seed, STREAM_X, c * CHUNK, slice));
    out
}

/// Applies `f` to each chunk of paired minimum draws and returns the
/// per-chunk results in chunk order.
fn map_min_chunks<T, F>(dist: &MinSnrDistribution, seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let sx = HopSampler::new(dist.hop_x(), 0.0);
    let sy = HopSampler::new(dist.hop_y(), 0.0);
    chunk_ranges(n)
        .into_par_iter()
        .map(|(start, end)| {
            let mut x = vec![0.0; end - start];
            let mut y = vec![0.0; end - start];
            sx.fill(seed, STREAM_X, start, &mut x);
            sy.fill(seed, STREAM_Y, start, &mut y);
            for (a, b) in x.iter_mut().zip(&y) {
                *a = a.min(*b);
            }
            f(&x)
        })
        .collect()
}

/// `n` draws of `γ_z = min(γ_x, γ_y)`.
pub fn sample_min_snr(dist: &MinSnrDistribution, seed: u64, n: usize) -> Vec<f64> {
    map_min_chunks(dist, seed, n, |c| c.to_vec()).concat()
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// Counts of draws `≤ g` for each `g` in `grid`.
fn count_below(samples: &[f64], grid: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();
    let mut bins = vec![0u64; sorted.len() + 1];
    for &v in samples {
        bins[sorted.partition_point(|&g| g < v)] += 1;
    }
    let mut counts = vec![0u64; grid.len()];
    let mut running = 0;
    for (k, &i) in order.iter().enumerate() {
        running += bins[k];
        counts[i] = running;
    }
    counts
}

fn binomial_estimate(count: u64, n: usize, seed: u64) -> SimulationEstimate {
    let p = count as f64 / n as f64;
    SimulationEstimate {
        value: p,
        standard_error: (p * (1.0 - p) / n as f64).sqrt(),
        samples: n,
        seed,
    }
}

/// Empirical CDF of the minimum at each grid point.
pub fn estimate_min_cdf(
    dist: &MinSnrDistribution,
    gamma_grid: &[f64],
    seed: u64,
    n: usize,
) -> Result<Vec<SimulationEstimate>> {
    check_samples(n)?;
    let partial = map_min_chunks(dist, seed, n, |c| count_below(c, gamma_grid));
    let mut totals = vec![0u64; gamma_grid.len()];
    for p in partial {
        for (t, c) in totals.iter_mut().zip(p) {
            *t += c;
        }
    }
    Ok(totals
        .into_iter()
        .map(|c| binomial_estimate(c, n, seed))
        .collect())
}

/// Empirical outage probability `Pr(γ_z < β₀)`.
pub fn estimate_outage(
    dist: &MinSnrDistribution,
    beta0: f64,
    seed: u64,
    n: usize,
) -> Result<SimulationEstimate> {
    Ok(estimate_min_cdf(dist, &[beta0], seed, n)?[0])
}

/// Empirical survival `Pr(γ > g)` of a single hop.
pub fn estimate_hop_survival(
    hop: &RicianHop,
    gamma: f64,
    seed: u64,
    n: usize,
) -> Result<SimulationEstimate> {
    check_samples(n)?;
    let samples = sample_hop_snr(hop, seed, n);
    let above = samples.iter().filter(|&&v| v > gamma).count() as u64;
    Ok(binomial_estimate(above, n, seed))
}

/// Histogram density of a single hop on `[g − w/2, g + w/2)`.
pub fn estimate_hop_pdf(
    hop: &RicianHop,
    gamma: f64,
    bin_width: f64,
    seed: u64,
    n: usize,
) -> Result<SimulationEstimate> {
    check_samples(n)?;
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let (lo, hi) = (gamma - 0.5 * bin_width, gamma + 0.5 * bin_width);
    let samples = sample_hop_snr(hop, seed, n);
    let inside = samples.iter().filter(|&&v| v >= lo && v < hi).count() as u64;
    let p = binomial_estimate(inside, n, seed);
    Ok(SimulationEstimate {
        value: p.value / bin_width,
        standard_error: p.standard_error / bin_width,
        ..p
    })
}

/// Running first and second moments of a pair `(Y₁, Y₂)`, mergeable.
#[derive(Debug, Clone, Copy, Default)]
struct PairMoments {
    n: f64,
    mean: [f64; 2],
    /// Σ (y_i − mean_i)(y_j − mean_j) for (1,1), (2,2), (1,2)
    co: [f64; 3],
}

impl PairMoments {
    fn push(&mut self, y1: f64, y2: f64) {
        self.n += 1.0;
        let d1 = y1 - self.mean[0];
        let d2 = y2 - self.mean[1];
        self.mean[0] += d1 / self.n;
        self.mean[1] += d2 / self.n;
        self.co[0] += d1 * (y1 - self.mean[0]);
        self.co[1] += d2 * (y2 - self.mean[1]);
        self.co[2] += d1 * (y2 - self.mean[1]);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d1 = other.mean[0] - self.mean[0];
        let d2 = other.mean[1] - self.mean[1];
        let w = self.n * other.n / n;
        Self {
            n,
            mean: [
                self.mean[0] + d1 * other.n / n,
                self.mean[1] + d2 * other.n / n,
            ],
            co: [
                self.co[0] + other.co[0] + d1 * d1 * w,
                self.co[1] + other.co[1] + d2 * d2 * w,
                self.co[2] + other.co[2] + d1 * d2 * w,
            ],
        }
    }

    /// Covariance entries of the sample means.
    fn mean_covariance(&self) -> [f64; 3] {
        let denom = (self.n - 1.0).max(1.0) * self.n;
        [self.co[0] / denom, self.co[1] / denom, self.co[2] / denom]
    }
}

fn pair_moments<F>(dist: &MinSnrDistribution, seed: u64, n: usize, f: F) -> PairMoments
where
    F: Fn(f64) -> (f64, f64) + Sync,
{
    map_min_chunks(dist, seed, n, |chunk| {
        let mut m = PairMoments::default();
        for &g in chunk {
            let (a, b) = f(g);
            m.push(a, b);
        }
        m
    })
    .into_iter()
    .fold(PairMoments::default(), PairMoments::merge)
}

fn mean_estimate(m: &PairMoments, seed: u64, n: usize) -> SimulationEstimate {
    SimulationEstimate {
        value: m.mean[0],
        standard_error: m.mean_covariance()[0].max(0.0).sqrt(),
        samples: n,
        seed,
    }
}

fn tifr_value(mean_inverse: f64, fraction: f64) -> f64 {
    0.5 * (1.0 / mean_inverse).ln_1p() * std::f64::consts::LOG2_E * fraction
}

/// Empirical OPRA cutoff: root of `(1/γ₀)·P̂(γ ≥ γ₀) − Ê[1/γ; γ ≥ γ₀] = 1`.
fn empirical_opra_cutoff(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len() as f64;
    // suffix sums of 1/γ
    let mut suffix = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix[i] = suffix[i + 1] + 1.0 / sorted[i];
    }
    let h = |g: f64| {
        let i = sorted.partition_point(|&v| v < g);
        let above = (sorted.len() - i) as f64 / n;
        above / g - suffix[i] / n - 1.0
    };
    let (mut lo, mut hi) = (1e-12, 1.0);
    if !(h(lo) > 0.0 && h(hi) < 0.0) {
        return Err(Error::DegenerateSample(
            "empirical OPRA cutoff is not bracketed on (0, 1]".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Empirical TIFR maximizer over `β₀ ∈ [1e-6, 1]` by golden-section search.
fn empirical_tifr_cutoff(sorted: &[f64]) -> Result<f64> {
    use crate::capacity::{TIFR_CUTOFF_TOLERANCE, TIFR_SEARCH_HIGH, TIFR_SEARCH_LOW};
    let n = sorted.len() as f64;
    let mut suffix = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix[i] = suffix[i + 1] + 1.0 / sorted[i];
    }
    let objective = |b: f64| {
        let i = sorted.partition_point(|&v| v < b);
        if i == sorted.len() {
            return 0.0;
        }
        tifr_value(suffix[i] / n, (sorted.len() - i) as f64 / n)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (TIFR_SEARCH_LOW, TIFR_SEARCH_HIGH);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    while b - a > TIFR_CUTOFF_TOLERANCE {
        if objective(c) >= objective(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    Ok(0.5 * (a + b))
}

fn sorted_min_samples(dist: &MinSnrDistribution, seed: u64, n: usize) -> Vec<f64> {
    let mut s = sample_min_snr(dist, seed, n);
    s.sort_by(f64::total_cmp);
    s
}

/// Sample-mean estimate of a scheme's capacity (bit/s/Hz).
///
/// ORA averages `0.5 log₂(1+γ)`; OPRA averages `0.5 log₂(γ/γ₀)·1{γ ≥ γ₀}`;
/// TIFR forms `0.5 log₂(1 + 1/Ê[1{γ≥β₀}/γ]) · P̂(γ ≥ β₀)` with a delta-method
/// standard error. A missing cutoff is estimated from the same draws.
pub fn estimate_capacity(
    dist: &MinSnrDistribution,
    scheme: AdaptiveScheme,
    cutoff: Option<f64>,
    seed: u64,
    n: usize,
) -> Result<SimulationEstimate> {
    check_samples(n)?;
    if let Some(c) = cutoff {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be positive, got {c}"
            )));
        }
    }
    match scheme {
        AdaptiveScheme::Ora => {
            let m = pair_moments(dist, seed, n, |g| {
                (0.5 * g.ln_1p() * std::f64::consts::LOG2_E, 0.0)
            });
            Ok(mean_estimate(&m, seed, n))
        }
        AdaptiveScheme::Opra => {
            let g0 = match cutoff {
                Some(c) => c,
                None => empirical_opra_cutoff(&sorted_min_samples(dist, seed, n))?,
            };
            let m = pair_moments(dist, seed, n, |g| {
                let v = if g >= g0 { 0.5 * (g / g0).log2() } else { 0.0 };
                (v, 0.0)
            });
            if m.mean[0] == 0.0 {
                return Err(Error::DegenerateSample(format!(
                    "no draw exceeds the cutoff {g0}"
                )));
            }
            Ok(mean_estimate(&m, seed, n))
        }
        AdaptiveScheme::Tifr => {
            let b0 = match cutoff {
                Some(c) => c,
                None => empirical_tifr_cutoff(&sorted_min_samples(dist, seed, n))?,
            };
            let m = pair_moments(dist, seed, n, |g| {
                if g >= b0 {
                    (1.0 / g, 1.0)
                } else {
                    (0.0, 0.0)
                }
            });
            let (m1, m2) = (m.mean[0], m.mean[1]);
            if m2 == 0.0 {
                return Err(Error::DegenerateSample(format!(
                    "no draw exceeds the cutoff {b0}"
                )));
            }
            let value = tifr_value(m1, m2);
            let ln2 = std::f64::consts::LN_2;
            let d1 = -0.5 * m2 / (ln2 * m1 * (m1 + 1.0));
            let d2 = 0.5 * (1.0 / m1).ln_1p() / ln2;
            let [v11, v22, v12] = m.mean_covariance();
            let var = d1 * d1 * v11 + d2 * d2 * v22 + 2.0 * d1 * d2 * v12;
            Ok(SimulationEstimate {
                value,
                standard_error: var.max(0.0).sqrt(),
                samples: n,
                seed,
            })
        }
    }
}
