//! Monte-Carlo likelihood-ratio attacks against claimed tradeoff curves.
//!
//! The adversary is white-box: it computes exact log-likelihood ratios from
//! the mechanism's own densities (a weaker adversary could not falsify a
//! claim), sweeps thresholds over empirical quantiles, and flags operating
//! points that fall below the claimed curve by more than a distribution-free
//! confidence radius. Radii are Hoeffding bounds union-bounded over every
//! estimate in the sweep, two-sided at the 99% family level, so a sound
//! claim is flagged with probability at most 1%.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DpaError, Result};
use crate::mechanism::{log_density, sample_with, MechanismSpec};
use crate::tradeoff::TradeoffCurve;

/// Number of threshold levels in a sweep.
const THRESHOLD_LEVELS: usize = 512;
/// Family-wise error rate of the confidence radii.
const FAMILY_ALPHA: f64 = 0.01;
/// Samples drawn per parallel chunk; chunk seeds are derived from the run
/// seed so the stream is independent of the thread count.
const CHUNK: usize = 1 << 16;

/// One threshold's estimated operating point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub p_fa_estimate: f64,
    pub p_md_estimate: f64,
    pub confidence_radius: f64,
}

/// An operating point that fell below the claimed curve beyond the radius.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub p_fa: f64,
    pub p_md: f64,
    pub bound_value: f64,
}

/// Result of an attack run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackReport {
    pub threshold_sweep: Vec<ThresholdPoint>,
    pub violations: Vec<Violation>,
}

/// Hoeffding radius covering `estimates` two-sided estimates at family level
/// `FAMILY_ALPHA`: `sqrt(ln(2 estimates / alpha) / (2 n))`.
fn hoeffding_radius(n: usize, estimates: usize) -> f64 {
    ((2.0 * estimates as f64 / FAMILY_ALPHA).ln() / (2.0 * n as f64)).sqrt()
}

/// Draws `n` mechanism outputs under the given query value and returns the
/// log-likelihood ratio `ln f_s(y) - ln f_0(y)` of each.
fn sample_llrs(spec: &MechanismSpec, query: f64, n: usize, seed: u64) -> Vec<f64> {
    let s = spec.sensitivity;
    let chunks: Vec<(usize, usize)> = (0..n.div_ceil(CHUNK))
        .map(|c| (c, (n - c * CHUNK).min(CHUNK)))
        .collect();
    let mut out: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(c, len)| {
            // Distinct golden-ratio offsets give disjoint substreams per
            // chunk and per hypothesis.
            let chunk_seed = seed
                .wrapping_add((c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
                .wrapping_add(query.to_bits());
            let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed);
            (0..len)
                .map(|_| {
                    let y = sample_with(spec, query, &mut rng);
                    log_density(spec, s, y) - log_density(spec, 0.0, y)
                })
                .collect()
        })
        .collect();
    let mut flat = Vec::with_capacity(n);
    for chunk in out.iter_mut() {
        flat.append(chunk);
    }
    flat
}

/// Threshold grid: empirical quantiles of the pooled ratios, deduplicated.
fn quantile_thresholds(h0: &[f64], h1: &[f64]) -> Vec<f64> {
    let mut pooled: Vec<f64> = h0.iter().chain(h1.iter()).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).expect("finite llrs"));
    let mut thresholds = Vec::with_capacity(THRESHOLD_LEVELS);
    for level in 0..THRESHOLD_LEVELS {
        let q = (level as f64 + 0.5) / THRESHOLD_LEVELS as f64;
        let idx = ((pooled.len() as f64 * q) as usize).min(pooled.len() - 1);
        thresholds.push(pooled[idx]);
    }
    thresholds.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    thresholds
}

fn sweep(
    h0_llrs: &mut [f64],
    h1_llrs: &mut [f64],
    radius: f64,
) -> (Vec<f64>, Vec<ThresholdPoint>) {
    let thresholds = quantile_thresholds(h0_llrs, h1_llrs);
    h0_llrs.sort_by(|a, b| a.partial_cmp(b).expect("finite llrs"));
    h1_llrs.sort_by(|a, b| a.partial_cmp(b).expect("finite llrs"));
    let n0 = h0_llrs.len() as f64;
    let n1 = h1_llrs.len() as f64;
    let points = thresholds
        .iter()
        .map(|&t| {
            // Reject the null when the ratio exceeds the threshold.
            let above = h0_llrs.partition_point(|&v| v <= t);
            let p_fa = (h0_llrs.len() - above) as f64 / n0;
            let below_eq = h1_llrs.partition_point(|&v| v <= t);
            let p_md = below_eq as f64 / n1;
            ThresholdPoint {
                threshold: t,
                p_fa_estimate: p_fa,
                p_md_estimate: p_md,
                confidence_radius: radius,
            }
        })
        .collect();
    (thresholds, points)
}

/// Runs the optimal likelihood-ratio attack and records operating points
/// falling below the claimed curve beyond the confidence radius.
pub fn run_attack(
    spec: &MechanismSpec,
    claimed: &TradeoffCurve,
    num_samples: usize,
    rng_seed: u64,
) -> Result<AttackReport> {
    if num_samples < 1000 {
        return Err(DpaError::InvalidInput(format!(
            "need at least 1000 samples, got {num_samples}"
        )));
    }
    let mut h0 = sample_llrs(spec, 0.0, num_samples, rng_seed);
    let mut h1 = sample_llrs(spec, spec.sensitivity, num_samples, rng_seed ^ 0x5DEE_CE66);
    // Two estimates per threshold, union-bounded.
    let radius = hoeffding_radius(num_samples, 2 * THRESHOLD_LEVELS);
    let (_, points) = sweep(&mut h0, &mut h1, radius);
    let violations = points
        .iter()
        .filter_map(|pt| {
            // Conservative comparison: both coordinates shifted by their
            // radii toward the claim before flagging.
            let bound_value = claimed.eval((pt.p_fa_estimate + radius).min(1.0));
            if pt.p_md_estimate + radius < bound_value {
                Some(Violation {
                    p_fa: pt.p_fa_estimate,
                    p_md: pt.p_md_estimate,
                    bound_value,
                })
            } else {
                None
            }
        })
        .collect();
    Ok(AttackReport {
        threshold_sweep: points,
        violations,
    })
}

/// Estimates the mechanism's tradeoff curve: the lower convex hull of the
/// empirical operating points of the threshold sweep.
pub fn empirical_tradeoff(
    spec: &MechanismSpec,
    num_samples: usize,
    rng_seed: u64,
) -> Result<TradeoffCurve> {
    if num_samples < 1000 {
        return Err(DpaError::InvalidInput(format!(
            "need at least 1000 samples, got {num_samples}"
        )));
    }
    let mut h0 = sample_llrs(spec, 0.0, num_samples, rng_seed);
    let mut h1 = sample_llrs(spec, spec.sensitivity, num_samples, rng_seed ^ 0x5DEE_CE66);
    let radius = hoeffding_radius(num_samples, 2 * THRESHOLD_LEVELS);
    let (_, points) = sweep(&mut h0, &mut h1, radius);
    let mut raw: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.p_fa_estimate, p.p_md_estimate))
        .collect();
    raw.push((0.0, 1.0));
    raw.push((1.0, 0.0));
    let hull = lower_convex_hull(raw);
    TradeoffCurve::empirical(hull)
}

/// Lower convex hull by monotone chain over points sorted by x.
fn lower_convex_hull(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}
