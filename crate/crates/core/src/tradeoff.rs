//! Hypothesis-testing error tradeoff curves.
//!
//! A curve maps a false-alarm probability to a lower bound on the
//! missed-detection probability of any test. The `(epsilon, delta)` guarantee
//! is the piecewise-linear curve
//! `max{0, 1 - delta - e^eps x, e^{-eps} (1 - delta - x)}`; testing between
//! `N(0,1)` and `N(mu,1)` gives the Gaussian curve
//! `x -> Phi(Phi^{-1}(1 - x) - mu)`; and a discretized loss distribution
//! yields the exact curve of its own discrete pair by sweeping likelihood
//! thresholds, with chords standing in for randomized tests.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{DpaError, Result};
use crate::pld::PrivacyLossDistribution;

/// Default export grid for CSV and domination checks.
pub const DEFAULT_CURVE_POINTS: usize = 2048;

/// Lower-bound curve on the missed-detection probability.
#[derive(Clone, Debug)]
pub enum TradeoffCurve {
    /// The `(epsilon, delta)`-DP piecewise-linear bound.
    PiecewiseLinear { epsilon: f64, delta: f64 },
    /// Tradeoff of testing `N(0,1)` against `N(mu,1)`.
    Gaussian { mu: f64 },
    /// Threshold-test polylines of a discretized pair; the curve is the
    /// pointwise max over the stored branches (forward and reflected
    /// reverse), each a valid lower bound.
    FromPld { branches: Vec<Vec<(f64, f64)>> },
    /// Piecewise-linear interpolation of estimated points.
    Empirical { points: Vec<(f64, f64)> },
}

impl TradeoffCurve {
    /// Lower bound on the missed-detection probability at false alarm `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            TradeoffCurve::PiecewiseLinear { epsilon, delta } => {
                let a = 1.0 - delta - epsilon.exp() * x;
                let b = (-epsilon).exp() * (1.0 - delta - x);
                a.max(b).max(0.0).min(1.0)
            }
            TradeoffCurve::Gaussian { mu } => {
                if x <= 0.0 {
                    return 1.0;
                }
                if x >= 1.0 {
                    return 0.0;
                }
                let n = Normal::new(0.0, 1.0).expect("unit normal");
                n.cdf(norm_quantile(&n, 1.0 - x) - mu).clamp(0.0, 1.0)
            }
            TradeoffCurve::FromPld { branches } => branches
                .iter()
                .map(|b| eval_polyline(b, x))
                .fold(0.0, f64::max),
            TradeoffCurve::Empirical { points } => eval_polyline(points, x),
        }
    }

    /// Samples the curve on a uniform grid, suitable for CSV export.
    pub fn to_points(&self, grid_points: usize) -> Vec<(f64, f64)> {
        let n = grid_points.max(2);
        (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                (x, self.eval(x))
            })
            .collect()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TradeoffCurve::PiecewiseLinear { .. } => "piecewise_linear",
            TradeoffCurve::Gaussian { .. } => "gaussian",
            TradeoffCurve::FromPld { .. } => "from_pld",
            TradeoffCurve::Empirical { .. } => "empirical",
        }
    }

    /// Builds an empirical curve from raw points: sorted, deduplicated and
    /// range-checked.
    pub fn empirical(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(DpaError::InvalidInput(
                "empirical curve needs at least two points".into(),
            ));
        }
        for &(x, y) in &points {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(DpaError::InvalidInput(format!(
                    "curve point ({x}, {y}) outside the unit square"
                )));
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
        points.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        Ok(TradeoffCurve::Empirical { points })
    }
}

/// Standard normal quantile: the library approximation carries ~1e-10
/// relative error, so polish it with one Newton step.
fn norm_quantile(n: &Normal, p: f64) -> f64 {
    let z = n.inverse_cdf(p);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 1e-300 {
        z - (n.cdf(z) - p) / pdf
    } else {
        z
    }
}

/// Evaluates a non-increasing polyline at `x` (linear interpolation between
/// stored points, clamped outside their range). Duplicate x-values keep the
/// lower y.
fn eval_polyline(points: &[(f64, f64)], x: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[points.len() - 1].0 {
        return points[points.len() - 1].1;
    }
    let mut lo = 0usize;
    let mut hi = points.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if points[mid].0 <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x0, y0) = points[lo];
    let (x1, y1) = points[hi];
    if x1 - x0 < 1e-300 {
        return y0.min(y1);
    }
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}

/// The `(epsilon, delta)`-DP piecewise-linear lower bound.
pub fn dp_tradeoff(epsilon: f64, delta: f64) -> Result<TradeoffCurve> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(DpaError::InvalidInput(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(DpaError::InvalidInput(format!(
            "delta must lie in [0, 1], got {delta}"
        )));
    }
    Ok(TradeoffCurve::PiecewiseLinear { epsilon, delta })
}

/// The Gaussian-DP curve for testing `N(0,1)` against `N(mu,1)`.
pub fn gaussian_tradeoff(mu: f64) -> Result<TradeoffCurve> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(DpaError::InvalidInput(format!(
            "mu must be positive, got {mu}"
        )));
    }
    Ok(TradeoffCurve::Gaussian { mu })
}

/// Threshold-sweep points of one loss distribution.
///
/// With `P` the numerator and `Q(L = l) = P(L = l) e^{-l}` the implied
/// denominator, rejecting the null when `L < t` gives the exact operating
/// points of the discrete pair; chords between adjacent thresholds are the
/// randomized tests. Both coordinates of every point are exact for the
/// discrete pair, so the polyline is that pair's true curve, which in turn
/// lower-bounds the mechanism's curve for a pessimistic discretization.
fn threshold_polyline(pld: &PrivacyLossDistribution) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(pld.len() + 2);
    // Start: reject only the denominator's numerator-null outcomes (free).
    let q_finite = crate::quadrature::neumaier_sum(
        (0..pld.len()).map(|i| pld.masses[i] * (-pld.loss_at(i)).exp()),
    );
    let q_extra = (1.0 - q_finite).max(0.0);
    let mut p_fa = 0.0;
    let mut p_md = 1.0 - q_extra;
    points.push((0.0, p_md));
    for i in 0..pld.len() {
        let m = pld.masses[i];
        if m <= 0.0 {
            continue;
        }
        let loss = pld.loss_at(i);
        p_fa += m;
        p_md -= m * (-loss).exp();
        points.push((p_fa.min(1.0), p_md.max(0.0)));
    }
    // Rejecting the infinity atom's outcomes costs false alarms but cannot
    // reduce missed detection below zero.
    points.push((1.0, 0.0));
    points.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    points
}

/// Reflects a curve's points across the diagonal: the tradeoff of the
/// swapped pair is the inverse function of the original.
fn reflect(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (y, x)).collect();
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    out
}

/// Exact tradeoff curve of a discretized pair, from both orderings.
///
/// `pld_forward` is the loss of `(P, Q)` sampled under `P`; `pld_reverse` is
/// the loss of `(Q, P)` sampled under `Q`. Each yields a valid lower-bound
/// polyline (the reverse one after reflection); the curve is their pointwise
/// max.
pub fn tradeoff_from_pld(
    pld_forward: &PrivacyLossDistribution,
    pld_reverse: &PrivacyLossDistribution,
) -> TradeoffCurve {
    let forward = threshold_polyline(pld_forward);
    let reverse = reflect(&threshold_polyline(pld_reverse));
    TradeoffCurve::FromPld {
        branches: vec![forward, reverse],
    }
}

/// Sampled domination check: true iff `upper(x) >= lower(x) - 1e-12` at all
/// grid points. A sampled check, not a proof: curves are only compared at
/// `grid_points` uniformly spaced abscissas.
pub fn dominates(lower: &TradeoffCurve, upper: &TradeoffCurve, grid_points: usize) -> bool {
    assert!(grid_points >= 2, "need at least two grid points");
    for i in 0..grid_points {
        let x = i as f64 / (grid_points - 1) as f64;
        if upper.eval(x) < lower.eval(x) - 1e-12 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pld::{pld_from_discrete_pair, DiscretizationPolicy};

    #[test]
    fn perfect_privacy_curve_is_the_diagonal() {
        let c = dp_tradeoff(0.0, 0.0).unwrap();
        for x in [0.0, 0.3, 0.5, 0.9, 1.0] {
            assert!((c.eval(x) - (1.0 - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_only_curve_is_a_shifted_diagonal() {
        let c = dp_tradeoff(0.0, 0.1).unwrap();
        for x in [0.0, 0.2, 0.85, 1.0] {
            assert!((c.eval(x) - (0.9 - x).max(0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_epsilon_curve_endpoints() {
        let c = dp_tradeoff(1.0, 0.0).unwrap();
        assert!((c.eval(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(c.eval(1.0), 0.0);
    }

    #[test]
    fn gaussian_curve_examples() {
        // mu -> 0 approaches the diagonal.
        let near_diag = gaussian_tradeoff(1e-9).unwrap();
        assert!((near_diag.eval(0.3) - 0.7).abs() < 1e-6);
        // Phi^{-1}(0.5) = 0 so curve(0.5) = Phi(-mu).
        let n = Normal::new(0.0, 1.0).unwrap();
        let c = gaussian_tradeoff(1.0).unwrap();
        assert!((c.eval(0.5) - n.cdf(-1.0)).abs() < 1e-12);
        // Symmetry point of mu = 2: x = Phi(-1) maps to itself.
        let c2 = gaussian_tradeoff(2.0).unwrap();
        let x = n.cdf(-1.0);
        assert!((c2.eval(x) - x).abs() < 1e-12);
    }

    #[test]
    fn identity_pld_gives_the_diagonal() {
        let pld = PrivacyLossDistribution::identity(1e-4, true);
        let curve = tradeoff_from_pld(&pld, &pld);
        for x in [0.0, 0.25, 0.6, 1.0] {
            assert!((curve.eval(x) - (1.0 - x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn randomized_response_matches_its_dp_bound_exactly() {
        let e = std::f64::consts::E;
        let p = [e / (1.0 + e), 1.0 / (1.0 + e)];
        let q = [1.0 / (1.0 + e), e / (1.0 + e)];
        let policy = DiscretizationPolicy::default();
        let fwd = pld_from_discrete_pair(&p, &q, &policy).unwrap();
        let rev = pld_from_discrete_pair(&q, &p, &policy).unwrap();
        let curve = tradeoff_from_pld(&fwd, &rev);
        let bound = dp_tradeoff(1.0, 0.0).unwrap();
        // Oracle: exhaustive threshold enumeration over a two-atom pair gives
        // exactly the two-kink piecewise-linear curve.
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!(
                (curve.eval(x) - bound.eval(x)).abs() < 1e-12,
                "x = {x}: {} vs {}",
                curve.eval(x),
                bound.eval(x)
            );
        }
    }

    #[test]
    fn dominates_orders_delta_correctly() {
        let weaker = dp_tradeoff(1.0, 0.1).unwrap();
        let stronger = dp_tradeoff(1.0, 0.0).unwrap();
        assert!(dominates(&weaker, &stronger, 512));
        assert!(!dominates(&stronger, &weaker, 512));
    }

    #[test]
    fn more_noise_dominates_less_noise() {
        // mu = 1 (more private) lies above mu = 2.
        let less_private = gaussian_tradeoff(2.0).unwrap();
        let more_private = gaussian_tradeoff(1.0).unwrap();
        assert!(dominates(&less_private, &more_private, 1000));
        assert!(!dominates(&more_private, &less_private, 1000));
    }

    #[test]
    fn empirical_curve_interpolates_linearly() {
        let c = TradeoffCurve::empirical(vec![(0.0, 1.0), (0.5, 0.4), (1.0, 0.0)]).unwrap();
        assert!((c.eval(0.25) - 0.7).abs() < 1e-15);
        assert!((c.eval(0.75) - 0.2).abs() < 1e-15);
    }
}
