//! Privacy-relevant divergences of a loss distribution.
//!
//! The central query is the hockey-stick divergence at `gamma = e^epsilon`,
//! which equals the smallest `delta` making the underlying pair
//! `(epsilon, delta)`-indistinguishable: `delta(eps) = E[(1 - e^{eps - L})^+]`
//! plus the infinity atom. Everything else here (KL, Renyi, generic
//! f-divergences, the Renyi-to-DP conversion) is a different functional of the
//! same distribution.
//!
//! `hockey_stick` evaluates the expectation literally for any real `epsilon`,
//! including negative values; the nonstandard extra `(1 - gamma)^+` term some
//! definitions add for `gamma < 1` is deliberately not included.

use serde::{Deserialize, Serialize};

use crate::error::{DpaError, Result};
use crate::pld::{pld_moments, PrivacyLossDistribution, NEGLIGIBLE_INFINITY_MASS};
use crate::quadrature::neumaier_sum;

/// Which side of the true value a reported guarantee sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// An `(epsilon, delta)` pair together with its bound direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyGuarantee {
    pub epsilon: f64,
    pub delta: f64,
    pub bound_kind: BoundKind,
}

impl PrivacyGuarantee {
    pub fn new(epsilon: f64, delta: f64, bound_kind: BoundKind) -> Result<Self> {
        if epsilon < 0.0 || !epsilon.is_finite() {
            return Err(DpaError::InvalidInput(format!(
                "epsilon must be a non-negative real, got {epsilon}"
            )));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(DpaError::InvalidInput(format!(
                "delta must lie in [0, 1], got {delta}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            bound_kind,
        })
    }
}

/// Hockey-stick divergence `E[(1 - e^{eps - L})^+] + infinity_mass`.
///
/// Total on any valid distribution; monotone non-increasing in `epsilon` and
/// convex in `e^epsilon`.
pub fn hockey_stick(pld: &PrivacyLossDistribution, epsilon: f64) -> f64 {
    let delta = neumaier_sum((0..pld.len()).map(|i| {
        let loss = pld.loss_at(i);
        if loss > epsilon {
            // 1 - e^{eps - loss} without cancellation.
            -(epsilon - loss).exp_m1() * pld.masses[i]
        } else {
            0.0
        }
    })) + pld.infinity_mass;
    delta.clamp(0.0, 1.0)
}

/// Smallest epsilon (clamped to >= 0) whose hockey-stick value is at most
/// `delta`, found by bisection to an absolute tolerance of 1e-9.
///
/// Fails when `delta` is at or below the infinity atom: no finite epsilon can
/// reach it.
pub fn epsilon_at_delta(pld: &PrivacyLossDistribution, delta: f64) -> Result<f64> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(DpaError::InvalidInput(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if delta <= pld.infinity_mass {
        return Err(DpaError::Unachievable {
            delta,
            floor: pld.infinity_mass,
        });
    }
    let mut hi = pld.max_loss();
    if hockey_stick(pld, hi) > delta {
        // Can only happen through float noise at the top cell boundary.
        hi += pld.grid_spacing;
    }
    if hi <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = pld.min_loss().min(0.0) - 1.0;
    if hockey_stick(pld, lo) <= delta {
        return Ok(0.0);
    }
    // Invariant: delta(lo) > delta >= delta(hi).
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if hockey_stick(pld, mid) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(0.0))
}

/// KL divergence of the underlying pair: the mean of the loss distribution,
/// or +infinity when a non-negligible infinity atom is present.
pub fn kl_divergence(pld: &PrivacyLossDistribution) -> f64 {
    if pld.infinity_mass > NEGLIGIBLE_INFINITY_MASS {
        return f64::INFINITY;
    }
    match pld_moments(pld) {
        Ok(m) => m.mean,
        Err(_) => f64::INFINITY,
    }
}

/// Renyi divergence of order `alpha > 1`:
/// `(1 / (alpha - 1)) * log E_P[e^{(alpha - 1) L}]`, evaluated in log space.
pub fn renyi_divergence(pld: &PrivacyLossDistribution, alpha: f64) -> f64 {
    assert!(alpha > 1.0, "alpha must exceed 1, got {alpha}");
    if pld.infinity_mass > NEGLIGIBLE_INFINITY_MASS {
        return f64::INFINITY;
    }
    let a1 = alpha - 1.0;
    // log-sum-exp over (alpha - 1) * loss + ln(mass).
    let mut max_exponent = f64::NEG_INFINITY;
    for i in 0..pld.len() {
        if pld.masses[i] > 0.0 {
            let e = a1 * pld.loss_at(i) + pld.masses[i].ln();
            max_exponent = max_exponent.max(e);
        }
    }
    if max_exponent == f64::NEG_INFINITY {
        return 0.0;
    }
    let finite_total = neumaier_sum(pld.masses.iter().copied());
    let sum = neumaier_sum((0..pld.len()).filter(|&i| pld.masses[i] > 0.0).map(|i| {
        (a1 * pld.loss_at(i) + pld.masses[i].ln() - max_exponent).exp()
    }));
    // Dropped-atom renormalization keeps a negligible truncation atom from
    // biasing the divergence.
    (max_exponent + sum.ln() - finite_total.ln()) / a1
}

/// Generic f-divergence via `E_P[e^{-L} f(e^L)]`.
///
/// `f` must be convex with `f(1) = 0`; `f_limit_slope` is the limit of
/// `f(t) / t` as `t -> infinity` and multiplies the infinity atom. Supplying
/// the slope explicitly (rather than estimating it) keeps distributions with
/// an infinity atom from silently producing finite nonsense.
pub fn f_divergence<F: Fn(f64) -> f64>(
    pld: &PrivacyLossDistribution,
    f: F,
    f_limit_slope: f64,
) -> f64 {
    let finite = neumaier_sum((0..pld.len()).filter(|&i| pld.masses[i] > 0.0).map(|i| {
        let loss = pld.loss_at(i);
        pld.masses[i] * (-loss).exp() * f(loss.exp())
    }));
    if pld.infinity_mass > 0.0 {
        finite + pld.infinity_mass * f_limit_slope
    } else {
        finite
    }
}

/// Chernoff-style conversion from a Renyi bound to `(epsilon, delta)`:
/// `delta = min(1, exp((alpha - 1) (renyi - epsilon)))`.
pub fn rdp_to_dp(renyi_value: f64, alpha: f64, epsilon: f64) -> f64 {
    assert!(alpha > 1.0, "alpha must exceed 1, got {alpha}");
    if renyi_value.is_infinite() {
        return 1.0;
    }
    ((alpha - 1.0) * (renyi_value - epsilon)).exp().min(1.0)
}
