//! Privacy accountants for k-fold non-adaptive composition.
//!
//! The composed loss is the sum of the independent per-release losses, so its
//! distribution is the convolution of the individual ones. Four accountants
//! are provided:
//!
//! - [`basic_compose`]: sums `(epsilon_j, delta_j)` guarantees.
//! - [`fft_compose`]: exact linear convolution of grid-aligned loss
//!   distributions via zero-padded FFTs (no circular wrap-around); repeated
//!   self-composition uses exponentiation by squaring, which is numerically
//!   identical to sequential composition by associativity.
//! - [`rdp_compose`]: Renyi divergences add over compositions; converted to
//!   `(epsilon, delta)` with the Chernoff-style bound and minimized over an
//!   order grid.
//! - [`clt_compose`]: normal approximation from the first two moments,
//!   explicitly labeled an estimate rather than a bound.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::divergence::{rdp_to_dp, renyi_divergence, BoundKind, PrivacyGuarantee};
use crate::error::{DpaError, Result};
use crate::pld::{pld_moments, PrivacyLossDistribution};
use crate::quadrature::neumaier_sum;

/// Default Renyi order grid: fine steps near 1 for the small-epsilon regime,
/// powers of two for the large-epsilon regime.
pub static DEFAULT_RDP_ALPHAS: [f64; 15] = [
    1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0,
];

/// Configuration of the FFT accountant.
#[derive(Clone, Copy, Debug)]
pub struct FftConfig {
    /// Mass truncated from the convolution tails after each product; goes to
    /// the infinity atom (pessimistic) or the last kept cell (optimistic).
    pub tail_mass_bound: f64,
    /// Cell-count budget for any intermediate result.
    pub max_cells: usize,
}

impl Default for FftConfig {
    fn default() -> Self {
        Self {
            tail_mass_bound: 1e-14,
            max_cells: 1 << 23,
        }
    }
}

/// What a composition request wants evaluated.
#[derive(Clone, Copy, Debug)]
pub enum CompositionTarget {
    DeltaAt { epsilon: f64 },
    EpsilonAt { delta: f64 },
    FullCurve { eps_min: f64, eps_max: f64, points: usize },
}

/// A sequence of loss distributions (or one distribution repeated `k` times)
/// together with the query target.
#[derive(Clone, Debug)]
pub struct CompositionRequest {
    pub plds: Vec<PrivacyLossDistribution>,
    pub repetitions: usize,
    pub target: CompositionTarget,
}

impl CompositionRequest {
    pub fn repeated(
        pld: PrivacyLossDistribution,
        k: usize,
        target: CompositionTarget,
    ) -> Result<Self> {
        if k == 0 {
            return Err(DpaError::InvalidInput("k must be >= 1".into()));
        }
        Ok(Self {
            plds: vec![pld],
            repetitions: k,
            target,
        })
    }

    pub fn sequence(plds: Vec<PrivacyLossDistribution>, target: CompositionTarget) -> Result<Self> {
        if plds.is_empty() {
            return Err(DpaError::InvalidInput("no distributions given".into()));
        }
        Ok(Self {
            plds,
            repetitions: 1,
            target,
        })
    }
}

/// Basic composition: `(sum eps_j, min(1, sum delta_j))`, an upper bound.
pub fn basic_compose(guarantees: &[(f64, f64)]) -> Result<PrivacyGuarantee> {
    if guarantees.is_empty() {
        return Err(DpaError::InvalidInput("no guarantees given".into()));
    }
    let mut eps = 0.0;
    let mut delta = 0.0;
    for &(e, d) in guarantees {
        if !(e >= 0.0 && e.is_finite()) || !(0.0..=1.0).contains(&d) {
            return Err(DpaError::InvalidInput(format!(
                "invalid guarantee ({e}, {d})"
            )));
        }
        eps += e;
        delta += d;
    }
    PrivacyGuarantee::new(eps, delta.min(1.0), BoundKind::Upper)
}

fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut fa = vec![Complex::new(0.0, 0.0); size];
    let mut fb = vec![Complex::new(0.0, 0.0); size];
    for (slot, &v) in fa.iter_mut().zip(a.iter()) {
        slot.re = v;
    }
    for (slot, &v) in fb.iter_mut().zip(b.iter()) {
        slot.re = v;
    }
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= *y;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa.truncate(out_len);
    fa.iter().map(|c| c.re * scale).collect()
}

/// Exact linear convolution of two grid-aligned loss distributions.
///
/// The composed infinity atom is `1 - (1 - a_inf)(1 - b_inf)`; the composed
/// pessimistic flag is the AND of the inputs' flags. FFT round-off that
/// pushes cells negative is clamped to zero and the resulting mass deficit
/// added to the largest-loss cell (pessimistic) or the smallest-loss cell
/// (optimistic), preserving the bound contract.
pub fn fft_compose_pair(
    a: &PrivacyLossDistribution,
    b: &PrivacyLossDistribution,
    config: &FftConfig,
) -> Result<PrivacyLossDistribution> {
    if (a.grid_spacing - b.grid_spacing).abs() > 1e-12 * a.grid_spacing {
        return Err(DpaError::GridMismatch(a.grid_spacing, b.grid_spacing));
    }
    let out_len = a.len() + b.len() - 1;
    if out_len > config.max_cells {
        return Err(DpaError::MemoryBudgetExceeded {
            cells: out_len,
            budget: config.max_cells,
        });
    }
    let pessimistic = a.pessimistic && b.pessimistic;
    let mut masses = fft_convolve(&a.masses, &b.masses);
    let mut min_index = a.min_index + b.min_index;
    let infinity_mass = 1.0 - (1.0 - a.infinity_mass) * (1.0 - b.infinity_mass);

    for m in masses.iter_mut() {
        if *m < 0.0 {
            *m = 0.0;
        }
    }
    let expected_finite = (1.0 - a.infinity_mass) * (1.0 - b.infinity_mass);
    let finite = neumaier_sum(masses.iter().copied());
    let deficit = expected_finite - finite;
    if deficit > 0.0 {
        if pessimistic {
            let last = masses.len() - 1;
            masses[last] += deficit;
        } else {
            masses[0] += deficit;
        }
    } else {
        // Excess mass from round-off: shave it off the heaviest cell.
        let (argmax, _) = masses
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &m)| {
                if m > acc.1 {
                    (i, m)
                } else {
                    acc
                }
            });
        masses[argmax] = (masses[argmax] + deficit).max(0.0);
    }

    // Tail truncation keeps repeated compositions bounded in size.
    let half = config.tail_mass_bound / 2.0;
    let mut lo = 0usize;
    let mut left = 0.0;
    while lo + 1 < masses.len() && left + masses[lo] <= half {
        left += masses[lo];
        lo += 1;
    }
    let mut hi = masses.len() - 1;
    let mut right = 0.0;
    while hi > lo && right + masses[hi] <= half {
        right += masses[hi];
        hi -= 1;
    }
    let mut trimmed: Vec<f64> = masses[lo..=hi].to_vec();
    min_index += lo as i64;
    let mut extra_infinity = 0.0;
    trimmed[0] += left;
    if pessimistic {
        extra_infinity = right;
    } else {
        let last = trimmed.len() - 1;
        trimmed[last] += right;
    }

    PrivacyLossDistribution::new(
        a.grid_spacing,
        min_index,
        trimmed,
        infinity_mass + extra_infinity,
        pessimistic,
    )
}

/// `k`-fold self-composition by exponentiation by squaring.
pub fn fft_compose_power(
    pld: &PrivacyLossDistribution,
    k: usize,
    config: &FftConfig,
) -> Result<PrivacyLossDistribution> {
    if k == 0 {
        return Err(DpaError::InvalidInput("k must be >= 1".into()));
    }
    if k == 1 {
        return Ok(pld.clone());
    }
    let mut result: Option<PrivacyLossDistribution> = None;
    let mut base = pld.clone();
    let mut n = k;
    while n > 0 {
        if n & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => fft_compose_pair(&r, &base, config)?,
            });
        }
        n >>= 1;
        if n > 0 {
            base = fft_compose_pair(&base, &base, config)?;
        }
    }
    Ok(result.expect("k >= 1"))
}

/// Composes the request's distributions (sequence convolution, then repeated
/// self-composition) and returns the composed distribution.
///
/// Inputs on different grids are resampled to the coarsest spacing first,
/// each with its own rounding direction.
pub fn fft_compose(
    request: &CompositionRequest,
    config: &FftConfig,
) -> Result<PrivacyLossDistribution> {
    let coarsest = request
        .plds
        .iter()
        .map(|p| p.grid_spacing)
        .fold(0.0f64, f64::max);
    let mut resampled: Vec<PrivacyLossDistribution> = Vec::with_capacity(request.plds.len());
    for pld in &request.plds {
        if (pld.grid_spacing - coarsest).abs() > 1e-12 * coarsest {
            resampled.push(pld.resample(coarsest)?);
        } else {
            resampled.push(pld.clone());
        }
    }
    let mut acc = resampled[0].clone();
    for next in &resampled[1..] {
        acc = fft_compose_pair(&acc, next, config)?;
    }
    if request.repetitions > 1 {
        acc = fft_compose_power(&acc, request.repetitions, config)?;
    }
    Ok(acc)
}

/// Renyi accountant: `delta = min_alpha rdp_to_dp(k R_alpha, alpha, eps)`.
pub fn rdp_compose(
    pld: &PrivacyLossDistribution,
    k: usize,
    alphas: &[f64],
    epsilon: f64,
) -> Result<PrivacyGuarantee> {
    if alphas.is_empty() {
        return Err(DpaError::InvalidInput("alpha grid is empty".into()));
    }
    if k == 0 {
        return Err(DpaError::InvalidInput("k must be >= 1".into()));
    }
    let mut best = 1.0f64;
    for &alpha in alphas {
        if !(alpha > 1.0) {
            return Err(DpaError::InvalidInput(format!(
                "alpha must exceed 1, got {alpha}"
            )));
        }
        let r = renyi_divergence(pld, alpha);
        best = best.min(rdp_to_dp(k as f64 * r, alpha, epsilon));
    }
    PrivacyGuarantee::new(epsilon.max(0.0), best, BoundKind::Upper)
}

/// The Renyi accountant's epsilon at a target delta:
/// `min_alpha [k R_alpha + ln(1/delta) / (alpha - 1)]`.
pub fn rdp_epsilon_at_delta(
    pld: &PrivacyLossDistribution,
    k: usize,
    alphas: &[f64],
    delta: f64,
) -> Result<f64> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(DpaError::InvalidInput(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    let mut best = f64::INFINITY;
    for &alpha in alphas {
        if !(alpha > 1.0) {
            return Err(DpaError::InvalidInput(format!(
                "alpha must exceed 1, got {alpha}"
            )));
        }
        let r = renyi_divergence(pld, alpha);
        best = best.min(k as f64 * r + (1.0 / delta).ln() / (alpha - 1.0));
    }
    Ok(best.max(0.0))
}

/// A CLT-based delta estimate; not a bound in either direction.
#[derive(Clone, Copy, Debug)]
pub struct CltEstimate {
    pub delta: f64,
    pub label: &'static str,
}

/// Normal tail of the hockey-stick expectation for loss `~ N(mean, var)`:
/// `Phi((mean - eps)/sd) - e^{eps - mean + var/2} Phi((mean - var - eps)/sd)`.
fn normal_hockey_stick(mean: f64, var: f64, epsilon: f64) -> f64 {
    if var <= 1e-300 {
        return if epsilon < mean {
            -(epsilon - mean).exp_m1()
        } else {
            0.0
        };
    }
    let sd = var.sqrt();
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let first = n.cdf((mean - epsilon) / sd);
    let z = (mean - var - epsilon) / sd;
    let log_tail = epsilon - mean + 0.5 * var + ln_normal_cdf(&n, z);
    let second = if log_tail < -700.0 { 0.0 } else { log_tail.exp() };
    (first - second).clamp(0.0, 1.0)
}

fn ln_normal_cdf(n: &Normal, z: f64) -> f64 {
    if z > -8.0 {
        n.cdf(z).max(1e-320).ln()
    } else {
        // Asymptotic expansion of the lower tail.
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// CLT accountant: approximates the composed loss by a normal with matched
/// first two moments and evaluates the hockey-stick in closed form.
///
/// Requires a (negligibly-)finite loss: a non-negligible infinity atom is an
/// error, not a silent `delta = 1`.
pub fn clt_compose(pld: &PrivacyLossDistribution, k: usize, epsilon: f64) -> Result<CltEstimate> {
    if k == 0 {
        return Err(DpaError::InvalidInput("k must be >= 1".into()));
    }
    let m = pld_moments(pld)?;
    let mean = k as f64 * m.mean;
    let var = k as f64 * m.variance;
    Ok(CltEstimate {
        delta: normal_hockey_stick(mean, var, epsilon),
        label: "approximation",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::hockey_stick;
    use crate::pld::{pld_from_discrete_pair, DiscretizationPolicy};

    fn rr_pld() -> PrivacyLossDistribution {
        let e = std::f64::consts::E;
        let p = [e / (1.0 + e), 1.0 / (1.0 + e)];
        let q = [1.0 / (1.0 + e), e / (1.0 + e)];
        pld_from_discrete_pair(&p, &q, &DiscretizationPolicy::default()).unwrap()
    }

    #[test]
    fn basic_composition_sums_guarantees() {
        let g = basic_compose(&[(1.0, 1e-6); 3]).unwrap();
        assert!((g.epsilon - 3.0).abs() < 1e-15);
        assert!((g.delta - 3e-6).abs() < 1e-20);
        assert_eq!(g.bound_kind, BoundKind::Upper);
        let one = basic_compose(&[(0.7, 0.01)]).unwrap();
        assert_eq!((one.epsilon, one.delta), (0.7, 0.01));
        let capped = basic_compose(&[(1.0, 0.6), (1.0, 0.7)]).unwrap();
        assert_eq!(capped.delta, 1.0);
    }

    #[test]
    fn composing_with_identity_is_identity() {
        let pld = rr_pld();
        let identity = PrivacyLossDistribution::identity(pld.grid_spacing, true);
        let composed = fft_compose_pair(&pld, &identity, &FftConfig::default()).unwrap();
        assert_eq!(composed.min_index, pld.min_index);
        for (a, b) in composed.masses.iter().zip(&pld.masses) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_response_two_fold_matches_enumeration() {
        let e = std::f64::consts::E;
        let pld = rr_pld();
        let composed = fft_compose_power(&pld, 2, &FftConfig::default()).unwrap();
        composed.validate().unwrap();
        // Oracle: exhaustive 4-outcome enumeration of the product channel.
        let p1 = e / (1.0 + e);
        let p0 = 1.0 / (1.0 + e);
        let expect = [(-2.0, p0 * p0), (0.0, 2.0 * p0 * p1), (2.0, p1 * p1)];
        for (loss, mass) in expect {
            let idx = ((loss - composed.min_loss()) / composed.grid_spacing).round() as usize;
            assert!(
                (composed.masses[idx] - mass).abs() < 1e-12,
                "loss {loss}: {} vs {mass}",
                composed.masses[idx]
            );
        }
        assert_eq!(composed.infinity_mass, 0.0);
    }

    #[test]
    fn composition_order_does_not_matter() {
        let a = rr_pld();
        let b = pld_from_discrete_pair(
            &[0.7, 0.2, 0.1],
            &[0.5, 0.3, 0.2],
            &DiscretizationPolicy::default(),
        )
        .unwrap();
        let cfg = FftConfig::default();
        let ab = fft_compose_pair(&a, &b, &cfg).unwrap();
        let ba = fft_compose_pair(&b, &a, &cfg).unwrap();
        assert_eq!(ab.min_index, ba.min_index);
        for (x, y) in ab.masses.iter().zip(&ba.masses) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = rr_pld();
        let mut b = rr_pld();
        b.grid_spacing *= 2.0;
        assert!(matches!(
            fft_compose_pair(&a, &b, &FftConfig::default()),
            Err(DpaError::GridMismatch(_, _))
        ));
    }

    #[test]
    fn memory_budget_is_enforced() {
        let a = rr_pld();
        let cfg = FftConfig {
            tail_mass_bound: 1e-14,
            max_cells: 1000,
        };
        assert!(matches!(
            fft_compose_pair(&a, &a, &cfg),
            Err(DpaError::MemoryBudgetExceeded { .. })
        ));
    }

    #[test]
    fn pure_dp_losses_compose_to_k_epsilon_on_the_grid() {
        let pld = rr_pld();
        let cfg = FftConfig {
            tail_mass_bound: 1e-300,
            max_cells: 1 << 23,
        };
        for k in [2usize, 5, 9] {
            let composed = fft_compose_power(&pld, k, &cfg).unwrap();
            assert!(
                (composed.max_loss() - k as f64).abs() < 1e-9,
                "k {k}: max loss {}",
                composed.max_loss()
            );
        }
    }

    #[test]
    fn rdp_compose_minimizes_over_alpha_and_upper_bounds_exact() {
        let pld = rr_pld();
        for eps in [0.5, 1.5, 3.0] {
            let g = rdp_compose(&pld, 1, &DEFAULT_RDP_ALPHAS, eps).unwrap();
            assert!(g.delta + 1e-15 >= hockey_stick(&pld, eps));
        }
    }

    #[test]
    fn clt_on_identity_gives_zero_delta_for_positive_epsilon() {
        let pld = PrivacyLossDistribution::identity(1e-4, true);
        let est = clt_compose(&pld, 10, 0.5).unwrap();
        assert_eq!(est.delta, 0.0);
        assert_eq!(est.label, "approximation");
    }

    #[test]
    fn clt_rejects_substantial_infinity_mass() {
        let pld = PrivacyLossDistribution {
            grid_spacing: 1e-4,
            min_index: 0,
            masses: vec![0.7],
            infinity_mass: 0.3,
            pessimistic: true,
        };
        assert!(matches!(
            clt_compose(&pld, 2, 1.0),
            Err(DpaError::InfiniteMass(_))
        ));
    }

    #[test]
    fn normal_hockey_stick_matches_exact_gaussian_formula() {
        // For the Gaussian mechanism the loss is N(mu, 2 mu); the closed form
        // reduces to Phi(mu/sd - eps/sd ... the standard analytic expression.
        let n = Normal::new(0.0, 1.0).unwrap();
        for (sigma, eps) in [(1.0, 0.5), (1.0, 2.0), (2.0, 1.0)] {
            let mu = 1.0 / (2.0 * sigma * sigma);
            let var = 1.0 / (sigma * sigma);
            let direct =
                n.cdf(1.0 / (2.0 * sigma) - eps * sigma) - eps.exp() * n.cdf(-1.0 / (2.0 * sigma) - eps * sigma);
            let viaclt = normal_hockey_stick(mu, var, eps);
            assert!(
                (direct - viaclt).abs() < 1e-14,
                "sigma {sigma} eps {eps}: {direct} vs {viaclt}"
            );
        }
    }
}
