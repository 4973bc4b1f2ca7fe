//! Grid-discretized privacy loss distributions.
//!
//! A [`PrivacyLossDistribution`] stores the distribution of the privacy loss
//! random variable `L = log dP/dQ(Y)`, `Y ~ P`, discretized onto losses that
//! are integer multiples of a grid spacing, plus an atom at `+infinity` for
//! events that are impossible under `Q`. Keeping losses grid-aligned makes
//! convolution of two distributions land exactly back on the grid, which is
//! what the FFT accountant relies on.
//!
//! Rounding conventions:
//! - `Pessimistic` assigns every cell's mass to the boundary with the larger
//!   loss and sends truncated right-tail mass to the infinity atom, so every
//!   derived `delta(epsilon)` is an upper bound on the true value.
//! - `Optimistic` rounds downward and collapses the truncated right tail into
//!   the last kept cell, so derived values are lower bounds.
//!
//! In both conventions the truncated left tail collapses into the leftmost
//! kept cell: losses far below any queried `epsilon` contribute nothing to
//! `delta`, so the placement only affects mass conservation.

use serde::{Deserialize, Serialize};

use crate::error::{DpaError, Result};
use crate::quadrature::{gauss5, neumaier_sum};

/// Tolerance on `sum(masses) + infinity_mass - 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Infinity atoms at or below this threshold are treated as absent when
/// computing moments, KL and Renyi divergences. Pessimistic discretization of
/// an unbounded-loss mechanism always leaves a truncation atom of about half
/// the tail mass bound, so a strict zero test would reject every such input.
pub const NEGLIGIBLE_INFINITY_MASS: f64 = 1e-9;

/// Snap tolerance (in index units) when deciding whether a loss already sits
/// on a grid boundary; absorbs the rounding error of `loss / spacing`.
const INDEX_SNAP: f64 = 1e-9;

/// Rounding direction of a discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    Pessimistic,
    Optimistic,
}

impl Rounding {
    pub fn is_pessimistic(self) -> bool {
        matches!(self, Rounding::Pessimistic)
    }
}

/// How to discretize a loss distribution onto the grid.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiscretizationPolicy {
    /// Grid step in nats.
    pub grid_spacing: f64,
    /// Mass allowed to be truncated into the end cells / infinity atom.
    pub tail_mass_bound: f64,
    pub rounding: Rounding,
}

impl Default for DiscretizationPolicy {
    fn default() -> Self {
        Self {
            grid_spacing: 1e-4,
            tail_mass_bound: 1e-10,
            rounding: Rounding::Pessimistic,
        }
    }
}

impl DiscretizationPolicy {
    pub fn new(grid_spacing: f64, tail_mass_bound: f64, rounding: Rounding) -> Result<Self> {
        let policy = Self {
            grid_spacing,
            tail_mass_bound,
            rounding,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_spacing > 0.0 && self.grid_spacing.is_finite()) {
            return Err(DpaError::InvalidPolicy(format!(
                "grid_spacing must be positive, got {}",
                self.grid_spacing
            )));
        }
        if !(self.tail_mass_bound > 0.0 && self.tail_mass_bound < 1e-3) {
            return Err(DpaError::InvalidPolicy(format!(
                "tail_mass_bound must lie in (0, 1e-3), got {}",
                self.tail_mass_bound
            )));
        }
        Ok(())
    }

    pub fn pessimistic(self) -> Self {
        Self {
            rounding: Rounding::Pessimistic,
            ..self
        }
    }

    pub fn optimistic(self) -> Self {
        Self {
            rounding: Rounding::Optimistic,
            ..self
        }
    }
}

/// Rounds a loss value onto the grid, snapping values that already sit on a
/// boundary up to floating-point noise.
pub fn loss_to_index(loss: f64, spacing: f64, rounding: Rounding) -> i64 {
    let x = loss / spacing;
    let nearest = x.round();
    if (x - nearest).abs() <= INDEX_SNAP {
        return nearest as i64;
    }
    match rounding {
        Rounding::Pessimistic => x.ceil() as i64,
        Rounding::Optimistic => x.floor() as i64,
    }
}

/// A privacy loss random variable described by a density plus finite atoms.
///
/// The density is taken with respect to the numerator measure `P`; any mass
/// not covered by the density or the atoms is attributed to the `+infinity`
/// atom (events impossible under `Q`).
pub struct LossMeasure<'a> {
    pub density: &'a dyn Fn(f64) -> f64,
    pub atoms: &'a [(f64, f64)],
}

impl<'a> LossMeasure<'a> {
    pub fn from_density(density: &'a dyn Fn(f64) -> f64) -> Self {
        Self {
            density,
            atoms: &[],
        }
    }
}

/// Discrete grid-aligned distribution of the privacy loss random variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLossDistribution {
    /// Nats per grid step.
    pub grid_spacing: f64,
    /// Loss of cell `i` is `(min_index + i) * grid_spacing`.
    pub min_index: i64,
    /// Probability masses under the numerator distribution `P`.
    pub masses: Vec<f64>,
    /// Probability that the loss is `+infinity`.
    pub infinity_mass: f64,
    /// True if derived `delta(epsilon)` values are upper bounds.
    pub pessimistic: bool,
}

impl PrivacyLossDistribution {
    /// Validating constructor; clamps sub-`1e-12` negative noise to zero.
    pub fn new(
        grid_spacing: f64,
        min_index: i64,
        mut masses: Vec<f64>,
        infinity_mass: f64,
        pessimistic: bool,
    ) -> Result<Self> {
        if !(grid_spacing > 0.0 && grid_spacing.is_finite()) {
            return Err(DpaError::InvalidInput(format!(
                "grid_spacing must be positive, got {grid_spacing}"
            )));
        }
        if !(0.0..=1.0 + MASS_TOLERANCE).contains(&infinity_mass) {
            return Err(DpaError::InvalidInput(format!(
                "infinity_mass must lie in [0, 1], got {infinity_mass}"
            )));
        }
        if masses.is_empty() {
            return Err(DpaError::InvalidInput("masses must be non-empty".into()));
        }
        for m in masses.iter_mut() {
            if *m < 0.0 {
                if *m < -MASS_TOLERANCE {
                    return Err(DpaError::InvalidInput(format!("negative mass {m:e}")));
                }
                *m = 0.0;
            }
        }
        let pld = Self {
            grid_spacing,
            min_index,
            masses,
            infinity_mass,
            pessimistic,
        };
        let total = pld.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DpaError::InvalidInput(format!(
                "total mass {total} is not 1 within {MASS_TOLERANCE:e}"
            )));
        }
        Ok(pld)
    }

    /// Point mass at loss zero: the identity mechanism's distribution.
    pub fn identity(grid_spacing: f64, pessimistic: bool) -> Self {
        Self {
            grid_spacing,
            min_index: 0,
            masses: vec![1.0],
            infinity_mass: 0.0,
            pessimistic,
        }
    }

    /// Builds a distribution from finite loss atoms rounded per policy.
    pub fn from_atoms(
        atoms: &[(f64, f64)],
        infinity_mass: f64,
        policy: &DiscretizationPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        if atoms.is_empty() && infinity_mass < 1.0 - MASS_TOLERANCE {
            return Err(DpaError::InvalidInput(
                "no atoms and infinity mass below 1".into(),
            ));
        }
        if atoms.is_empty() {
            return Ok(Self {
                grid_spacing: policy.grid_spacing,
                min_index: 0,
                masses: vec![0.0],
                infinity_mass,
                pessimistic: policy.rounding.is_pessimistic(),
            });
        }
        let h = policy.grid_spacing;
        let mut indexed: Vec<(i64, f64)> = Vec::with_capacity(atoms.len());
        for &(loss, mass) in atoms {
            if mass < 0.0 {
                return Err(DpaError::InvalidInput(format!("negative atom mass {mass}")));
            }
            if mass == 0.0 {
                continue;
            }
            indexed.push((loss_to_index(loss, h, policy.rounding), mass));
        }
        let min = indexed.iter().map(|&(i, _)| i).min().unwrap();
        let max = indexed.iter().map(|&(i, _)| i).max().unwrap();
        let mut masses = vec![0.0; (max - min + 1) as usize];
        for (i, m) in indexed {
            masses[(i - min) as usize] += m;
        }
        Self::new(
            h,
            min,
            masses,
            infinity_mass,
            policy.rounding.is_pessimistic(),
        )
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Loss value of cell `i`.
    pub fn loss_at(&self, i: usize) -> f64 {
        (self.min_index + i as i64) as f64 * self.grid_spacing
    }

    pub fn max_loss(&self) -> f64 {
        self.loss_at(self.len() - 1)
    }

    pub fn min_loss(&self) -> f64 {
        (self.min_index as f64) * self.grid_spacing
    }

    /// Finite mass plus the infinity atom, compensated summation.
    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.masses.iter().copied()) + self.infinity_mass
    }

    pub fn rounding(&self) -> Rounding {
        if self.pessimistic {
            Rounding::Pessimistic
        } else {
            Rounding::Optimistic
        }
    }

    /// Checks the type invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_spacing > 0.0) {
            return Err(DpaError::InvalidInput("non-positive grid spacing".into()));
        }
        if self.masses.iter().any(|&m| m < 0.0) || self.infinity_mass < 0.0 {
            return Err(DpaError::InvalidInput("negative mass".into()));
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DpaError::InvalidInput(format!(
                "total mass {total} out of tolerance"
            )));
        }
        Ok(())
    }

    /// Re-rounds the distribution onto a coarser or different grid, keeping
    /// the rounding direction of `self` so bound semantics are preserved.
    pub fn resample(&self, new_spacing: f64) -> Result<Self> {
        if !(new_spacing > 0.0 && new_spacing.is_finite()) {
            return Err(DpaError::InvalidInput("non-positive spacing".into()));
        }
        let rounding = self.rounding();
        let atoms: Vec<(f64, f64)> = (0..self.len())
            .filter(|&i| self.masses[i] > 0.0)
            .map(|i| (self.loss_at(i), self.masses[i]))
            .collect();
        let policy = DiscretizationPolicy {
            grid_spacing: new_spacing,
            tail_mass_bound: 1e-10,
            rounding,
        };
        PrivacyLossDistribution::from_atoms(&atoms, self.infinity_mass, &policy)
    }

    /// Merges runs of `factor` adjacent cells, assigning merged mass per the
    /// distribution's own rounding direction (a coarsening/data-processing
    /// step: pessimistic coarsening can only raise the loss of each unit of
    /// mass).
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(DpaError::InvalidInput("coarsen factor must be >= 1".into()));
        }
        self.resample(self.grid_spacing * factor as f64)
    }
}

/// First three moments of the finite part of a loss distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub third_absolute_central_moment: f64,
}

/// Moments of the loss distribution.
///
/// Fails with [`DpaError::InfiniteMass`] unless the infinity atom is at most
/// [`NEGLIGIBLE_INFINITY_MASS`]; a negligible atom is dropped and the finite
/// part renormalized.
pub fn pld_moments(pld: &PrivacyLossDistribution) -> Result<Moments> {
    if pld.infinity_mass > NEGLIGIBLE_INFINITY_MASS {
        return Err(DpaError::InfiniteMass(pld.infinity_mass));
    }
    let finite_total = neumaier_sum(pld.masses.iter().copied());
    if finite_total <= 0.0 {
        return Err(DpaError::InvalidInput("no finite mass".into()));
    }
    let mean = neumaier_sum((0..pld.len()).map(|i| pld.masses[i] * pld.loss_at(i))) / finite_total;
    let variance = neumaier_sum((0..pld.len()).map(|i| {
        let d = pld.loss_at(i) - mean;
        pld.masses[i] * d * d
    })) / finite_total;
    let third = neumaier_sum((0..pld.len()).map(|i| {
        let d = (pld.loss_at(i) - mean).abs();
        pld.masses[i] * d * d * d
    })) / finite_total;
    Ok(Moments {
        mean,
        variance,
        third_absolute_central_moment: third,
    })
}

/// Builds the loss distribution of a finite discrete pair `(p, q)`.
///
/// Outcomes with `q = 0 < p` feed the infinity atom; outcomes with `p = 0`
/// carry no numerator mass and are dropped.
pub fn pld_from_discrete_pair(
    p: &[f64],
    q: &[f64],
    policy: &DiscretizationPolicy,
) -> Result<PrivacyLossDistribution> {
    policy.validate()?;
    if p.len() != q.len() {
        return Err(DpaError::AlphabetMismatch(format!(
            "p has {} outcomes, q has {}",
            p.len(),
            q.len()
        )));
    }
    for (&pi, &qi) in p.iter().zip(q) {
        if pi < 0.0 || qi < 0.0 {
            return Err(DpaError::InvalidInput("negative probability".into()));
        }
    }
    let sum_p = neumaier_sum(p.iter().copied());
    let sum_q = neumaier_sum(q.iter().copied());
    if (sum_p - 1.0).abs() > 1e-9 || (sum_q - 1.0).abs() > 1e-9 {
        return Err(DpaError::InvalidInput(format!(
            "p sums to {sum_p}, q sums to {sum_q}; both must be 1"
        )));
    }
    let mut atoms = Vec::new();
    let mut infinity_mass = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            infinity_mass += pi;
        } else {
            atoms.push(((pi / qi).ln(), pi));
        }
    }
    PrivacyLossDistribution::from_atoms(&atoms, infinity_mass, policy)
}

/// Discretizes a loss measure (density plus finite atoms) onto the grid.
///
/// The density must integrate to at most 1 together with the atoms; the
/// remainder becomes the infinity atom. Cell masses are computed by fixed
/// high-order quadrature per cell (cells are tiny relative to any smooth
/// density's scale), and the support is located by expanding windows until
/// the captured mass stops growing.
pub fn discretize_pld(
    measure: &LossMeasure<'_>,
    policy: &DiscretizationPolicy,
) -> Result<PrivacyLossDistribution> {
    policy.validate()?;
    let h = policy.grid_spacing;
    let density = measure.density;

    // Locate the support by expanding until additional windows carry less
    // than a sliver of the tail budget.
    let tiny = (policy.tail_mass_bound / 16.0).min(1e-13);
    let mut radius: f64 = 1.0;
    let mut continuous_total = crate::quadrature::adaptive_simpson(density, -radius, radius, 1e-13)?;
    for _ in 0..60 {
        let next = radius * 2.0;
        let left = crate::quadrature::adaptive_simpson(density, -next, -radius, 1e-13)?;
        let right = crate::quadrature::adaptive_simpson(density, radius, next, 1e-13)?;
        continuous_total += left + right;
        radius = next;
        if left + right < tiny {
            break;
        }
    }
    let atom_total = neumaier_sum(measure.atoms.iter().map(|&(_, m)| m));
    let total = continuous_total + atom_total;
    if total > 1.0 + 1e-6 {
        return Err(DpaError::NonIntegrable(format!(
            "measure integrates to {total} > 1"
        )));
    }
    let mut infinity_mass = (1.0 - total).max(0.0);

    // Interval masses on [k*h, (k+1)*h); pessimistic assigns to index k + 1,
    // optimistic to index k.
    let k_lo = (-radius / h).floor() as i64 - 1;
    let k_hi = (radius / h).ceil() as i64 + 1;
    let n = (k_hi - k_lo + 1) as usize;
    let mut interval_mass = vec![0.0f64; n];
    for (slot, k) in (k_lo..=k_hi).enumerate() {
        let a = k as f64 * h;
        let b = (k + 1) as f64 * h;
        let m = gauss5(&density, a, b);
        if m > 0.0 {
            interval_mass[slot] = m;
        }
    }

    // Trim tails within the policy budget.
    let half_budget = policy.tail_mass_bound / 2.0;
    let mut lo = 0usize;
    let mut left_trim = 0.0;
    while lo + 1 < n && left_trim + interval_mass[lo] <= half_budget {
        left_trim += interval_mass[lo];
        lo += 1;
    }
    let mut hi = n - 1;
    let mut right_trim = 0.0;
    while hi > lo && right_trim + interval_mass[hi] <= half_budget {
        right_trim += interval_mass[hi];
        hi -= 1;
    }

    let pessimistic = policy.rounding.is_pessimistic();
    let offset = if pessimistic { 1 } else { 0 };
    let mut min_index = k_lo + lo as i64 + offset;
    let mut max_index = k_lo + hi as i64 + offset;

    // Fold atoms into the index range.
    let mut atom_cells: Vec<(i64, f64)> = Vec::new();
    for &(loss, mass) in measure.atoms {
        if mass == 0.0 {
            continue;
        }
        let idx = loss_to_index(loss, h, policy.rounding);
        atom_cells.push((idx, mass));
        min_index = min_index.min(idx);
        max_index = max_index.max(idx);
    }

    let len = (max_index - min_index + 1) as usize;
    let mut masses = vec![0.0f64; len];
    for (slot, k) in (k_lo..=k_hi).enumerate().take(hi + 1).skip(lo) {
        let idx = (k + offset - min_index) as usize;
        masses[idx] += interval_mass[slot];
        let _ = slot;
    }
    for (idx, mass) in atom_cells {
        masses[(idx - min_index) as usize] += mass;
    }

    // Left trim collapses into the leftmost cell under both roundings; right
    // trim goes to infinity when pessimistic and into the last cell otherwise.
    masses[0] += left_trim;
    if pessimistic {
        infinity_mass += right_trim;
    } else {
        let last = masses.len() - 1;
        masses[last] += right_trim;
    }

    // Absorb residual quadrature drift (well below the tail budget) so the
    // mass-conservation invariant holds exactly.
    let finite = neumaier_sum(masses.iter().copied());
    let drift = 1.0 - infinity_mass - finite;
    if drift.abs() > 1e-9 {
        return Err(DpaError::NonIntegrable(format!(
            "mass drift {drift:e} after discretization"
        )));
    }
    if pessimistic {
        let last = masses.len() - 1;
        masses[last] = (masses[last] + drift).max(0.0);
    } else {
        masses[0] = (masses[0] + drift).max(0.0);
    }

    PrivacyLossDistribution::new(h, min_index, masses, infinity_mass, pessimistic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(rounding: Rounding) -> DiscretizationPolicy {
        DiscretizationPolicy {
            grid_spacing: 1e-4,
            tail_mass_bound: 1e-10,
            rounding,
        }
    }

    #[test]
    fn identity_is_a_point_mass_at_zero() {
        let pld = PrivacyLossDistribution::identity(1e-4, true);
        pld.validate().unwrap();
        assert_eq!(pld.masses, vec![1.0]);
        assert_eq!(pld.min_index, 0);
        assert_eq!(pld.infinity_mass, 0.0);
    }

    #[test]
    fn equal_pair_gives_single_atom_at_zero() {
        let pld =
            pld_from_discrete_pair(&[0.5, 0.5], &[0.5, 0.5], &policy(Rounding::Pessimistic))
                .unwrap();
        assert_eq!(pld.len(), 1);
        assert_eq!(pld.min_index, 0);
        assert!((pld.masses[0] - 1.0).abs() < 1e-15);
        assert_eq!(pld.infinity_mass, 0.0);
    }

    #[test]
    fn randomized_response_atoms_sit_at_plus_minus_one() {
        let e = std::f64::consts::E;
        let p = [e / (1.0 + e), 1.0 / (1.0 + e)];
        let q = [1.0 / (1.0 + e), e / (1.0 + e)];
        // Oracle: direct log-ratio computation.
        assert!(((p[0] / q[0]).ln() - 1.0).abs() < 1e-12);
        assert!(((p[1] / q[1]).ln() + 1.0).abs() < 1e-12);
        for rounding in [Rounding::Pessimistic, Rounding::Optimistic] {
            let pld = pld_from_discrete_pair(&p, &q, &policy(rounding)).unwrap();
            assert_eq!(pld.min_index, -10_000);
            assert_eq!(pld.len(), 20_001);
            assert!((pld.masses[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
            assert!((pld.masses[20_000] - e / (1.0 + e)).abs() < 1e-15);
            assert_eq!(pld.infinity_mass, 0.0);
        }
    }

    #[test]
    fn disjoint_supports_put_all_mass_at_infinity() {
        let pld =
            pld_from_discrete_pair(&[1.0, 0.0], &[0.0, 1.0], &policy(Rounding::Pessimistic))
                .unwrap();
        assert_eq!(pld.infinity_mass, 1.0);
        assert_eq!(neumaier_sum(pld.masses.iter().copied()), 0.0);
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let err = pld_from_discrete_pair(&[1.0], &[0.5, 0.5], &policy(Rounding::Pessimistic));
        assert!(matches!(err, Err(DpaError::AlphabetMismatch(_))));
    }

    #[test]
    fn invalid_policy_is_rejected() {
        let p = DiscretizationPolicy {
            grid_spacing: -1.0,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(DpaError::InvalidPolicy(_))));
    }

    #[test]
    fn moments_of_point_mass_are_zero() {
        let pld = PrivacyLossDistribution::identity(1e-4, true);
        let m = pld_moments(&pld).unwrap();
        assert_eq!((m.mean, m.variance, m.third_absolute_central_moment), (0.0, 0.0, 0.0));
    }

    #[test]
    fn moments_of_randomized_response_match_tanh() {
        let e = std::f64::consts::E;
        let p = [e / (1.0 + e), 1.0 / (1.0 + e)];
        let q = [1.0 / (1.0 + e), e / (1.0 + e)];
        let pld = pld_from_discrete_pair(&p, &q, &policy(Rounding::Pessimistic)).unwrap();
        let m = pld_moments(&pld).unwrap();
        // Oracle: (e - 1) / (e + 1) for the two-atom distribution.
        let expected = (e - 1.0) / (e + 1.0);
        assert!((m.mean - expected).abs() < 1e-12);
        assert!((m.mean - 0.5f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn moments_reject_substantial_infinity_mass() {
        let pld = PrivacyLossDistribution {
            grid_spacing: 1e-4,
            min_index: 0,
            masses: vec![0.7],
            infinity_mass: 0.3,
            pessimistic: true,
        };
        assert!(matches!(pld_moments(&pld), Err(DpaError::InfiniteMass(_))));
    }

    #[test]
    fn gaussian_density_discretizes_to_expected_mean() {
        // PLRV of the unit Gaussian pair is N(1/2, 1); its mean is the KL
        // divergence s^2 / (2 sigma^2) = 1/2.
        let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
        let density = move |l: f64| (-0.5 * (l - 0.5) * (l - 0.5)).exp() / sqrt_2pi;
        let coarse = DiscretizationPolicy {
            grid_spacing: 1e-3,
            tail_mass_bound: 1e-10,
            rounding: Rounding::Pessimistic,
        };
        let measure = LossMeasure::from_density(&density);
        let pld = discretize_pld(&measure, &coarse).unwrap();
        pld.validate().unwrap();
        let m = pld_moments(&pld).unwrap();
        assert!((m.mean - 0.5).abs() < coarse.grid_spacing);
        assert!((m.variance - 1.0).abs() < 2.0 * coarse.grid_spacing);
    }

    #[test]
    fn laplace_measure_discretizes_with_no_infinity_mass() {
        // Laplace rate 1, sensitivity 1: continuous part (1/4) e^{(l-1)/2} on
        // (-1, 1) plus atoms 1/2 at +1 and e^{-1}/2 at -1.
        let density = |l: f64| {
            if l > -1.0 && l < 1.0 {
                0.25 * ((l - 1.0) / 2.0).exp()
            } else {
                0.0
            }
        };
        let atoms = [(1.0, 0.5), (-1.0, 0.5 * (-1.0f64).exp())];
        let measure = LossMeasure {
            density: &density,
            atoms: &atoms,
        };
        let pol = DiscretizationPolicy {
            grid_spacing: 1e-3,
            tail_mass_bound: 1e-10,
            rounding: Rounding::Pessimistic,
        };
        let pld = discretize_pld(&measure, &pol).unwrap();
        pld.validate().unwrap();
        assert_eq!(pld.infinity_mass, 0.0);
        assert!((pld.total_mass() - 1.0).abs() < MASS_TOLERANCE);
        assert!(pld.max_loss() <= 1.0 + 1e-12);
        assert!(pld.min_loss() >= -1.0 - 1e-12);
    }

    #[test]
    fn resample_preserves_rounding_direction() {
        let atoms = [(0.12345, 0.5), (-0.54321, 0.5)];
        let pol = policy(Rounding::Pessimistic);
        let pld = PrivacyLossDistribution::from_atoms(&atoms, 0.0, &pol).unwrap();
        let coarse = pld.resample(1e-2).unwrap();
        coarse.validate().unwrap();
        // Pessimistic re-rounding can only raise losses.
        assert!(coarse.max_loss() + 1e-12 >= pld.max_loss());
        assert!(coarse.pessimistic);
    }
}
