//! Noise-design optimizers: staircase parameter fitting, the minimax-KL
//! simplex program, and the ground-state ODE solve for the small-sensitivity
//! regime.

mod cactus;
mod schrodinger;
mod staircase;

pub use cactus::{solve_cactus, CactusSolution};
pub use schrodinger::solve_schrodinger;
pub use staircase::fit_staircase;

use serde::{Deserialize, Serialize};

use crate::error::{DpaError, Result};
use crate::pld::{DiscretizationPolicy, PrivacyLossDistribution};
use crate::quadrature::neumaier_sum;

/// Even, non-negative cost with `c(0) = 0`.
#[derive(Clone, Copy, Debug)]
pub enum CostFunction {
    Quadratic,
    Absolute,
    Custom(fn(f64) -> f64),
}

impl CostFunction {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            CostFunction::Quadratic => z * z,
            CostFunction::Absolute => z.abs(),
            CostFunction::Custom(f) => f(z),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostFunction::Quadratic => "quadratic",
            CostFunction::Absolute => "absolute",
            CostFunction::Custom(_) => "custom",
        }
    }
}

/// A cost function together with its expected-cost budget.
#[derive(Clone, Copy, Debug)]
pub struct CostSpec {
    pub cost_function: CostFunction,
    pub budget: f64,
}

impl CostSpec {
    pub fn new(cost_function: CostFunction, budget: f64) -> Result<Self> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(DpaError::InvalidInput(format!(
                "budget must be positive, got {budget}"
            )));
        }
        Ok(Self {
            cost_function,
            budget,
        })
    }
}

/// A symmetric noise distribution on a uniform grid with analytic geometric
/// tails beyond the core.
///
/// `core_masses` holds point masses at `z = i * grid_spacing` for
/// `i = -N ..= N` (odd length, centered). Beyond the core the mass at offset
/// `j` past the boundary is `boundary_mass * tail_decay_rate^j` on each side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseDistribution {
    pub grid_spacing: f64,
    pub core_masses: Vec<f64>,
    pub tail_decay_rate: f64,
}

impl NoiseDistribution {
    pub fn new(grid_spacing: f64, core_masses: Vec<f64>, tail_decay_rate: f64) -> Result<Self> {
        let nd = Self {
            grid_spacing,
            core_masses,
            tail_decay_rate,
        };
        nd.validate()?;
        Ok(nd)
    }

    /// Half-width of the core in grid steps.
    pub fn half_width(&self) -> usize {
        self.core_masses.len() / 2
    }

    pub fn z_max(&self) -> f64 {
        self.half_width() as f64 * self.grid_spacing
    }

    fn boundary_mass(&self) -> f64 {
        *self.core_masses.last().unwrap_or(&0.0)
    }

    /// Total mass of both analytic tails.
    pub fn tail_mass(&self) -> f64 {
        let r = self.tail_decay_rate;
        2.0 * self.boundary_mass() * r / (1.0 - r)
    }

    /// Mass at signed grid index `i` (0 is the center), tails included.
    pub fn mass_at(&self, i: i64) -> f64 {
        let n = self.half_width() as i64;
        if i.abs() <= n {
            self.core_masses[(i + n) as usize]
        } else {
            self.boundary_mass() * self.tail_decay_rate.powi((i.abs() - n) as i32)
        }
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.core_masses.iter().copied()) + self.tail_mass()
    }

    /// Expected cost including the analytic tails.
    pub fn expected_cost(&self, cost: &CostFunction) -> f64 {
        let n = self.half_width() as i64;
        let h = self.grid_spacing;
        let mut acc = neumaier_sum(
            (-n..=n).map(|i| self.core_masses[(i + n) as usize] * cost.eval(i as f64 * h)),
        );
        let b = self.boundary_mass();
        if b > 0.0 {
            let r = self.tail_decay_rate;
            let mut term_mass = b * r;
            let mut j = 1i64;
            while term_mass > 1e-300 {
                let z = (n + j) as f64 * h;
                let c = cost.eval(z);
                acc += 2.0 * term_mass * c;
                if 2.0 * term_mass * c < 1e-18 * acc.abs().max(1e-300) && j > 4 {
                    break;
                }
                term_mass *= r;
                j += 1;
                if j > 50_000_000 {
                    break;
                }
            }
        }
        acc
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_spacing > 0.0 && self.grid_spacing.is_finite()) {
            return Err(DpaError::InvalidInput("non-positive grid spacing".into()));
        }
        if self.core_masses.len() % 2 != 1 {
            return Err(DpaError::InvalidInput(
                "core_masses must have odd length (centered grid)".into(),
            ));
        }
        if !(self.tail_decay_rate > 0.0 && self.tail_decay_rate < 1.0) {
            return Err(DpaError::InvalidInput(format!(
                "tail decay rate must lie in (0, 1), got {}",
                self.tail_decay_rate
            )));
        }
        let n = self.core_masses.len();
        for i in 0..n {
            let m = self.core_masses[i];
            if m < 0.0 {
                return Err(DpaError::InvalidInput(format!("negative mass {m:e}")));
            }
            let mirrored = self.core_masses[n - 1 - i];
            if (m - mirrored).abs() > 1e-12 * m.abs().max(1.0) {
                return Err(DpaError::InvalidInput(format!(
                    "asymmetric masses at offset {i}: {m} vs {mirrored}"
                )));
            }
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > 1e-10 {
            return Err(DpaError::InvalidInput(format!(
                "total mass {total} is not 1 within 1e-10"
            )));
        }
        Ok(())
    }

    /// Loss distribution of the additive mechanism using this noise against a
    /// query of the given sensitivity (`(noise, noise + s)` dominating pair).
    ///
    /// The sensitivity must be an integer number of grid steps. Tails are
    /// expanded until the residual mass drops below 1e-15 per side; the
    /// residual sits deep in the constant-loss tail region and is added to
    /// the exact tail atoms.
    pub fn mechanism_pld(
        &self,
        sensitivity: f64,
        policy: &DiscretizationPolicy,
    ) -> Result<PrivacyLossDistribution> {
        policy.validate()?;
        let h = self.grid_spacing;
        let shift_f = sensitivity / h;
        let shift = shift_f.round();
        if (shift_f - shift).abs() > 1e-9 || shift < 1.0 {
            return Err(DpaError::InvalidInput(format!(
                "sensitivity {sensitivity} is not a positive multiple of spacing {h}"
            )));
        }
        let shift = shift as i64;
        let n = self.half_width() as i64;
        let r = self.tail_decay_rate;
        // Deep-tail loss per step is ln(1/r); a shift of `shift` steps gives
        // a constant loss in the geometric region.
        let tail_loss = shift as f64 * (1.0 / r).ln();
        // Extend far enough that the skipped tail is negligible but still
        // accounted for as exact atoms at the constant tail loss.
        let mut extra = 1i64;
        let mut skipped = self.boundary_mass() * r;
        while skipped > 1e-15 && extra < 100_000_000 {
            skipped *= r;
            extra += 1;
        }
        let lo = -(n + extra + shift);
        let hi = n + extra;
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity((hi - lo + 1) as usize + 2);
        for i in lo..=hi {
            let p = self.mass_at(i);
            if p <= 0.0 {
                continue;
            }
            let q = self.mass_at(i - shift);
            if q > 0.0 {
                atoms.push(((p / q).ln(), p));
            } else {
                // Deep-tail denominator underflowed; the exact ratio there is
                // the constant geometric step ratio.
                atoms.push((tail_loss, p));
            }
        }
        // Residual tails beyond the enumerated range carry the constant
        // geometric-region losses exactly.
        let boundary = self.boundary_mass();
        let right_residual = boundary * r.powi(extra as i32) * r / (1.0 - r);
        let left_residual = boundary * r.powi((extra + shift) as i32) * r / (1.0 - r);
        atoms.push((-tail_loss, right_residual));
        atoms.push((tail_loss, left_residual));
        // The noise normalization tolerance (1e-10) is looser than the loss
        // distribution's (1e-12); rescale exactly.
        let total = neumaier_sum(atoms.iter().map(|&(_, m)| m));
        for atom in atoms.iter_mut() {
            atom.1 /= total;
        }
        PrivacyLossDistribution::from_atoms(&atoms, 0.0, policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_noise() -> NoiseDistribution {
        // Symmetric triangular-ish masses with a geometric tail.
        let mut masses = vec![0.05, 0.2, 0.5, 0.2, 0.05];
        let r: f64 = 0.5;
        let tail = 2.0 * 0.05 * r / (1.0 - r);
        let scale = 1.0 / (1.0 + tail);
        for m in masses.iter_mut() {
            *m *= scale;
        }
        NoiseDistribution::new(1.0, masses, r).unwrap()
    }

    #[test]
    fn total_mass_includes_tails() {
        let nd = triangle_noise();
        assert!((nd.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_masses_are_rejected() {
        let nd = NoiseDistribution {
            grid_spacing: 1.0,
            core_masses: vec![0.3, 0.5, 0.2],
            tail_decay_rate: 0.5,
        };
        assert!(nd.validate().is_err());
    }

    #[test]
    fn noise_pld_conserves_mass_and_respects_tail_loss() {
        let nd = triangle_noise();
        let policy = DiscretizationPolicy::default();
        let pld = nd.mechanism_pld(1.0, &policy).unwrap();
        pld.validate().unwrap();
        // Deep-tail loss per unit shift is ln(1/r) = ln 2.
        assert!(pld.max_loss() <= (2.0f64).ln() + 3.0);
        assert_eq!(pld.infinity_mass, 0.0);
    }

    #[test]
    fn non_grid_sensitivity_is_rejected() {
        let nd = triangle_noise();
        let err = nd.mechanism_pld(0.5, &DiscretizationPolicy::default());
        assert!(err.is_err());
    }
}
