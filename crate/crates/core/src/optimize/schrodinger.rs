//! Ground-state ODE solve for small-sensitivity-optimal noise.
//!
//! The optimal density is `p(z) = y(z)^2` where `y` solves
//! `y'' = (theta c(z) - E) y`. For each `theta` the ground state is found by
//! shooting from the even-symmetry initial conditions `y(0) = 1, y'(0) = 0`
//! with fourth-order integration outward and bisection on `E` to the
//! nodeless solution vanishing at the boundary; an outer bisection on
//! `theta` matches the expected cost to the budget.

use crate::error::{DpaError, Result};
use crate::optimize::{CostSpec, NoiseDistribution};
use crate::quadrature::neumaier_sum;

struct Shot {
    /// y on the half grid 0..=n, or up to the first non-finite value.
    y: Vec<f64>,
    crossed: bool,
}

/// RK4 on the system (y, y') with y'' = (theta c(z) - E) y.
fn shoot(cost: &CostSpec, theta: f64, energy: f64, boundary: f64, n: usize) -> Shot {
    let h = boundary / n as f64;
    let k = |z: f64| theta * cost.cost_function.eval(z) - energy;
    let mut y = Vec::with_capacity(n + 1);
    let mut yi = 1.0f64;
    let mut vi = 0.0f64;
    y.push(yi);
    let mut crossed = false;
    for i in 0..n {
        let z = i as f64 * h;
        let f = |z: f64, y: f64, v: f64| (v, k(z) * y);
        let (k1y, k1v) = f(z, yi, vi);
        let (k2y, k2v) = f(z + 0.5 * h, yi + 0.5 * h * k1y, vi + 0.5 * h * k1v);
        let (k3y, k3v) = f(z + 0.5 * h, yi + 0.5 * h * k2y, vi + 0.5 * h * k2v);
        let (k4y, k4v) = f(z + h, yi + h * k3y, vi + h * k3v);
        yi += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        vi += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !yi.is_finite() {
            crossed = yi.is_nan() || yi < 0.0;
            break;
        }
        y.push(yi);
        if yi <= 0.0 {
            crossed = true;
            break;
        }
    }
    Shot { y, crossed }
}

/// Ground-state energy: the crossing threshold of the shooting solution.
fn ground_energy(cost: &CostSpec, theta: f64, boundary: f64, n: usize) -> Result<f64> {
    // E = 0 never crosses: y'' = theta c y >= 0 keeps y convex and >= 1.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut tries = 0;
    while !shoot(cost, theta, hi, boundary, n).crossed {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(DpaError::NoGroundState(format!(
                "no crossing up to E = {hi:e} at theta {theta:e}"
            )));
        }
    }
    // The stated tolerance is 1e-10, but the shooting solution at the
    // boundary is contaminated by the growing mode at scale
    // delta_E * e^{S(boundary)}, so run the bisection down to float
    // resolution to keep the decay check meaningful.
    let mut iter = 0;
    while hi - lo > 1e-15 * hi.max(1.0) && iter < 140 {
        let mid = 0.5 * (lo + hi);
        if shoot(cost, theta, mid, boundary, n).crossed {
            hi = mid;
        } else {
            lo = mid;
        }
        iter += 1;
    }
    Ok(lo)
}

/// Density (as grid masses on the symmetric grid) for a given theta, together
/// with its expected cost.
fn ground_state_masses(
    cost: &CostSpec,
    theta: f64,
    boundary: f64,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let energy = ground_energy(cost, theta, boundary, n)?;
    let shot = shoot(cost, theta, energy, boundary, n);
    let h = boundary / n as f64;
    // The nodeless solution may be cut short by the crossing bracket; pad
    // with zeros (the true solution is exponentially small there).
    let mut half: Vec<f64> = shot.y.iter().map(|&y| y * y).collect();
    half.resize(n + 1, 0.0);
    // Symmetric masses: index i in -n..=n gets y(|i| h)^2.
    let mut masses = vec![0.0f64; 2 * n + 1];
    for i in 0..=n {
        masses[n + i] = half[i];
        masses[n - i] = half[i];
    }
    let total = neumaier_sum(masses.iter().copied());
    for m in masses.iter_mut() {
        *m /= total;
    }
    let expected = neumaier_sum(
        (0..masses.len()).map(|j| masses[j] * cost.cost_function.eval((j as f64 - n as f64) * h)),
    );
    Ok((masses, expected))
}

/// Solves for the noise density whose square root is the ground state of the
/// cost potential, normalized and matched to the cost budget.
pub fn solve_schrodinger(cost: &CostSpec, boundary: f64, ode_step: f64) -> Result<NoiseDistribution> {
    if !(boundary > 0.0 && boundary.is_finite()) {
        return Err(DpaError::InvalidInput("boundary must be positive".into()));
    }
    if !(ode_step > 0.0 && ode_step < boundary / 8.0) {
        return Err(DpaError::InvalidInput(format!(
            "ode_step {ode_step} must be positive and well below the boundary"
        )));
    }
    let n = (boundary / ode_step).ceil() as usize;

    // Outer bisection on theta: expected cost decreases as the potential
    // steepens. Bracket by doubling/halving from theta = 1.
    let cost_at = |theta: f64| -> Result<f64> {
        Ok(ground_state_masses(cost, theta, boundary, n)?.1)
    };
    let mut theta_lo;
    let mut theta_hi;
    let c1 = cost_at(1.0)?;
    if c1 > cost.budget {
        theta_lo = 1.0;
        theta_hi = 2.0;
        let mut tries = 0;
        while cost_at(theta_hi)? > cost.budget {
            theta_lo = theta_hi;
            theta_hi *= 2.0;
            tries += 1;
            if tries > 100 {
                return Err(DpaError::Infeasible(
                    "cost bracket not found while raising theta".into(),
                ));
            }
        }
    } else {
        theta_hi = 1.0;
        theta_lo = 0.5;
        let mut tries = 0;
        while cost_at(theta_lo)? <= cost.budget {
            theta_hi = theta_lo;
            theta_lo *= 0.5;
            tries += 1;
            if tries > 100 {
                return Err(DpaError::Infeasible(
                    "cost bracket not found while lowering theta".into(),
                ));
            }
        }
    }
    // Invariant: cost(theta_lo) > budget >= cost(theta_hi).
    let mut theta = 0.5 * (theta_lo + theta_hi);
    for _ in 0..300 {
        theta = 0.5 * (theta_lo + theta_hi);
        let c = cost_at(theta)?;
        if (c - cost.budget).abs() <= 1e-6 {
            break;
        }
        if c > cost.budget {
            theta_lo = theta;
        } else {
            theta_hi = theta;
        }
        if (theta_hi - theta_lo) < 1e-15 * theta_hi.max(1.0) {
            break;
        }
    }

    let (masses, _) = ground_state_masses(cost, theta, boundary, n)?;
    // Decay check at the boundary.
    let center = masses[n];
    let edge = masses[2 * n].max(masses[2 * n - 1]);
    if !(edge / center < 1e-8) {
        return Err(DpaError::BoundaryTooSmall(format!(
            "p(boundary)/p(0) = {:e} >= 1e-8",
            edge / center
        )));
    }
    // Geometric tail rate estimated from the last resolvable step.
    let mut rate: f64 = 0.5;
    for i in (1..=2 * n).rev() {
        if masses[i] > 1e-280 && masses[i - 1] > 1e-280 {
            rate = (masses[i] / masses[i - 1]).clamp(1e-12, 1.0 - 1e-12);
            break;
        }
    }
    let h = boundary / n as f64;
    // Fold the analytic tail into the normalization.
    let boundary_mass = masses[2 * n];
    let tail = 2.0 * boundary_mass * rate / (1.0 - rate);
    let core_total = neumaier_sum(masses.iter().copied());
    let scale = 1.0 / (core_total + tail);
    let core: Vec<f64> = masses.iter().map(|&m| m * scale).collect();
    NoiseDistribution::new(h, core, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::CostFunction;

    #[test]
    fn quadratic_cost_recovers_the_gaussian() {
        let cost = CostSpec::new(CostFunction::Quadratic, 1.0).unwrap();
        let noise = solve_schrodinger(&cost, 8.0, 1e-3).unwrap();
        noise.validate().unwrap();
        let h = noise.grid_spacing;
        let n = noise.half_width() as i64;
        // Compare the implied density to the unit Gaussian in sup norm.
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let mut worst: f64 = 0.0;
        for i in -n..=n {
            let z = i as f64 * h;
            let density = noise.mass_at(i) / h;
            let gauss = (-0.5 * z * z).exp() / norm;
            worst = worst.max((density - gauss).abs());
        }
        assert!(worst < 1e-3, "sup-norm gap {worst}");
        let second = noise.expected_cost(&CostFunction::Quadratic);
        assert!((second - 1.0).abs() < 1e-4, "variance {second}");
    }

    #[test]
    fn absolute_cost_gives_symmetric_unimodal_non_laplace_density() {
        let cost = CostSpec::new(CostFunction::Absolute, 1.0).unwrap();
        let noise = solve_schrodinger(&cost, 10.0, 2e-3).unwrap();
        noise.validate().unwrap();
        let realized = noise.expected_cost(&CostFunction::Absolute);
        assert!((realized - 1.0).abs() < 1e-4, "cost {realized}");
        // Unimodal: masses non-increasing away from the center.
        let n = noise.half_width() as i64;
        let mut prev = noise.mass_at(0);
        let mut nonlinear = false;
        let mut prev_slope: Option<f64> = None;
        for i in 1..=n {
            let m = noise.mass_at(i);
            assert!(m <= prev + 1e-15, "mass rises at {i}");
            // Log-density slope changes if the density is not exponential.
            if m > 1e-30 && prev > 1e-30 {
                let slope = (m / prev).ln();
                if let Some(s) = prev_slope {
                    if (slope - s).abs() > 1e-6 {
                        nonlinear = true;
                    }
                }
                prev_slope = Some(slope);
            }
            prev = m;
        }
        assert!(nonlinear, "log-density looks linear (Laplace-like)");
    }

    #[test]
    fn small_boundary_is_rejected() {
        // At boundary 3.5 the cost budget is attainable but the ground state
        // cannot decay below 1e-8 of its peak.
        let cost = CostSpec::new(CostFunction::Quadratic, 1.0).unwrap();
        assert!(matches!(
            solve_schrodinger(&cost, 3.5, 1e-3),
            Err(DpaError::BoundaryTooSmall(_))
        ));
    }

    #[test]
    fn ground_state_is_nodeless() {
        let cost = CostSpec::new(CostFunction::Quadratic, 1.0).unwrap();
        let noise = solve_schrodinger(&cost, 8.0, 1e-3).unwrap();
        let n = noise.half_width() as i64;
        for i in -(n - 1)..=(n - 1) {
            assert!(noise.mass_at(i) > 0.0, "zero mass at interior index {i}");
        }
    }
}
