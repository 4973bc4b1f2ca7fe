//! Minimax-KL noise design on a finite grid.
//!
//! Minimizes `max_{a in {h, 2h, ..., s}} KL(p || shift_a p)` over symmetric
//! distributions `p` on the grid `{-Z_max, ..., Z_max}` subject to
//! `E[c(Z)] <= C`. The problem is convex (KL is jointly convex, shifting is
//! linear, a max of convex functions is convex); the solver runs mirror
//! descent on the simplex against a smoothed max (a tight log-sum-exp
//! epigraph surrogate), with a KL projection (exponential tilt) onto the cost
//! constraint after every step. Iterates stay strictly positive, and the
//! grid carries geometric tails of rate `e^{-h}` whose shifted-KL
//! contribution is bounded and checked against `tolerance / 10`.
//!
//! Grids with at least 200 half-cells are pre-solved at double spacing and
//! refined, so a finer grid starts from (an interpolation of) the coarser
//! optimum and can only improve on it.

use crate::error::{DpaError, Result};
use crate::optimize::{CostSpec, NoiseDistribution};
use crate::quadrature::neumaier_sum;

/// Result of a Cactus solve.
#[derive(Clone, Debug)]
pub struct CactusSolution {
    pub noise: NoiseDistribution,
    /// Worst shifted KL over the grid shifts, including the tail bound.
    pub objective: f64,
    /// False when the iteration cap was hit before the stagnation test; the
    /// best iterate found is still returned.
    pub converged: bool,
    pub iterations: usize,
}

struct Workspace {
    /// Half spacing count: grid indices -n..=n.
    n: i64,
    /// Shift sizes in grid steps: 1..=shift_max.
    shift_max: i64,
    /// Cost values c(z_i) for i in -n..=n.
    cost_values: Vec<f64>,
    budget: f64,
    /// ln of the tail decay rate (negative).
    ln_r: f64,
}

impl Workspace {
    fn idx(&self, i: i64) -> usize {
        (i + self.n) as usize
    }

    fn p_at(&self, p: &[f64], i: i64) -> f64 {
        if i.abs() <= self.n {
            p[self.idx(i)]
        } else {
            p[self.idx(self.n.min(i.abs()))] * ((i.abs() - self.n) as f64 * self.ln_r).exp()
        }
    }

    fn ln_p_at(&self, ln_p: &[f64], i: i64) -> f64 {
        if i.abs() <= self.n {
            ln_p[self.idx(i)]
        } else {
            ln_p[self.idx(self.n)] + (i.abs() - self.n) as f64 * self.ln_r
        }
    }

    /// Shifted KL divergences for every shift, core cells only.
    fn shifted_kls(&self, p: &[f64], ln_p: &[f64], out: &mut [f64]) {
        for j in 1..=self.shift_max {
            let mut acc = 0.0;
            for i in -self.n..=self.n {
                let pi = p[self.idx(i)];
                if pi > 0.0 {
                    acc += pi * (ln_p[self.idx(i)] - self.ln_p_at(ln_p, i - j));
                }
            }
            out[(j - 1) as usize] = acc;
        }
    }

    /// Gradient of `sum_j w_j KL_j` with respect to the core masses,
    /// dropping the constant term that normalization cancels.
    fn gradient(&self, p: &[f64], ln_p: &[f64], weights: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for j in 1..=self.shift_max {
            let w = weights[(j - 1) as usize];
            if w <= 0.0 {
                continue;
            }
            for i in -self.n..=self.n {
                let ratio = ln_p[self.idx(i)] - self.ln_p_at(ln_p, i - j);
                let pulled = self.p_at(p, i + j) / p[self.idx(i)];
                grad[self.idx(i)] += w * (ratio - pulled);
            }
        }
        // Impose the symmetry constraint by averaging mirrored coordinates.
        for i in 1..=self.n {
            let a = grad[self.idx(i)];
            let b = grad[self.idx(-i)];
            let m = 0.5 * (a + b);
            grad[self.idx(i)] = m;
            grad[self.idx(-i)] = m;
        }
    }

    fn cost(&self, p: &[f64]) -> f64 {
        neumaier_sum(p.iter().zip(&self.cost_values).map(|(&m, &c)| m * c))
    }

    fn normalize(&self, p: &mut [f64]) {
        let total = neumaier_sum(p.iter().copied());
        for m in p.iter_mut() {
            *m = (*m / total).max(1e-300);
        }
    }

    fn symmetrize(&self, p: &mut [f64]) {
        for i in 1..=self.n {
            let m = 0.5 * (p[self.idx(i)] + p[self.idx(-i)]);
            p[self.idx(i)] = m;
            p[self.idx(-i)] = m;
        }
    }

    /// KL projection onto the cost constraint: exponential tilt
    /// `p e^{-t c(z)}` with the smallest `t >= 0` meeting the budget.
    fn project_cost(&self, p: &mut [f64]) {
        if self.cost(p) <= self.budget {
            return;
        }
        let tilt = |p: &[f64], t: f64| -> (Vec<f64>, f64) {
            let mut q: Vec<f64> = p
                .iter()
                .zip(&self.cost_values)
                .map(|(&m, &c)| m * (-t * c).max(-600.0).exp())
                .collect();
            let total = neumaier_sum(q.iter().copied());
            for m in q.iter_mut() {
                *m = (*m / total).max(1e-300);
            }
            let cost = neumaier_sum(q.iter().zip(&self.cost_values).map(|(&m, &c)| m * c));
            (q, cost)
        };
        let mut t_hi = 1.0;
        for _ in 0..200 {
            if tilt(p, t_hi).1 <= self.budget {
                break;
            }
            t_hi *= 2.0;
        }
        let mut t_lo = 0.0;
        for _ in 0..120 {
            let t = 0.5 * (t_lo + t_hi);
            let (_, cost) = tilt(p, t);
            if cost <= self.budget {
                t_hi = t;
            } else {
                t_lo = t;
            }
            if (t_hi - t_lo) < 1e-14 * t_hi.max(1.0) {
                break;
            }
        }
        let (q, _) = tilt(p, t_hi);
        p.copy_from_slice(&q);
    }
}

fn smooth_max(kls: &[f64], temperature: f64, weights: &mut [f64]) -> (f64, f64) {
    let max = kls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (w, &v) in weights.iter_mut().zip(kls) {
        *w = ((v - max) / temperature).exp();
        z += *w;
    }
    for w in weights.iter_mut() {
        *w /= z;
    }
    (max, max + temperature * z.ln())
}

fn solve_on_grid(
    sensitivity: f64,
    cost: &CostSpec,
    z_max: f64,
    spacing: f64,
    tolerance: f64,
    warm_start: Option<Vec<f64>>,
    max_iterations: usize,
) -> Result<(Vec<f64>, f64, bool, usize)> {
    let n = (z_max / spacing).round() as i64;
    let shift_max = (sensitivity / spacing).round() as i64;
    let size = (2 * n + 1) as usize;
    let ws = Workspace {
        n,
        shift_max,
        cost_values: (-n..=n)
            .map(|i| cost.cost_function.eval(i as f64 * spacing))
            .collect(),
        budget: cost.budget,
        ln_r: -spacing,
    };

    let mut p = match warm_start {
        Some(p0) => p0,
        None => vec![1.0 / size as f64; size],
    };
    ws.normalize(&mut p);
    ws.symmetrize(&mut p);
    ws.project_cost(&mut p);

    let num_shifts = shift_max as usize;
    let mut kls = vec![0.0; num_shifts];
    let mut weights = vec![0.0; num_shifts];
    let mut grad = vec![0.0; size];
    let mut ln_p: Vec<f64> = vec![0.0; size];

    let mut best_obj = f64::INFINITY;
    let mut best_p = p.clone();
    let mut iterations = 0usize;
    let mut converged = true;

    // Annealed smoothing: descend on a log-sum-exp surrogate of the max,
    // sharpening the temperature so late stages track the true minimax. The
    // reported objective is always the true max of the best iterate.
    let mut temperature = (0.5 * tolerance).max(1e-4);
    let final_temperature = 1e-8;
    loop {
        let eval =
            |p: &[f64], ln_p: &mut [f64], kls: &mut [f64], weights: &mut [f64]| -> (f64, f64) {
                for (l, &m) in ln_p.iter_mut().zip(p) {
                    *l = m.ln();
                }
                ws.shifted_kls(p, ln_p, kls);
                smooth_max(kls, temperature, weights)
            };

        let (stage_max, mut smooth) = eval(&p, &mut ln_p, &mut kls, &mut weights);
        if stage_max < best_obj {
            best_obj = stage_max;
            best_p.copy_from_slice(&p);
        }
        let mut eta = 0.5;
        let mut last_improvement = iterations;
        let mut stage_converged = false;

        while iterations < max_iterations {
            iterations += 1;
            ws.gradient(&p, &ln_p, &weights, &mut grad);
            let gmax = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs())).max(1e-12);

            let mut accepted = false;
            for _ in 0..30 {
                let mut candidate: Vec<f64> = p
                    .iter()
                    .zip(&grad)
                    .map(|(&m, &g)| m * ((-eta * g / gmax).max(-500.0)).exp())
                    .collect();
                ws.normalize(&mut candidate);
                ws.symmetrize(&mut candidate);
                ws.project_cost(&mut candidate);
                let (cand_max, cand_smooth) = eval(&candidate, &mut ln_p, &mut kls, &mut weights);
                if cand_smooth <= smooth + 1e-14 {
                    p = candidate;
                    smooth = cand_smooth;
                    if cand_max < best_obj - 1e-9 {
                        last_improvement = iterations;
                    }
                    if cand_max < best_obj {
                        best_obj = cand_max;
                        best_p.copy_from_slice(&p);
                    }
                    eta = (eta * 1.3).min(200.0);
                    accepted = true;
                    break;
                }
                eta *= 0.5;
                if eta < 1e-13 {
                    break;
                }
            }
            if !accepted {
                // No descent direction on this surrogate; sharpen or stop.
                let _ = eval(&p, &mut ln_p, &mut kls, &mut weights);
                stage_converged = true;
                break;
            }
            if iterations - last_improvement > 1200 {
                stage_converged = true;
                break;
            }
        }

        if temperature <= final_temperature {
            converged = stage_converged;
            break;
        }
        if iterations >= max_iterations {
            converged = false;
            break;
        }
        temperature = (temperature / 8.0).max(final_temperature);
        // Continue from the best iterate found so far.
        p.copy_from_slice(&best_p);
    }

    Ok((best_p, best_obj, converged, iterations))
}

/// Interpolates a coarse symmetric solution onto a grid of half the spacing.
fn refine_grid(coarse: &[f64]) -> Vec<f64> {
    let n_coarse = coarse.len() / 2;
    let n_fine = 2 * n_coarse;
    let mut fine = vec![0.0f64; 2 * n_fine + 1];
    for i in 0..coarse.len() {
        fine[2 * i] = coarse[i];
    }
    for i in 0..n_fine {
        let a = fine[2 * i];
        let b = fine[2 * i + 2];
        fine[2 * i + 1] = (a * b).sqrt().max(1e-300);
    }
    fine
}

/// Solves the minimax shifted-KL problem on the grid `(z_max, spacing)`.
///
/// `sensitivity` must be a positive multiple of `spacing`, and `z_max` must
/// cover at least `5 * max(sqrt(budget), sensitivity)` so the optimum's tails
/// fit the grid.
pub fn solve_cactus(
    sensitivity: f64,
    cost: &CostSpec,
    z_max: f64,
    spacing: f64,
    tolerance: f64,
) -> Result<CactusSolution> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(DpaError::InvalidInput("sensitivity must be positive".into()));
    }
    if !(spacing > 0.0 && z_max > spacing) {
        return Err(DpaError::InvalidInput("invalid grid".into()));
    }
    if !(tolerance > 0.0) {
        return Err(DpaError::InvalidInput("tolerance must be positive".into()));
    }
    let shifts = sensitivity / spacing;
    if (shifts - shifts.round()).abs() > 1e-9 || shifts.round() < 1.0 {
        return Err(DpaError::InvalidInput(format!(
            "sensitivity {sensitivity} must be a positive multiple of spacing {spacing}"
        )));
    }
    if z_max < 5.0 * cost.budget.sqrt().max(sensitivity) - 1e-12 {
        return Err(DpaError::InvalidInput(format!(
            "z_max {z_max} below 5 * max(sqrt(budget), sensitivity)"
        )));
    }
    if !(cost.budget > 0.0) {
        return Err(DpaError::Infeasible("non-positive budget".into()));
    }

    // Multigrid warm start: pre-solve at double spacing while the shift count
    // stays an even integer and the grid is still large.
    let n = (z_max / spacing).round() as i64;
    let shift_steps = shifts.round() as i64;
    let warm = if n >= 200 && n % 2 == 0 && shift_steps % 2 == 0 {
        let coarse = solve_cactus(sensitivity, cost, z_max, spacing * 2.0, tolerance)?;
        let mut fine = refine_grid(&coarse.noise.core_masses);
        let total = neumaier_sum(fine.iter().copied());
        for m in fine.iter_mut() {
            *m /= total;
        }
        Some(fine)
    } else {
        None
    };

    let max_iterations = 120_000;
    let (p, core_objective, converged, iterations) = solve_on_grid(
        sensitivity,
        cost,
        z_max,
        spacing,
        tolerance,
        warm,
        max_iterations,
    )?;

    // Package with geometric tails of rate e^{-spacing} and fold the tail
    // mass into the normalization.
    let r = (-spacing).exp();
    let boundary = *p.last().unwrap();
    let tail = 2.0 * boundary * r / (1.0 - r);
    let core_total = neumaier_sum(p.iter().copied());
    let scale = 1.0 / (core_total + tail);
    let core: Vec<f64> = p.iter().map(|&m| m * scale).collect();
    let noise = NoiseDistribution::new(spacing, core, r)?;

    // Shifted-KL contribution of the analytic tails: each tail unit of mass
    // contributes at most `sensitivity` nats (constant geometric ratio), so
    // the bound is tail_mass * s. It must stay below tolerance / 10.
    let tail_bound = noise.tail_mass() * sensitivity;
    if !(tail_bound < tolerance / 10.0) {
        return Err(DpaError::Infeasible(format!(
            "tail shifted-KL bound {tail_bound:e} exceeds tolerance/10; widen z_max"
        )));
    }
    let objective = core_objective + tail_bound;

    Ok(CactusSolution {
        noise,
        objective,
        converged,
        iterations,
    })
}
