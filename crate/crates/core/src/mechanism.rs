//! Mechanism specifications, dominating pairs, samplers and costs.
//!
//! Every family here is a scalar-query mechanism. For the additive-noise
//! families (Gaussian, Laplace, staircase) the dominating pair is
//! `(noise, noise + sensitivity)`: for symmetric unimodal noise the shifted
//! pair is the standard tight worst case over neighboring datasets, taken as
//! a documented assumption rather than proven in code. Randomized response is
//! a two-point channel and its conditionals form the pair directly.
//!
//! The loss distributions are built from closed-form cell masses (CDF
//! differences and band arithmetic), which the generic quadrature-based
//! discretizer cross-checks in tests.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{DpaError, Result};
use crate::optimize::CostFunction;
use crate::pld::{loss_to_index, DiscretizationPolicy, PrivacyLossDistribution};
use crate::quadrature::integrate_real_line;

/// Mechanism family with its noise parameters.
///
/// `lambda` is the Laplace rate: the density is `(lambda/2) e^{-lambda |y|}`,
/// so larger `lambda` means more concentrated noise and less privacy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MechanismFamily {
    Gaussian { sigma: f64 },
    Laplace { lambda: f64 },
    Staircase { epsilon: f64, eta: f64 },
    RandomizedResponse { epsilon: f64 },
}

impl MechanismFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismFamily::Gaussian { .. } => "gaussian",
            MechanismFamily::Laplace { .. } => "laplace",
            MechanismFamily::Staircase { .. } => "staircase",
            MechanismFamily::RandomizedResponse { .. } => "randomized_response",
        }
    }
}

/// Declarative description of a mechanism: family plus query sensitivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MechanismSpec {
    pub family: MechanismFamily,
    pub sensitivity: f64,
}

impl MechanismSpec {
    pub fn new(family: MechanismFamily, sensitivity: f64) -> Result<Self> {
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(DpaError::InvalidSpec(format!(
                "sensitivity must be positive, got {sensitivity}"
            )));
        }
        match family {
            MechanismFamily::Gaussian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(DpaError::InvalidSpec(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
            }
            MechanismFamily::Laplace { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(DpaError::InvalidSpec(format!(
                        "lambda must be positive, got {lambda}"
                    )));
                }
            }
            MechanismFamily::Staircase { epsilon, eta } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(DpaError::InvalidSpec(format!(
                        "staircase epsilon must be positive, got {epsilon}"
                    )));
                }
                if !(eta > 0.0 && eta <= sensitivity) {
                    return Err(DpaError::InvalidSpec(format!(
                        "staircase eta must lie in (0, sensitivity], got {eta}"
                    )));
                }
            }
            MechanismFamily::RandomizedResponse { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(DpaError::InvalidSpec(format!(
                        "randomized response epsilon must be positive, got {epsilon}"
                    )));
                }
            }
        }
        Ok(Self {
            family,
            sensitivity,
        })
    }

    pub fn gaussian(sigma: f64, sensitivity: f64) -> Result<Self> {
        Self::new(MechanismFamily::Gaussian { sigma }, sensitivity)
    }

    pub fn laplace(lambda: f64, sensitivity: f64) -> Result<Self> {
        Self::new(MechanismFamily::Laplace { lambda }, sensitivity)
    }

    pub fn staircase(epsilon: f64, eta: f64, sensitivity: f64) -> Result<Self> {
        Self::new(MechanismFamily::Staircase { epsilon, eta }, sensitivity)
    }

    pub fn randomized_response(epsilon: f64, sensitivity: f64) -> Result<Self> {
        Self::new(MechanismFamily::RandomizedResponse { epsilon }, sensitivity)
    }

    /// JSON form `{"family": ..., "params": {...}, "sensitivity": ...}`.
    pub fn to_json(&self) -> MechanismSpecJson {
        let mut params = BTreeMap::new();
        match self.family {
            MechanismFamily::Gaussian { sigma } => {
                params.insert("sigma".into(), sigma);
            }
            MechanismFamily::Laplace { lambda } => {
                params.insert("lambda".into(), lambda);
            }
            MechanismFamily::Staircase { epsilon, eta } => {
                params.insert("epsilon".into(), epsilon);
                params.insert("eta".into(), eta);
            }
            MechanismFamily::RandomizedResponse { epsilon } => {
                params.insert("epsilon".into(), epsilon);
            }
        }
        MechanismSpecJson {
            family: self.family.name().into(),
            params,
            sensitivity: self.sensitivity,
        }
    }

    pub fn from_json(json: &MechanismSpecJson) -> Result<Self> {
        let get = |k: &str| {
            json.params
                .get(k)
                .copied()
                .ok_or_else(|| DpaError::InvalidSpec(format!("missing parameter '{k}'")))
        };
        let family = match json.family.as_str() {
            "gaussian" => MechanismFamily::Gaussian { sigma: get("sigma")? },
            "laplace" => MechanismFamily::Laplace { lambda: get("lambda")? },
            "staircase" => MechanismFamily::Staircase {
                epsilon: get("epsilon")?,
                eta: get("eta")?,
            },
            "randomized_response" => MechanismFamily::RandomizedResponse {
                epsilon: get("epsilon")?,
            },
            other => {
                return Err(DpaError::InvalidSpec(format!("unknown family '{other}'")));
            }
        };
        Self::new(family, json.sensitivity)
    }
}

/// Serialized mechanism spec consumed by the CLI subcommands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MechanismSpecJson {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub sensitivity: f64,
}

// ---------------------------------------------------------------------------
// Staircase geometry
// ---------------------------------------------------------------------------

/// Band structure of the staircase density `p(z) = c e^{-k eps}` for
/// `|z|` in band `k`, with the central band read as `|z| <= eta`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Staircase {
    pub epsilon: f64,
    pub eta: f64,
    pub s: f64,
    /// Central density level `c`.
    pub level: f64,
}

impl Staircase {
    pub fn new(epsilon: f64, eta: f64, s: f64) -> Self {
        let geo = (-epsilon).exp() / (1.0 - (-epsilon).exp());
        let level = 1.0 / (2.0 * eta + 2.0 * s * geo);
        Self {
            epsilon,
            eta,
            s,
            level,
        }
    }

    /// Band index of `|z|`: 0 on `[0, eta]`, then `k` on
    /// `((k-1)s + eta, ks + eta]`.
    pub fn band(&self, z: f64) -> i64 {
        let u = z.abs();
        if u <= self.eta {
            0
        } else {
            ((u - self.eta) / self.s).ceil() as i64
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        self.level * (-(self.band(z) as f64) * self.epsilon).exp()
    }

    /// Two-sided mass of band `k`.
    pub fn band_mass(&self, k: i64) -> f64 {
        if k == 0 {
            2.0 * self.eta * self.level
        } else {
            2.0 * self.s * self.level * (-(k as f64) * self.epsilon).exp()
        }
    }

    /// One-sided tail mass `P(Z > k s + eta)`.
    pub fn upper_tail_mass(&self, k: i64) -> f64 {
        let e = (-self.epsilon).exp();
        self.s * self.level * (-(k as f64 + 1.0) * self.epsilon).exp() / (1.0 - e)
    }

    /// Exact expected cost for quadratic / absolute costs; band-wise
    /// quadrature otherwise.
    pub fn expected_cost(&self, cost: &CostFunction) -> Result<f64> {
        let mut total: f64 = 0.0;
        let mut k = 0i64;
        loop {
            let (a, b) = if k == 0 {
                (0.0, self.eta)
            } else {
                (
                    (k as f64 - 1.0) * self.s + self.eta,
                    k as f64 * self.s + self.eta,
                )
            };
            let level = self.level * (-(k as f64) * self.epsilon).exp();
            let contribution = match cost {
                CostFunction::Quadratic => 2.0 * level * (b.powi(3) - a.powi(3)) / 3.0,
                CostFunction::Absolute => level * (b * b - a * a),
                CostFunction::Custom(f) => {
                    2.0 * level * crate::quadrature::adaptive_simpson(|z| f(z), a, b, 1e-12)?
                }
            };
            total += contribution;
            k += 1;
            if k > 4 && contribution.abs() < 1e-18 * total.abs().max(1e-30) {
                break;
            }
            if k > 10_000_000 {
                return Err(DpaError::NonIntegrable(
                    "staircase band sum did not converge".into(),
                ));
            }
        }
        Ok(total)
    }

    /// Inverse-CDF sampling: one uniform selects band, side and offset.
    pub fn sample(&self, u: f64) -> f64 {
        let central = self.band_mass(0);
        if u < central {
            return (u / central) * 2.0 * self.eta - self.eta;
        }
        let t = u - central;
        let a = 2.0 * self.s * self.level; // band-k two-sided mass is a e^{-k eps}
        let e = (-self.epsilon).exp();
        let geo_total = a * e / (1.0 - e);
        let t = t.min(geo_total * (1.0 - 1e-15));
        // Smallest k >= 1 with a e^{-eps} (1 - e^{-k eps}) / (1 - e^{-eps}) >= t.
        let ratio = (t * (1.0 - e) / (a * e)).min(1.0 - 1e-15);
        let k = ((-(-ratio).ln_1p() / self.epsilon).ceil() as i64).max(1);
        let below = a * e * (1.0 - (-((k - 1) as f64) * self.epsilon).exp()) / (1.0 - e);
        let mass_k = a * (-(k as f64) * self.epsilon).exp();
        let v = ((t - below) / mass_k).clamp(0.0, 1.0 - 1e-15);
        let (sign, frac) = if v < 0.5 {
            (-1.0, v * 2.0)
        } else {
            (1.0, (v - 0.5) * 2.0)
        };
        sign * ((k as f64 - 1.0) * self.s + self.eta + frac * self.s)
    }
}

// ---------------------------------------------------------------------------
// Dominating pairs
// ---------------------------------------------------------------------------

/// A dominating pair of one-dimensional distributions: numerator `P` and
/// denominator `Q` of the privacy loss `log dP/dQ`.
#[derive(Clone, Copy, Debug)]
pub enum DominatingPair {
    /// `(noise, noise + sensitivity)` for an additive-noise family.
    Shifted { spec: MechanismSpec },
    /// Two-point conditionals of randomized response: probabilities of the
    /// outcomes `{0, 1}`.
    TwoPoint {
        numerator: [f64; 2],
        denominator: [f64; 2],
    },
}

impl DominatingPair {
    pub fn numerator_density(&self, y: f64) -> f64 {
        match self {
            DominatingPair::Shifted { spec } => noise_density(spec, y),
            DominatingPair::TwoPoint { numerator, .. } => two_point_pmf(numerator, y),
        }
    }

    pub fn denominator_density(&self, y: f64) -> f64 {
        match self {
            DominatingPair::Shifted { spec } => noise_density(spec, y - spec.sensitivity),
            DominatingPair::TwoPoint { denominator, .. } => two_point_pmf(denominator, y),
        }
    }

    pub fn sample_numerator(&self, rng: &mut impl Rng) -> f64 {
        match self {
            DominatingPair::Shifted { spec } => sample_with(spec, 0.0, rng),
            DominatingPair::TwoPoint { numerator, .. } => {
                if rng.random::<f64>() < numerator[1] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample_denominator(&self, rng: &mut impl Rng) -> f64 {
        match self {
            DominatingPair::Shifted { spec } => sample_with(spec, spec.sensitivity, rng),
            DominatingPair::TwoPoint { denominator, .. } => {
                if rng.random::<f64>() < denominator[1] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn two_point_pmf(pmf: &[f64; 2], y: f64) -> f64 {
    if y < 0.5 {
        pmf[0]
    } else {
        pmf[1]
    }
}

/// The dominating pair of a mechanism.
pub fn dominating_pair(spec: &MechanismSpec) -> DominatingPair {
    match spec.family {
        MechanismFamily::RandomizedResponse { epsilon } => {
            let keep = epsilon.exp() / (1.0 + epsilon.exp());
            DominatingPair::TwoPoint {
                // Numerator: channel output for input bit 0.
                numerator: [keep, 1.0 - keep],
                denominator: [1.0 - keep, keep],
            }
        }
        _ => DominatingPair::Shifted { spec: *spec },
    }
}

/// Noise density of the family, centered at zero.
pub fn noise_density(spec: &MechanismSpec, z: f64) -> f64 {
    match spec.family {
        MechanismFamily::Gaussian { sigma } => {
            Normal::new(0.0, sigma).expect("validated sigma").pdf(z)
        }
        MechanismFamily::Laplace { lambda } => 0.5 * lambda * (-lambda * z.abs()).exp(),
        MechanismFamily::Staircase { epsilon, eta } => {
            Staircase::new(epsilon, eta, spec.sensitivity).density(z)
        }
        MechanismFamily::RandomizedResponse { .. } => 0.0,
    }
}

/// Log density (or log pmf) of the mechanism output given the true query
/// value; exact likelihoods for the white-box attack.
pub fn log_density(spec: &MechanismSpec, query_value: f64, y: f64) -> f64 {
    match spec.family {
        MechanismFamily::Gaussian { sigma } => {
            let d = (y - query_value) / sigma;
            -0.5 * d * d - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
        }
        MechanismFamily::Laplace { lambda } => {
            (0.5 * lambda).ln() - lambda * (y - query_value).abs()
        }
        MechanismFamily::Staircase { epsilon, eta } => {
            let st = Staircase::new(epsilon, eta, spec.sensitivity);
            st.level.ln() - (st.band(y - query_value) as f64) * epsilon
        }
        MechanismFamily::RandomizedResponse { epsilon } => {
            let keep = epsilon.exp() / (1.0 + epsilon.exp());
            let input = query_value != 0.0;
            let output = y >= 0.5;
            if input == output {
                keep.ln()
            } else {
                (1.0 - keep).ln()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One mechanism output for the given query value, deterministic in the seed.
pub fn sample(spec: &MechanismSpec, true_query_value: f64, rng_seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    sample_with(spec, true_query_value, &mut rng)
}

/// Draws one output using the caller's RNG stream (all families go through
/// inverse-CDF so the draw count per sample is exactly one).
pub fn sample_with(spec: &MechanismSpec, true_query_value: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    match spec.family {
        MechanismFamily::Gaussian { sigma } => {
            let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
            true_query_value + sigma * std_normal.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16))
        }
        MechanismFamily::Laplace { lambda } => {
            let z = if u < 0.5 {
                (2.0 * u).max(1e-300).ln() / lambda
            } else {
                -((2.0 * (1.0 - u)).max(1e-300).ln()) / lambda
            };
            true_query_value + z
        }
        MechanismFamily::Staircase { epsilon, eta } => {
            true_query_value + Staircase::new(epsilon, eta, spec.sensitivity).sample(u)
        }
        MechanismFamily::RandomizedResponse { epsilon } => {
            let keep = epsilon.exp() / (1.0 + epsilon.exp());
            let input = true_query_value != 0.0;
            let output = if u < keep { input } else { !input };
            if output {
                1.0
            } else {
                0.0
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Privacy loss distributions
// ---------------------------------------------------------------------------

fn normal_interval_mass(z1: f64, z2: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    if z1 + z2 > 0.0 {
        (n.sf(z1) - n.sf(z2)).max(0.0)
    } else {
        (n.cdf(z2) - n.cdf(z1)).max(0.0)
    }
}

/// Loss distribution of the mechanism's dominating pair.
pub fn mechanism_pld(
    spec: &MechanismSpec,
    policy: &DiscretizationPolicy,
) -> Result<PrivacyLossDistribution> {
    policy.validate()?;
    let s = spec.sensitivity;
    match spec.family {
        MechanismFamily::Gaussian { sigma } => {
            // L ~ N(s^2 / (2 sigma^2), s^2 / sigma^2) under the numerator.
            let mean = s * s / (2.0 * sigma * sigma);
            let sd = s / sigma;
            gaussian_loss_pld(mean, sd, policy)
        }
        MechanismFamily::Laplace { lambda } => {
            let h = policy.grid_spacing;
            let pessimistic = policy.rounding.is_pessimistic();
            let top = lambda * s;
            // Continuous part (1/4) e^{(l - top)/2} on (-top, top) plus atoms
            // of mass 1/2 at +top and e^{-top}/2 at -top.
            let cell_mass = |a: f64, b: f64| -> f64 {
                let a = a.max(-top);
                let b = b.min(top);
                if b <= a {
                    0.0
                } else {
                    0.5 * (((b - top) / 2.0).exp() - ((a - top) / 2.0).exp())
                }
            };
            let k_lo = (-top / h).floor() as i64 - 1;
            let k_hi = (top / h).ceil() as i64 + 1;
            let offset = if pessimistic { 1 } else { 0 };
            let mut cells: Vec<(i64, f64)> = Vec::new();
            for k in k_lo..=k_hi {
                let m = cell_mass(k as f64 * h, (k + 1) as f64 * h);
                if m > 0.0 {
                    cells.push((k + offset, m));
                }
            }
            let rounding = policy.rounding;
            cells.push((loss_to_index(top, h, rounding), 0.5));
            cells.push((loss_to_index(-top, h, rounding), 0.5 * (-top).exp()));
            assemble_cells(h, cells, 0.0, pessimistic)
        }
        MechanismFamily::Staircase { epsilon, eta } => {
            let st = Staircase::new(epsilon, eta, s);
            let atoms = staircase_loss_atoms(&st);
            PrivacyLossDistribution::from_atoms(&atoms, 0.0, policy)
        }
        MechanismFamily::RandomizedResponse { epsilon } => {
            let keep = epsilon.exp() / (1.0 + epsilon.exp());
            crate::pld::pld_from_discrete_pair(&[keep, 1.0 - keep], &[1.0 - keep, keep], policy)
        }
    }
}

/// Discretizes a normal loss `N(mean, sd^2)` with exact CDF cell masses.
pub(crate) fn gaussian_loss_pld(
    mean: f64,
    sd: f64,
    policy: &DiscretizationPolicy,
) -> Result<PrivacyLossDistribution> {
    let h = policy.grid_spacing;
    let pessimistic = policy.rounding.is_pessimistic();
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let z_tail = -n.inverse_cdf(policy.tail_mass_bound / 2.0);
    let lo = mean - sd * z_tail;
    let hi = mean + sd * z_tail;
    let k_lo = (lo / h).floor() as i64;
    let k_hi = (hi / h).ceil() as i64;
    usize::try_from(k_hi - k_lo + 1)
        .map_err(|_| DpaError::InvalidPolicy("grid range overflow".into()))?;
    let offset = if pessimistic { 1 } else { 0 };
    let mut cells: Vec<(i64, f64)> = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    for k in k_lo..=k_hi {
        let z1 = (k as f64 * h - mean) / sd;
        let z2 = ((k + 1) as f64 * h - mean) / sd;
        let m = normal_interval_mass(z1, z2);
        if m > 0.0 {
            cells.push((k + offset, m));
        }
    }
    let top_boundary = (k_hi + 1) as f64 * h;
    let bottom_boundary = k_lo as f64 * h;
    let right_tail = n.sf((top_boundary - mean) / sd);
    let left_tail = n.cdf((bottom_boundary - mean) / sd);
    let mut infinity_mass = 0.0;
    // Left tail collapses into the lowest cell under both roundings; the
    // right tail goes to infinity when pessimistic, into the top cell when
    // optimistic.
    if pessimistic {
        infinity_mass = right_tail;
    } else if let Some(last) = cells.last_mut() {
        last.1 += right_tail;
    }
    if let Some(first) = cells.first_mut() {
        first.1 += left_tail;
    }
    assemble_cells(h, cells, infinity_mass, pessimistic)
}

fn assemble_cells(
    h: f64,
    cells: Vec<(i64, f64)>,
    infinity_mass: f64,
    pessimistic: bool,
) -> Result<PrivacyLossDistribution> {
    let min = cells.iter().map(|&(i, _)| i).min().unwrap();
    let max = cells.iter().map(|&(i, _)| i).max().unwrap();
    let mut masses = vec![0.0f64; (max - min + 1) as usize];
    for (i, m) in cells {
        masses[(i - min) as usize] += m;
    }
    // Absorb sub-tolerance float drift at the harmless end.
    let finite = crate::quadrature::neumaier_sum(masses.iter().copied());
    let drift = 1.0 - infinity_mass - finite;
    if drift.abs() > 1e-9 {
        return Err(DpaError::NonIntegrable(format!(
            "cell masses drifted by {drift:e}"
        )));
    }
    if pessimistic {
        let last = masses.len() - 1;
        masses[last] = (masses[last] + drift).max(0.0);
    } else {
        masses[0] = (masses[0] + drift).max(0.0);
    }
    PrivacyLossDistribution::new(h, min, masses, infinity_mass, pessimistic)
}

/// Exact loss atoms of the staircase mechanism.
///
/// The loss `eps * (band(z - s) - band(z))` is piecewise constant with values
/// in `{-eps, 0, +eps}`; masses come from band arithmetic over the
/// breakpoints of both band functions plus analytic geometric tails.
fn staircase_loss_atoms(st: &Staircase) -> Vec<(f64, f64)> {
    let s = st.s;
    // Enough bands that the truncated-tail correction is analytic, not lost.
    let k_max = ((50.0 / st.epsilon).ceil() as i64).clamp(4, 400_000);
    let edge = |k: i64| k as f64 * s + st.eta;
    let mut points = Vec::with_capacity(4 * (k_max as usize + 1));
    for k in 0..=k_max {
        points.push(edge(k));
        points.push(-edge(k));
        points.push(s + edge(k));
        points.push(s - edge(k));
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut mass_by_value: BTreeMap<i64, f64> = BTreeMap::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-15 {
            continue;
        }
        let zm = 0.5 * (a + b);
        let value = st.band(zm - s) - st.band(zm);
        let mass = st.density(zm) * (b - a);
        if mass > 0.0 {
            *mass_by_value.entry(value).or_insert(0.0) += mass;
        }
    }
    // Beyond the outermost breakpoints the band difference is constant:
    // -1 deep on the right (beyond (k_max+1)s + eta), +1 deep on the left
    // (below -(k_max s + eta)).
    *mass_by_value.entry(-1).or_insert(0.0) += st.upper_tail_mass(k_max + 1);
    *mass_by_value.entry(1).or_insert(0.0) += st.upper_tail_mass(k_max);
    mass_by_value
        .into_iter()
        .map(|(v, m)| (v as f64 * st.epsilon, m))
        .collect()
}

/// Expected cost `E[c(Z)]` of the mechanism's noise.
///
/// Staircase with quadratic/absolute cost is evaluated band-exactly; other
/// combinations use adaptive quadrature to absolute tolerance 1e-8.
pub fn expected_cost(spec: &MechanismSpec, cost: &CostFunction) -> Result<f64> {
    match spec.family {
        MechanismFamily::Staircase { epsilon, eta } => {
            Staircase::new(epsilon, eta, spec.sensitivity).expected_cost(cost)
        }
        MechanismFamily::RandomizedResponse { .. } => Err(DpaError::InvalidSpec(
            "randomized response has no additive noise cost".into(),
        )),
        MechanismFamily::Gaussian { sigma } => {
            integrate_real_line(|z| noise_density(spec, z) * cost.eval(z), sigma, 1e-8)
        }
        MechanismFamily::Laplace { lambda } => {
            integrate_real_line(|z| noise_density(spec, z) * cost.eval(z), 1.0 / lambda, 1e-8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::hockey_stick;

    #[test]
    fn invalid_parameters_are_rejected_at_construction() {
        assert!(MechanismSpec::gaussian(0.0, 1.0).is_err());
        assert!(MechanismSpec::gaussian(1.0, 0.0).is_err());
        assert!(MechanismSpec::laplace(-1.0, 1.0).is_err());
        assert!(MechanismSpec::staircase(1.0, 0.0, 1.0).is_err());
        assert!(MechanismSpec::staircase(1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn gaussian_dominating_pair_is_the_shifted_pair() {
        let spec = MechanismSpec::gaussian(1.0, 1.0).unwrap();
        let pair = dominating_pair(&spec);
        let n01 = Normal::new(0.0, 1.0).unwrap();
        for y in [-1.0, 0.0, 0.3, 2.0] {
            assert!((pair.numerator_density(y) - n01.pdf(y)).abs() < 1e-14);
            assert!((pair.denominator_density(y) - n01.pdf(y - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn laplace_pair_density_matches_figure_form() {
        let spec = MechanismSpec::laplace(1.0, 1.0).unwrap();
        let pair = dominating_pair(&spec);
        for y in [-0.5, 0.0, 0.7, 1.3] {
            assert!((pair.numerator_density(y) - 0.5 * (-y.abs()).exp()).abs() < 1e-14);
            assert!((pair.denominator_density(y) - 0.5 * (-(y - 1.0).abs()).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn pair_densities_integrate_to_one() {
        for spec in [
            MechanismSpec::gaussian(1.3, 1.0).unwrap(),
            MechanismSpec::laplace(0.7, 1.0).unwrap(),
            MechanismSpec::staircase(1.0, 0.5, 1.0).unwrap(),
        ] {
            let pair = dominating_pair(&spec);
            let num = integrate_real_line(|y| pair.numerator_density(y), 3.0, 1e-10).unwrap();
            let den = integrate_real_line(|y| pair.denominator_density(y), 3.0, 1e-10).unwrap();
            assert!((num - 1.0).abs() < 1e-8, "{spec:?} numerator {num}");
            assert!((den - 1.0).abs() < 1e-8, "{spec:?} denominator {den}");
        }
    }

    #[test]
    fn randomized_response_pair_is_two_point() {
        let spec = MechanismSpec::randomized_response(1.0, 1.0).unwrap();
        let pair = dominating_pair(&spec);
        let e = std::f64::consts::E;
        match pair {
            DominatingPair::TwoPoint {
                numerator,
                denominator,
            } => {
                assert!((numerator[0] - e / (1.0 + e)).abs() < 1e-15);
                assert!((denominator[1] - e / (1.0 + e)).abs() < 1e-15);
            }
            _ => panic!("expected two-point pair"),
        }
    }

    #[test]
    fn laplace_pld_is_pure_dp_at_lambda_s() {
        let spec = MechanismSpec::laplace(2.0, 1.0).unwrap();
        let pld = mechanism_pld(&spec, &DiscretizationPolicy::default()).unwrap();
        pld.validate().unwrap();
        assert_eq!(pld.infinity_mass, 0.0);
        assert!(pld.max_loss() <= 2.0 + 1e-12);
        assert_eq!(hockey_stick(&pld, 2.0), 0.0);
        assert!(hockey_stick(&pld, 1.99) > 0.0);
    }

    #[test]
    fn staircase_pld_is_pure_dp_at_its_epsilon() {
        let spec = MechanismSpec::staircase(1.0, 0.5, 1.0).unwrap();
        let pld = mechanism_pld(&spec, &DiscretizationPolicy::default()).unwrap();
        pld.validate().unwrap();
        assert!((pld.max_loss() - 1.0).abs() < 1e-9);
        assert_eq!(hockey_stick(&pld, 1.0), 0.0);
        assert!(hockey_stick(&pld, 0.99) > 0.0);
    }

    #[test]
    fn staircase_band_masses_sum_to_one() {
        for (eps, eta, s) in [
            (0.5, 0.3, 1.0),
            (1.0, 0.5, 1.0),
            (2.0, 0.9, 2.0),
            (0.25, 0.05, 0.5),
        ] {
            let st = Staircase::new(eps, eta, s);
            let mut total = 0.0;
            for k in 0..2000 {
                total += st.band_mass(k);
            }
            total += st.upper_tail_mass(1999) * 2.0;
            assert!((total - 1.0).abs() < 1e-12, "eps {eps} eta {eta}: {total}");
        }
    }

    #[test]
    fn gaussian_pld_has_positive_delta_for_every_finite_epsilon() {
        let spec = MechanismSpec::gaussian(1.0, 1.0).unwrap();
        let pld = mechanism_pld(&spec, &DiscretizationPolicy::default()).unwrap();
        for eps in [0.0, 1.0, 3.0, 6.0, 20.0] {
            assert!(hockey_stick(&pld, eps) > 0.0, "eps {eps}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_translation_covariant() {
        for spec in [
            MechanismSpec::gaussian(1.0, 1.0).unwrap(),
            MechanismSpec::laplace(1.0, 1.0).unwrap(),
            MechanismSpec::staircase(1.0, 0.5, 1.0).unwrap(),
        ] {
            let a = sample(&spec, 0.0, 42);
            let b = sample(&spec, 0.0, 42);
            assert_eq!(a, b);
            let shifted = sample(&spec, 2.5, 42);
            assert_eq!(shifted, 2.5 + a);
        }
    }

    #[test]
    fn laplace_sample_mean_is_near_zero() {
        let spec = MechanismSpec::laplace(1.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_with(&spec, 0.0, &mut rng);
        }
        let mean = acc / n as f64;
        // 99% CI half-width for std sqrt(2)/sqrt(n) is about 0.0036.
        assert!(mean.abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn staircase_central_band_frequency_matches_band_mass() {
        let spec = MechanismSpec::staircase(1.0, 0.5, 1.0).unwrap();
        let st = Staircase::new(1.0, 0.5, 1.0);
        let expected = st.band_mass(0);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 200_000;
        let mut hits = 0usize;
        for _ in 0..n {
            if sample_with(&spec, 0.0, &mut rng).abs() <= 0.5 {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let ci = 3.0 * (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((freq - expected).abs() < ci, "{freq} vs {expected} +- {ci}");
    }

    #[test]
    fn expected_cost_closed_forms() {
        let gauss = MechanismSpec::gaussian(1.0, 1.0).unwrap();
        let quad = CostFunction::Quadratic;
        assert!((expected_cost(&gauss, &quad).unwrap() - 1.0).abs() < 1e-7);
        let lap = MechanismSpec::laplace(1.0, 1.0).unwrap();
        assert!((expected_cost(&lap, &quad).unwrap() - 2.0).abs() < 1e-7);
        let lap2 = MechanismSpec::laplace(2.0, 1.0).unwrap();
        assert!((expected_cost(&lap2, &quad).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn mechanism_spec_json_round_trip() {
        let spec = MechanismSpec::staircase(1.0, 0.5, 2.0).unwrap();
        let json = spec.to_json();
        let back = MechanismSpec::from_json(&json).unwrap();
        assert_eq!(spec, back);
    }
}
