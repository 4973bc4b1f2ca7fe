//! Differential-privacy accounting toolkit.
//!
//! The crate is organized around a single concrete object, the grid-discretized
//! [`PrivacyLossDistribution`]: mechanisms produce one, divergences and
//! accountants consume one, and the attack simulator checks the resulting
//! guarantees empirically.
//!
//! Modules:
//! - [`pld`]: the discretized privacy loss distribution and its rounding rules.
//! - [`divergence`]: hockey-stick / `(epsilon, delta)` queries, KL, Renyi and
//!   generic f-divergences.
//! - [`tradeoff`]: hypothesis-testing error tradeoff curves and domination
//!   checks.
//! - [`mechanism`]: Gaussian, Laplace, staircase and randomized-response
//!   mechanisms with their dominating pairs, samplers and costs.
//! - [`compose`]: basic, FFT, Renyi and CLT accountants for k-fold
//!   non-adaptive composition.
//! - [`optimize`]: staircase parameter fitting, the minimax-KL (Cactus) solver
//!   and the ground-state ODE (Schrodinger) solver for noise design.
//! - [`attack`]: Monte-Carlo likelihood-ratio attacks against claimed
//!   tradeoff curves.

pub mod attack;
pub mod compose;
pub mod divergence;
pub mod error;
pub mod mechanism;
pub mod optimize;
pub mod pld;
pub mod quadrature;
pub mod serialize;
pub mod tradeoff;

pub use attack::{AttackReport, ThresholdPoint, Violation};
pub use compose::{
    fft_compose_power, rdp_epsilon_at_delta,
    basic_compose, clt_compose, fft_compose, fft_compose_pair, rdp_compose, CltEstimate,
    CompositionRequest, CompositionTarget, FftConfig, DEFAULT_RDP_ALPHAS,
};
pub use divergence::{
    epsilon_at_delta, f_divergence, hockey_stick, kl_divergence, rdp_to_dp, renyi_divergence,
    BoundKind, PrivacyGuarantee,
};
pub use error::{DpaError, Result};
pub use mechanism::{DominatingPair, MechanismFamily, MechanismSpec};
pub use optimize::{
    fit_staircase, solve_cactus, solve_schrodinger, CactusSolution, CostFunction, CostSpec,
    NoiseDistribution,
};
pub use pld::{
    discretize_pld, pld_from_discrete_pair, pld_moments, DiscretizationPolicy, LossMeasure,
    Moments, PrivacyLossDistribution, Rounding,
};
pub use tradeoff::{dominates, dp_tradeoff, gaussian_tradeoff, tradeoff_from_pld, TradeoffCurve};
