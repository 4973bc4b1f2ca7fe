//! Error types shared by all modules.

use thiserror::Error;

/// Errors produced by construction, accounting and optimization routines.
#[derive(Debug, Error)]
pub enum DpaError {
    /// A discretization policy had a non-positive spacing or an out-of-range
    /// tail mass bound.
    #[error("invalid discretization policy: {0}")]
    InvalidPolicy(String),

    /// Numeric integration did not converge to the requested tolerance.
    #[error("numeric integration failed to converge: {0}")]
    NonIntegrable(String),

    /// Two discrete distributions were not defined on the same alphabet.
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// Moments were requested for a distribution with non-negligible mass at
    /// +infinity.
    #[error("moments undefined: infinity mass {0:e} is not negligible")]
    InfiniteMass(f64),

    /// No finite epsilon achieves the requested delta.
    #[error("delta {delta:e} is unachievable: infinity mass floor is {floor:e}")]
    Unachievable { delta: f64, floor: f64 },

    /// Two distributions to be convolved live on different grids.
    #[error("grid spacing mismatch: {0:e} vs {1:e}")]
    GridMismatch(f64, f64),

    /// A composition would exceed the configured cell budget.
    #[error("memory budget exceeded: {cells} cells > budget {budget}")]
    MemoryBudgetExceeded { cells: usize, budget: usize },

    /// The optimization problem admits no feasible point.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// The eigenvalue bisection could not bracket a nodeless solution.
    #[error("no ground state bracket: {0}")]
    NoGroundState(String),

    /// The ODE boundary was too small for the solution to decay.
    #[error("boundary too small: {0}")]
    BoundaryTooSmall(String),

    /// A mechanism specification had invalid parameters.
    #[error("invalid mechanism spec: {0}")]
    InvalidSpec(String),

    /// Malformed input data (JSON artifacts, probability vectors, flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, DpaError>;
