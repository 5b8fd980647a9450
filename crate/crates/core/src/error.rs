//! Error type shared by all core modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch in {context}: {detail}")]
    ShapeMismatch { context: &'static str, detail: String },

    #[error("row {row} lies outside the simplex beyond tolerance (coordinate sum {sum}, min entry {min}); project it first")]
    OutOfSimplex { row: usize, sum: f64, min: f64 },

    #[error("Dirichlet concentration must be strictly positive (entry {index} = {value})")]
    NonPositiveConcentration { index: usize, value: f64 },

    #[error("edge probability {value} at pair ({i}, {j}) outside [0, 1] beyond tolerance")]
    EdgeProbabilityOutOfRange { i: usize, j: usize, value: f64 },

    #[error("matrix is not a valid graph adjacency: {0}")]
    InvalidGraph(String),

    #[error("invalid group assignment: {0}")]
    InvalidGroups(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("found only {found} positive eigenvalues, need {wanted}")]
    TooFewPositiveEigenvalues { found: usize, wanted: usize },

    #[error("eigensolver did not reach tolerance {tol} within {max_dim} Krylov steps")]
    EigenNotConverged { tol: f64, max_dim: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("interior projection infeasible: delta = {delta} with p = {p} requires (p+1)*delta < 1")]
    InfeasibleDelta { delta: f64, p: usize },

    #[error("response row {row} has entries outside the open interval (0, 1); logs would be non-finite")]
    ResponseNotInterior { row: usize },

    #[error("need at least {min} observations, got {got}")]
    TooFewObservations { got: usize, min: usize },

    #[error("Fisher scoring diverged: {0}")]
    FitDiverged(String),

    #[error("linear system is singular even after ridge escalation")]
    SingularSystem,

    #[error("covariance matrix is not positive semidefinite (ridge-dominated fit)")]
    CovarianceNotPsd,
}
