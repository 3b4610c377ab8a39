use thiserror::Error;

use crate::lti::Inertia;
use crate::simulation::SimTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical singularity: {0}")]
    NumericalSingularity(String),

    /// A pole sits on (or within tolerance of) the shifted imaginary axis `Re s = -λ`.
    #[error("pole with real part {pole_re} lies on the shifted axis Re s = {axis}")]
    ShiftedAxisPole { pole_re: f64, axis: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    /// No strictly feasible point was found. `best_residual` is the smallest
    /// max-eigenvalue reached over all constraints (feasible would be `<= -ε`).
    #[error("LMI infeasible (best max-eigenvalue residual {best_residual:.3e}, required <= {required:.3e}): {detail}")]
    Infeasible {
        best_residual: f64,
        required: f64,
        detail: String,
    },

    #[error("inertia mismatch: expected {expected}, got {got}")]
    InertiaMismatch { expected: Inertia, got: Inertia },

    #[error("uncontrollable pair (controllability matrix rank {rank} < {n})")]
    UncontrollablePair { rank: usize, n: usize },

    #[error("marginal equilibrium: max real eigenvalue {max_re:.3e} inside the dead zone")]
    MarginalEquilibrium { max_re: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        reason: String,
        partial: Box<SimTrace>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::PreconditionFailed(msg.into())
    }
}
