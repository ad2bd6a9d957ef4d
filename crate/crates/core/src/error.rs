use thiserror::Error;

/// Errors raised by the meshing, assembly and solver pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hole radius {radius} does not fit strictly inside the unit cell")]
    HoleTooLarge { radius: f64 },

    #[error("mesh quality: {0}")]
    MeshQuality(String),

    #[error("mesh glue mismatch at node key {key:?}: distance {distance:e}")]
    MeshGlue { key: [usize; 3], distance: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error("load evaluation failed at {point:?}")]
    Load { point: [f64; 3] },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("pencil iteration collapsed: the right-hand form annihilates the iterate")]
    ZeroPencil,

    #[error("indefinite inner solve broke down: {0}")]
    IndefiniteBreakdown(String),

    #[error("converged eigenpair lambda = {lambda} is not on the requested branch ({reason})")]
    WrongBranch { lambda: f64, reason: String },

    #[error("constraint is infeasible for kappa = {kappa}")]
    ConstraintInfeasible { kappa: f64 },

    #[error("no sign change of the bracketing function on ({lo}, {hi})")]
    BracketFailure { lo: f64, hi: f64 },
}

impl Error {
    /// True for failures of an iterative method (as opposed to bad input).
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::ZeroPencil
                | Error::IndefiniteBreakdown(_)
                | Error::WrongBranch { .. }
                | Error::BracketFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
