use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("slot index {index} out of range for k = {k}")]
    SlotOutOfRange { index: usize, k: usize },

    #[error("exterior differential of degree {0} is not supported (degrees 0 and 1 only)")]
    UnsupportedDegree(usize),

    #[error("node {node:?} is on the boundary of axis {axis}")]
    BoundaryNode { node: Vec<usize>, axis: usize },

    #[error("singular Hessian (condition number {condition:.3e})")]
    SingularHessian { condition: f64 },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("structure constants violate the Jacobi identity (max violation {violation:.3e})")]
    JacobiViolation { violation: f64 },

    #[error("structure equations fail: jacobi {jacobi:.3e}, anchor {anchor:.3e}")]
    StructureEquations { jacobi: f64, anchor: f64 },

    #[error("first prolongation needs the standard algebroid (no canonical lift)")]
    NoCanonicalLift,

    #[error("model is not evolutionary in t1: {0}")]
    NonEvolutionary(String),

    #[error("marching became unstable at level {level} (norm growth {growth:.3e})")]
    Unstable { level: usize, growth: f64 },

    #[error("operation requires k = {expected}, got k = {got}")]
    WrongK { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
