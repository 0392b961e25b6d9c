use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {theta} outside the model domain ({lo}, {hi})")]
    Domain { theta: f64, lo: f64, hi: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("finite-difference stencil leaves the domain: [{lo}, {hi}] not inside ({domain_lo}, {domain_hi})")]
    Step {
        lo: f64,
        hi: f64,
        domain_lo: f64,
        domain_hi: f64,
    },

    #[error("derivative of order {order} has weight {weight:e} outside the support of rho")]
    Support { order: usize, weight: f64 },

    #[error("bound is divergent at order {0}; no saturating estimator exists")]
    DivergentBound(usize),

    #[error("estimator support does not match model: {0}")]
    SupportMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Bessel normalization failed for J_{order}({x})")]
    Convergence { order: i64, x: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
