use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside [0,1]^{dim}")]
    OutsideDomain { point: Vec<f64>, dim: usize },

    #[error("unsupported shape d={d}, m={m}: {reason}")]
    UnsupportedShape { d: usize, m: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("psi(q) = {psi} rejected: {reason}")]
    PsiOutOfRange { psi: f64, reason: &'static str },

    #[error("psi({q}) has no exact rational value; use floating-point arithmetic")]
    InexactPsi { q: u64 },

    #[error("derivative of order {order} not available for coordinate {coordinate}")]
    MissingDerivative { coordinate: usize, order: u32 },

    #[error("work budget exceeded: {terms} terms per block > budget {budget}; choose a smaller q")]
    WorkBudgetExceeded { terms: u128, budget: u128 },

    #[error("block decomposition unavailable: delta*q*psi(q) = {product} <= 1 (trivial regime)")]
    TrivialRegime { product: f64 },

    #[error("C1 = {c1} is below the second-derivative requirement {required}; the linearisation step is not valid")]
    ConstantTooSmall { c1: f64, required: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
