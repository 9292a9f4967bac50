use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed chain '{label}': {msg}")]
    MalformedChain { label: String, msg: String },

    #[error("chain '{label}' has only {available} states, {needed} requested")]
    ChainTooShort {
        label: String,
        available: usize,
        needed: usize,
    },

    #[error("chain '{label}' has killing at state {index}; the operation needs an honest chain")]
    ChainHasKilling { label: String, index: usize },

    #[error("undecidable tail: {0}")]
    UndecidableTail(String),

    #[error("precision exhausted at n = {n}: estimated relative error {estimate:e} exceeds {limit:e}")]
    PrecisionExhausted { n: usize, estimate: f64, limit: f64 },

    #[error("edge estimates disagree: eigen {eigen}, bisection {bisection} (tolerance {tol:e})")]
    MethodsDisagree { eigen: f64, bisection: f64, tol: f64 },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("positive-side sum underflows at n = {n} (log value {log_value})")]
    DenominatorUnderflow { n: usize, log_value: f64 },

    #[error("zero denominator at n = {0}")]
    ZeroDenominator(usize),

    #[error("Q_{index}(eta) vanishes numerically; the edge estimate is unreliable")]
    DivisionSentinel { index: usize },

    #[error("not a random walk measure: index {index}: {reason}")]
    NotARandomWalkMeasure { index: usize, reason: String },

    #[error("Stieltjes procedure broke down at step {0}")]
    StieltjesBreakdown(usize),

    #[error("inconsistent input: {0}")]
    SpecInconsistent(String),

    #[error("Q_{index}(eta) = {value} is not positive; eta lies below the support edge")]
    NonpositiveQ { index: usize, value: f64 },

    #[error("identity check failed at n = {n}: relative mismatch {mismatch:e}")]
    IdentityMismatch { n: usize, mismatch: f64 },

    #[error("limit could not be decided: {0}")]
    UndecidedLimit(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("parse error in {context}: {msg}")]
    Parse { context: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedChain { .. } => "malformed_chain",
            Error::ChainTooShort { .. } => "chain_too_short",
            Error::ChainHasKilling { .. } => "chain_has_killing",
            Error::UndecidableTail(_) => "undecidable_tail",
            Error::PrecisionExhausted { .. } => "precision_exhausted",
            Error::MethodsDisagree { .. } => "methods_disagree",
            Error::EigenFailure(_) => "eigen_failure",
            Error::DenominatorUnderflow { .. } => "denominator_underflow",
            Error::ZeroDenominator(_) => "zero_denominator",
            Error::DivisionSentinel { .. } => "division_sentinel",
            Error::NotARandomWalkMeasure { .. } => "not_a_random_walk_measure",
            Error::StieltjesBreakdown(_) => "stieltjes_breakdown",
            Error::SpecInconsistent(_) => "spec_inconsistent",
            Error::NonpositiveQ { .. } => "nonpositive_q",
            Error::IdentityMismatch { .. } => "identity_mismatch",
            Error::UndecidedLimit(_) => "undecided_limit",
            Error::Expr(_) => "expression",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}
