use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid-parameters: {0}")]
    InvalidParameters(String),
    #[error("crt-moduli-not-coprime: {0} and {1}")]
    CrtModuliNotCoprime(u64, u64),
    #[error("invalid-bias: {0}")]
    InvalidBias(f64),
    #[error("sampler-timeout after {0} rejections")]
    SamplerTimeout(u64),
    #[error("arity-mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("slice-budget-exceeded: {queries} queries > budget {budget}")]
    SliceBudgetExceeded { queries: u128, budget: u128 },
    #[error("decode-failure")]
    DecodeFailure,
    #[error("amplify-exhausted: all {0} repetitions failed")]
    AmplifyExhausted(usize),
    #[error("width-mismatch: {0}")]
    WidthMismatch(String),
    #[error("edgesclusion-inconsistency: {0}")]
    EdgesclusionInconsistency(String),
    #[error("unsupported-regex-type: {0}")]
    UnsupportedRegexType(String),
    #[error("nfa-not-acyclic: state {0} lies on a cycle longer than one")]
    NfaNotAcyclic(usize),
    #[error("expansion-cap-exceeded: {got} > cap {cap}")]
    ExpansionCapExceeded { got: usize, cap: usize },
    #[error("monomial-cap-exceeded: {got} > cap {cap}")]
    MonomialCapExceeded { got: u128, cap: u128 },
    #[error("range-violation: {0}")]
    RangeViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
