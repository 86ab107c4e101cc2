use thiserror::Error;

/// Everything that can go wrong when building or querying a weighted Cantor measure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("not a point of the simplex: {0}")]
    NotASimplexPoint(String),

    #[error("a weight vector needs at least 2 branches, got {0}")]
    TooFewBranches(usize),

    #[error("depth overflow: {n_branches}^{depth} exceeds the cap of {cap} entries")]
    DepthOverflow {
        n_branches: usize,
        depth: u32,
        cap: u64,
    },

    #[error("digit {digit} at position {position} is not a base-{n_branches} digit")]
    BadDigit {
        digit: usize,
        position: usize,
        n_branches: usize,
    },

    #[error("point {0} lies outside [0, 1]")]
    OutOfDomain(String),

    #[error("CDF tables live on different meshes ({0})")]
    MeshMismatch(String),

    #[error("bad tolerance: {0}")]
    BadTolerance(String),

    #[error("moment index {0} is not odd")]
    NotOdd(usize),

    #[error("weight vector is not palindromic")]
    NotPalindromic,

    #[error("need {needed} moments, only {available} available")]
    InsufficientMoments { needed: usize, available: usize },

    #[error("polynomial of degree {0} has zero norm; the measure has finite support")]
    ZeroNorm(usize),

    #[error("weight vector is degenerate (some weight equals 1): {0}")]
    Degenerate(String),

    #[error("expected {expected} moments, got {got}")]
    WrongKind { expected: &'static str, got: &'static str },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
