use thiserror::Error;

/// Errors raised by the recovery toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape does not fit in [{margin}, {}]^2", 1.0 - margin)]
    ShapeOutsideDomain { margin: f64 },

    #[error("invalid exponent q = {0} (must be >= 1)")]
    InvalidExponent(f64),

    #[error("grid too small: L = {0} (need L >= 3)")]
    GridTooSmall(usize),

    #[error("unstable configuration: smallest singular value {sigma_min:e} below threshold")]
    UnstableConfiguration { sigma_min: f64 },

    #[error("rank deficient matrix: {0}")]
    RankDeficient(&'static str),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("degenerate pair: half-planes coincide on the stencil")]
    DegeneratePair,

    #[error("instance too large for exhaustive enumeration ({0} subsets)")]
    InstanceTooLarge(u128),

    #[error("input is exactly {0}-sparse; the ratio is undefined")]
    ExactlySparse(usize),

    #[error("sparsity {0} unsupported by the exact decoder (n <= 2)")]
    UnsupportedSparsity(usize),

    #[error("measurement matrix has a trivial kernel")]
    TrivialKernel,

    #[error("no seed certified the expansion bound after {0} retries")]
    NoCertifiedSeed(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
