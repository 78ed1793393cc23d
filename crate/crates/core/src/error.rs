use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sampled function: {0}")]
    InvalidFunction(String),
    #[error("all values are zero; complexity is undefined")]
    ZeroFunction,
    #[error("function must be normalized before this operation")]
    NotNormalized,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid error norm: {0}")]
    InvalidNorm(String),
    #[error("stride {stride} leaves fewer than 2 nodes on an axis of {points} points")]
    StrideTooLarge { stride: usize, points: usize },
    #[error("invalid subgrid selection: {0}")]
    InvalidSelection(String),

    #[error("invalid modulus of continuity: {0}")]
    InvalidModulus(String),
    #[error("modulus queried at h = {h}, beyond the last tabulated knot {last}")]
    OutOfRange { h: f64, last: f64 },
    #[error("error level {eps} is not attained by the modulus (supremum {sup})")]
    NotAttained { eps: f64, sup: f64 },
    #[error("error level {eps} is reached by a single cell covering the cube (inverse {inverse} > {half_diagonal})")]
    ErrorTooLarge {
        eps: f64,
        inverse: f64,
        half_diagonal: f64,
    },
    #[error("modulus is not of Hölder form")]
    NotHolder,
    #[error("invalid class specification: {0}")]
    InvalidClass(String),

    #[error("too few retained points: {kept} kept, {needed} needed")]
    TooFewPoints { kept: usize, needed: usize },
    #[error("method {method} does not support dimension {dim}")]
    UnsupportedDimension { method: String, dim: usize },
    #[error("retained nodes do not form a tensor-product subgrid")]
    NonTensorSubgrid,
    #[error("every method in the approximation family failed")]
    AllMethodsFailed,
    #[error("invalid approximation method: {0}")]
    InvalidMethod(String),

    #[error("grid too coarse for the discrete complexity: floor(h* N) = 0")]
    DiscreteUndefined,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error("too few retained points at fraction {fraction}: floor(S n) = {kept} < 2")]
    TooFewKept { fraction: f64, kept: usize },
    #[error("only {rows} curve rows fall inside the fit interval; at least 3 are required")]
    InsufficientRows { rows: usize },
    #[error("difference order {order} is too high for {points} points")]
    OrderTooHigh { order: usize, points: usize },

    #[error("invalid generator specification: {0}")]
    InvalidSpec(String),

    #[error("series of length {len} is shorter than the window length {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid window configuration: {0}")]
    InvalidWindow(String),
    #[error("only {usable} non-degenerate windows; at least 4 are required")]
    TooFewWindows { usable: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
