use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty block")]
    EmptyBlock,
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid block count: Q = {q} for n = {n}")]
    InvalidBlockCount { q: usize, n: usize },
    #[error("inconsistent partition: {0}")]
    InconsistentPartition(String),
    #[error("k out of range: k = {k} for n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("weights do not align with the point cloud: {weights} weights for {points} points")]
    WeightMismatch { weights: usize, points: usize },
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("t_max must be positive, got {0}")]
    NonPositiveTMax(f64),
    #[error("dimension cap: max_dim must be 1 or 2, got {0}")]
    DimensionCap(usize),
    #[error("filtration order violated at simplex {0}")]
    FiltrationOrderViolated(usize),
    #[error("grid sublevel is 2-D only (cloud has dimension {0})")]
    GridNot2d(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("pigeonhole violated: Q = {q} must exceed 2m = {two_m}")]
    PigeonholeViolated { q: usize, two_m: usize },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("delta too small for m_max: delta_max = {0}")]
    DeltaTooSmall(f64),
    #[error("m bounds produce no rungs")]
    EmptyLadder,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty evaluation set")]
    EmptyEvaluationSet,
    #[error("degenerate rescale: MoM distance vanishes at every pixel center")]
    DegenerateRescale,
    #[error("missing experiment parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid value for parameter `{name}`: {value}")]
    InvalidParameter { name: String, value: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
