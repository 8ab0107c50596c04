use thiserror::Error;

/// Errors raised by parameter validation and precondition checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape parameter must be positive and finite, got {shape}")]
    InvalidShape { shape: f64 },
    #[error("probability must lie in (0, 1), got {p}")]
    ProbabilityOutOfRange { p: f64 },
    #[error("order k must be at least 1")]
    ZeroOrder,
    #[error("levels must be strictly decreasing")]
    LevelsNotDecreasing,
    #[error("ranks must be strictly increasing positive integers")]
    RanksNotIncreasing,
    #[error("levels and ranks must have equal length, got {levels} levels and {ranks} ranks")]
    LevelRankMismatch { levels: usize, ranks: usize },
    #[error("expected {expected} intensities for {expected} caps, got {got}")]
    BlockLengthMismatch { expected: usize, got: usize },
    #[error("caps must be nondecreasing")]
    CapsDecreasing,
    #[error("Poisson intensity must be nonnegative, got {lambda}")]
    InvalidIntensity { lambda: f64 },
    #[error("quadrature grid must have at least 2 cells, got {got}")]
    GridTooSmall { got: usize },
    #[error("test function declares no finite bound")]
    UnboundedTestFunction,
    #[error("weight index {n} is below the scheme start index {start}")]
    IndexBelowStart { n: u64, start: u64 },
    #[error("{name} = {value} is outside the admissible range {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("scan range must satisfy start <= lo < hi, got ({lo}, {hi})")]
    InvalidRange { lo: u64, hi: u64 },
    #[error("order statistic {requested} undefined: only {available} observations tracked")]
    OrderStatisticUndefined { requested: usize, available: usize },
    #[error("thresholds must be nonincreasing")]
    ThresholdsNotNonincreasing,
    #[error("expected {expected} thresholds, got {got}")]
    ThresholdCountMismatch { expected: usize, got: usize },
    #[error("rank {rank} is out of range 1..={n}")]
    RankOutOfRange { rank: usize, n: u64 },
    #[error("segment split requires m >= k and n - m >= k, got m = {m}, n = {n}, k = {k}")]
    SegmentHypothesis { m: u64, n: u64, k: usize },
    #[error("at least {min} replications required, got {got}")]
    TooFewReplications { min: u64, got: u64 },
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("unknown name `{name}`: expected {expected}")]
    UnknownName { name: String, expected: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
