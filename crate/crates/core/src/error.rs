//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    // data ingestion
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("unparseable date {value:?} (record {record})")]
    UnparseableDate { value: String, record: usize },
    #[error("unparseable number {value:?} (record {record})")]
    UnparseableNumber { value: String, record: usize },
    #[error("non-positive price {value} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: String,
        value: f64,
    },
    #[error("missing cell: {ticker} has no price for {date}")]
    MissingCell { ticker: String, date: String },
    #[error("duplicate date {0}")]
    DuplicateDate(String),
    #[error("duplicate cell for {ticker} on {date}")]
    DuplicateCell { ticker: String, date: String },
    #[error("unknown ticker {0}")]
    UnknownTicker(String),
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("too few dates: need at least {needed}, got {got}")]
    TooFewDates { needed: usize, got: usize },

    // estimation
    #[error("insufficient data: need {needed} positive radii, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate tail: the {k} largest radii and the next one are all equal")]
    DegenerateTail { k: usize },
    #[error("tail fraction {0} outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("nonconvex regime: tail index {0} is not above 1")]
    NonconvexRegime(f64),

    // portfolio arithmetic
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("degenerate portfolio: drifted weight mass {0} is not positive")]
    DegeneratePortfolio(f64),

    // analytics
    #[error("empty sample")]
    EmptySample,
    #[error("empty tail: no observation strictly below the {level} quantile")]
    EmptyTail { level: f64 },
    #[error("zero volatility: returns have no dispersion")]
    ZeroVolatility,
    #[error("zero expected shortfall: ratio undefined")]
    ZeroShortfall,
    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("no assets above the weight floor {floor}")]
    NoRelevantAssets { floor: f64 },

    // configuration and synthetic data
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("grid search supports at most {max} assets, got {got}")]
    DimensionTooLarge { max: usize, got: usize },
}
