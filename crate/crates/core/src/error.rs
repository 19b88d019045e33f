use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("missing column `{column}` in {path}")]
    MissingColumn { column: String, path: PathBuf },

    #[error("row {row}: cannot parse `{value}` as {wanted} for column `{column}`")]
    BadField {
        row: usize,
        column: String,
        value: String,
        wanted: &'static str,
    },

    #[error("row {row}: regulation code {code} outside 1..=5 for column `{column}`")]
    BadRegulationCode { row: usize, column: String, code: i64 },

    #[error("duplicate (county_id, year) key ({county_id}, {year})")]
    DuplicateKey { county_id: String, year: i32 },

    #[error("panel failed validation with {count} violation(s):\n{report}")]
    InvalidPanel { count: usize, report: String },

    #[error("panel is empty")]
    EmptyPanel,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("design spec: {0}")]
    InvalidSpec(String),

    #[error("design matrix is rank deficient; collinear column(s): {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("{n_obs} observation(s) but {n_params} parameter(s)")]
    TooFewObservations { n_obs: usize, n_params: usize },

    #[error("within transformation did not converge after {0} sweeps (degenerate panel?)")]
    WithinNonConvergence(usize),

    #[error("empty subsample: no row has next-best `{0}`")]
    EmptySubsample(String),

    #[error("rankings do not cover the panel: missing key ({county_id}, {year})")]
    RankingNotCovering { county_id: String, year: i32 },

    #[error("{unmatched} of {total} panel keys unmatched (tolerance {tolerance})")]
    UnmatchedKeys {
        unmatched: usize,
        total: usize,
        tolerance: f64,
    },

    #[error("non-positive input to log income: yield={corn_yield}, price={price}")]
    NonPositiveIncome { corn_yield: f64, price: f64 },

    #[error("scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario violates the hypothesis of {proposition}: {condition}")]
    HypothesisViolated {
        proposition: String,
        condition: String,
    },

    #[error("missing rate `{0}` in rate card")]
    MissingRate(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
