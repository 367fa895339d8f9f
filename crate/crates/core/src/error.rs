use thiserror::Error;

use crate::game::Coalition;
use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("coalition {0} has no value form in the model")]
    UnknownCoalition(Coalition),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coalition {0} has no member agent holding samples")]
    NoSamplesForCoalition(Coalition),

    #[error("the scenario core is empty")]
    EmptyCore,

    #[error("{what} limited to {limit}, got {actual}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        actual: usize,
    },

    #[error("no sign change of the risk polynomial on (0, 1] (K={k}, s={s}, beta={beta}, n={n}); max scanned log-ratio {max_log_ratio:.6e} over {points} points")]
    NoRoot {
        k: usize,
        s: usize,
        beta: f64,
        n: usize,
        points: usize,
        max_log_ratio: f64,
    },

    #[error("lp: {0}")]
    Lp(#[from] LpError),

    #[error("linear program reported {0}")]
    LpStatus(&'static str),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed sample file: {0}")]
    SampleFormat(String),
}
