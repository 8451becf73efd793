use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("residual vector is empty")]
    EmptyResiduals,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("window of {n} points is too short to normalise with p = {p}")]
    DegenerateWindow { n: usize, p: usize },

    #[error("insufficient data: need at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("curve grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular regression: {0}")]
    Singular(&'static str),

    #[error("degenerate LPPLS basis at tc = {tc}, m = {m}, omega = {omega}")]
    DegenerateBasis { tc: f64, m: f64, omega: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series covers [{have_lo}, {have_hi}] but [{need_lo}, {need_hi}] is required")]
    SeriesTooShort {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("date {0} is not an observation in the series")]
    UnknownDate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
