use std::path::PathBuf;

use thiserror::Error;

use crate::schemes::TraceRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("a point needs at least one coordinate")]
    EmptyPoint,

    #[error("coordinate {index} is not finite ({value})")]
    NonFiniteCoordinate { index: usize, value: f64 },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies in neither set (d(x,M) = {dist_m:e}, d(x,N) = {dist_n:e})")]
    OutsideDomain {
        point: Vec<f64>,
        dist_m: f64,
        dist_n: f64,
    },

    #[error("inner Ishikawa point escaped both sets at {point:?}; the map kind is probably misdeclared")]
    InnerPointEscaped { point: Vec<f64> },

    #[error("schedule value {value} at n = {n} lies outside [{lo}, {hi}]")]
    ScheduleOutOfRange { n: usize, value: f64, lo: f64, hi: f64 },

    #[error("scheme {scheme} requires a {required} map, but the map is declared {declared}")]
    IncompatibleScheme {
        scheme: String,
        required: &'static str,
        declared: &'static str,
    },

    #[error("starting point {point:?} is not in M (distance {dist:e})")]
    StartOutsideM { point: Vec<f64>, dist: f64 },

    #[error("declared map kind failed the sampled invariance check ({violations} violations)")]
    KindCheckFailed { violations: usize },

    #[error("iterate became non-finite at n = {n}")]
    NonFiniteIterate { n: usize, trace: Vec<TraceRecord> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}
