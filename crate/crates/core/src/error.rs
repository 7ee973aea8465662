use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse graph spec {spec:?}: {reason}")]
    GraphSpec { spec: String, reason: String },

    #[error("graph is not {expected}")]
    WrongGraph { expected: &'static str },

    #[error("observation time {time} lies outside [0, {horizon}]")]
    ObservationTime { time: f64, horizon: f64 },

    #[error("resource guard: {what} = {value} exceeds limit {limit}")]
    ResourceLimit {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("Green function diverges for d = {d} (recurrent walk)")]
    Recurrent { d: usize },

    #[error("hypothesis fails at d = {d}: 1 - (d+1) F_d(e_1) = {margin}")]
    HypothesisFails { d: usize, margin: f64 },

    #[error("lambda = {lambda} does not exceed the threshold {threshold}")]
    BelowThreshold { lambda: f64, threshold: f64 },

    #[error("point {0:?} lies outside the table radius")]
    OutsideTable(Vec<i64>),

    #[error("invalid bracket ({lo}, {hi}): survival {s_lo} and {s_hi} are on the same side of {threshold}")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        s_lo: f64,
        s_hi: f64,
        threshold: f64,
    },

    #[error("schedule format: {0}")]
    ScheduleFormat(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
