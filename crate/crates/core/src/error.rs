use thiserror::Error;

/// Domain errors raised by the simulator operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("MCS index {0} out of range 0..=31")]
    McsIndexOutOfRange(i64),

    #[error("CQI {0} out of range 0..=15")]
    CqiOutOfRange(i64),

    #[error("MCS {table} index {index} is reserved and carries no code rate")]
    ReservedMcs { table: crate::McsTableId, index: u8 },

    #[error("no usable resource elements: {0}")]
    NoUsableResources(String),

    #[error("invalid TBS input: {0}")]
    InvalidTbsInput(String),

    #[error("CQI 0 (out of range) cannot be scheduled")]
    CqiOutOfRangeScheduled,

    #[error("feedback for inactive HARQ process {0}")]
    InactiveProcess(u8),

    #[error("time {t_s} s outside run of {duration_s} s")]
    TimeOutsideRun { t_s: f64, duration_s: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown table: {0}")]
    UnknownTable(String),

    #[error("line {line}, column `{column}`: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
