use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("site {0} is not occupied")]
    NotOccupied(String),
    #[error("{to} is not a lattice neighbour of {from}")]
    NotNeighbor { from: String, to: String },
    #[error("coordinate out of the representable range for d = {d}")]
    OutOfRange { d: usize },
    #[error("series diverges for d = {0} (transient walks need d >= 3)")]
    DivergentSeries(usize),
    #[error("memory budget exceeded: need about {required} bytes, budget is {budget}")]
    Budget { required: u64, budget: u64 },
    #[error("truncation too short: n_max = {have}, need at least {need}")]
    Truncation { have: usize, need: usize },
    #[error("quadrature did not reach the requested accuracy (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
