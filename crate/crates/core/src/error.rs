use thiserror::Error;

use crate::instance::Vertex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// No candidate radius admits a solution.
    #[error("instance is infeasible")]
    Infeasible,
    #[error("instance too large for exhaustive search: {facilities} facilities (max {max_facilities}), {clients} clients (max {max_clients})")]
    TooLarge {
        facilities: usize,
        clients: usize,
        max_facilities: usize,
        max_clients: usize,
    },
    #[error("component has {clients} clients, fewer than the lower bound {lower}")]
    TooFewClients { clients: usize, lower: u32 },
    #[error("coverage shortfall: served {served} of required {required}")]
    CoverageShortfall { served: usize, required: usize },
    #[error("no facility has at least {lower} clients within reach")]
    NoFacilitySurvives { lower: u32 },
    #[error("relocation matching cannot saturate the open set or reach the coverage target (matched {matched} of {open}, weight {weight}, target {target})")]
    MatchingDeficient {
        matched: usize,
        open: usize,
        weight: u64,
        target: usize,
    },
    #[error("exchange route broken: no unscanned client left at core facility {facility}")]
    RouteMissing { facility: Vertex },
    #[error("variant {variant} is incompatible with this instance: {reason}")]
    IncompatibleVariant { variant: String, reason: String },
    #[error("instance is not valid: {0}")]
    InvalidInstance(String),
    #[error("opening vectors have different totals")]
    SumMismatch,
    #[error("capacity lower bounds are not uniform")]
    NotUniform,
    #[error("extraction infeasible: {0}")]
    ExtractionInfeasible(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
