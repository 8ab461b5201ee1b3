use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("CFL condition violated: {0}")]
    Cfl(String),
    #[error("mapping: {0}")]
    Mapping(String),
    #[error("flux construction failed verification: {0}")]
    FluxVerification(String),
    #[error("wave reached the boundary of the computational interval at t = {0}")]
    BoundaryReached(f64),
    #[error("observation time {0} is not in the schedule")]
    MissingObservation(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
