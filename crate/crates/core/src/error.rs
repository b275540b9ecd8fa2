use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("integrand lower bound must be positive, got {0}")]
    NonpositiveRho(f64),
    #[error("integrand value {value} at t={t} leaves [{lower}, {upper}]")]
    BoundViolation { t: f64, value: f64, lower: f64, upper: f64 },
    #[error("density requested at t = 0")]
    DegenerateTime,
    #[error("empty sample")]
    EmptySample,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("partition meshes do not vanish (last mesh {last_mesh})")]
    MeshNotVanishing { last_mesh: f64 },
    #[error("ratio constant M = {ratio} exceeds cap {cap}")]
    RatioUnbounded { ratio: f64, cap: f64 },

    #[error("invalid space grid: {0}")]
    InvalidSpaceGrid(String),
    #[error("bandwidth {bandwidth} is below half the level spacing {spacing}")]
    BandwidthTooSmall { bandwidth: f64, spacing: f64 },
    #[error("no field times given")]
    EmptyTimes,
    #[error("time {0} is not a grid point")]
    OffGridTime(f64),

    #[error("norm diverges under refinement (last estimate {last})")]
    DivergentNorm { last: f64 },
    #[error("function is not in the weighted space: {0}")]
    NotInH(String),
    #[error("break {value} is missing from the field {axis} grid")]
    GridMismatch { axis: &'static str, value: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("invalid elementary function: {0}")]
    InvalidElementary(String),

    #[error("partition sequence rejected: {0}")]
    PartitionInvalid(String),
    #[error("partition mesh {partition_mesh} is finer than the simulation mesh {path_mesh}")]
    PartitionFinerThanPath { partition_mesh: f64, path_mesh: f64 },
    #[error("mollifier kernel cannot be normalized: {0}")]
    KernelNotNormalized(String),
    #[error("integrability certificate failed: {0}")]
    CertificateFailure(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Experiment {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
