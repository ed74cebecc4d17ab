use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::VehicleId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("angle is not finite: {0}")]
    NonFiniteAngle(f64),
    #[error("bearing undefined between coincident positions")]
    CoincidentPositions,
    #[error("invalid airspace configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("no action supplied for active vehicle {0}")]
    MissingAction(VehicleId),
    #[error("action {action} for vehicle {id} outside [-1, 1]")]
    ActionOutOfRange { id: VehicleId, action: f64 },
    #[error("malformed arrival schedule at line {line}: {reason}")]
    Schedule { line: usize, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("expected an observation history of length {expected}, got {got}")]
    HistoryLength { expected: usize, got: usize },
    #[error("cache does not belong to this network ({0})")]
    CacheMismatch(&'static str),
    #[error("parameter layout mismatch: {0}")]
    Layout(String),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (this build reads {supported})")]
    Version { found: u32, supported: u32 },
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("truncated or malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint is missing array `{0}`")]
    MissingArray(String),
    #[error("array `{name}` has shape {found:?}, expected {expected:?}")]
    Shape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum KdeError {
    #[error("kernel density estimate needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance along the {0} axis")]
    ZeroVariance(&'static str),
    #[error("invalid grid: {0}")]
    Grid(String),
}

/// Top-level error for training and evaluation drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run contract violated: {0}")]
    Contract(String),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
