use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("N must be at least 2, got {0}")]
    GroupOrder(usize),
    #[error("ancilla policy: {0}")]
    AncillaPolicy(String),
    #[error("gate is not unitary (residual {0:e})")]
    NonUnitary(f64),
    #[error("bad gate targets: {0}")]
    Targets(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown site: {0}")]
    UnknownSite(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("schedule parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
