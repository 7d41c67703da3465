use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {agent}: action {value} outside {space}")]
    ActionOutOfBounds {
        agent: usize,
        value: String,
        space: String,
    },
    #[error("joint action has {got} components, game has {expected} agents")]
    JointActionArity { expected: usize, got: usize },
    #[error("probability {name}={value} outside [0, 1]")]
    ProbabilityDomain { name: &'static str, value: f64 },
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("gradient requested without a forward pass of the current parameters")]
    NoForwardPass,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
