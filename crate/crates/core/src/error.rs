use alloc::string::String;

/// Errors raised by the core engine, detectors, estimators and couplings.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("initial tree is empty")]
    EmptyTree,
    #[error("walker vertex {0} is not in the tree")]
    WalkerNotInTree(usize),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("invalid leaf law: {0}")]
    InvalidLaw(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("insufficient blocks: need {needed}, have {have}")]
    InsufficientBlocks { needed: usize, have: usize },
    #[error("insufficient samples: need {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("parameter {0} coincides with a sampled uniform")]
    UniformCollision(f64),
    #[error("law is not in Q_kappa: mass on {{1,2,..}} is {mass} < {kappa}")]
    NotUniformlyElliptic { mass: f64, kappa: f64 },
    #[error("pilot could not certify checkpoint {checkpoint} within {budget} steps")]
    PilotBudgetExhausted { checkpoint: usize, budget: u64 },
    #[error("replica {index} failed: {message}")]
    ReplicaFailed { index: usize, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
