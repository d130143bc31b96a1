use thiserror::Error;

/// Errors raised by the model, optimizer and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("invalid MAC parameters: {0}")]
    InvalidParams(String),

    #[error("invalid rate term: share {share} with burst fraction {burst}")]
    InvalidShare { share: f64, burst: f64 },

    #[error("transmission probability {0} outside [0, 1]")]
    InvalidTau(f64),

    #[error("degenerate operating point: expected phase duration is zero")]
    Degenerate,

    #[error("rate formula requires zero relay share, got s_r = {0}")]
    NonzeroRelayShare(f64),

    #[error("invalid optimizer settings: {0}")]
    InvalidSettings(String),

    #[error("improvement undefined: non-cooperative benchmark rate is zero")]
    UndefinedImprovement,
}

pub type Result<T> = std::result::Result<T, Error>;
