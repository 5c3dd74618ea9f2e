use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("gap cap g must be at least 1")]
    ZeroGap,
    #[error("invalid event (v={level}, c={count}) for state {state:?}")]
    InvalidEvent {
        level: usize,
        count: u32,
        state: Vec<u32>,
    },
    #[error("state {0:?} is not a member of the state space")]
    NotInSpace(Vec<u32>),
    #[error("state encoding needs {bits} bits, at most 128 supported")]
    StateTooWide { bits: u32 },
    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
