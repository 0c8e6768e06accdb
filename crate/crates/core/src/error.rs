use thiserror::Error;

use crate::agent::AgentId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("agent {0} is backlogged; absent-interval sync does not apply")]
    AgentBacklogged(AgentId),
    #[error("agent {0} is not in collision-resolution class (q = 0)")]
    NotClassOne(AgentId),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("pulse round needs at least one contender")]
    EmptyRound,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("backoff floor argument {floor_arg} is negative; compensation state is corrupt")]
    NegativeBackoff { floor_arg: f64 },
    #[error("collision phase needs at least two contenders, got {0}")]
    NotACollision(usize),
    #[error("throughput profile is not unimodal on (0, {g_hi}]")]
    NotUnimodal { g_hi: f64 },
    #[error("need at least {needed} departures, trace has {available}")]
    NotEnoughDepartures { needed: usize, available: usize },
    #[error("fairness index undefined: all throughputs are zero")]
    ZeroThroughput,
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(u64, u64),
    #[error("trace is missing {0}")]
    MissingSnapshot(&'static str),
    #[error("trace io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
