use thiserror::Error;

use crate::mdp::StateId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state {0} has infinitely many successors")]
    InfiniteBranching(StateId),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("malformed MDP: {0}")]
    Malformed(String),
    #[error("target set is not closed under transitions (not a sink)")]
    NotSink,
    #[error("objective is not tail in this MDP: {0}")]
    NotTail(String),
    #[error("state {0} has value 0 and is not part of the conditioned MDP")]
    ZeroValueRoot(StateId),
    #[error("run enters the bottom state {0}; no contraction exists")]
    HitBottom(StateId),
    #[error("recurrent ladder needs at least one exit")]
    EmptyExits,
    #[error("no policy with finite expected cost from state {0}")]
    NoFiniteCostPolicy(StateId),
    #[error("instance too large for brute force: {0}")]
    TooLarge(String),
    #[error("frontier F_{level} is empty at the maximal schedule radius")]
    EmptyFrontier { level: usize },
    #[error("visit-count estimates did not stabilise within the budget: {0}")]
    BudgetExhausted(String),
    #[error("state {0} has certified return probability 1; the MDP is not universally transient")]
    NotUniversallyTransient(StateId),
    #[error("no qualifying successor for state {0} within the radius schedule")]
    RadiusExhausted(StateId),
    #[error("unknown gadget '{0}'")]
    UnknownGadget(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
