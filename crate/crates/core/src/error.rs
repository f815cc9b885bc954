use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("no {0}-feasible policy: the occupation polytope is empty")]
    Infeasible(usize),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("policy induces a chain without a unique stationary distribution")]
    NotUnichain,

    #[error("oracle cap exceeded: {variables} variables (cap {cap})")]
    OracleCap { variables: usize, cap: usize },

    #[error("decoding randomization was not generated from the given partition")]
    ProvenanceMismatch,
}
