//! Constrained Nash equilibria for N-user stochastic games on a
//! multiple-access channel.
//!
//! Each user owns a finite-state Markov channel and (optionally) a finite
//! queue, picks a power level and an admission decision from its own state
//! only, and maximizes a time-average throughput subject to time-average
//! power and queue budgets. A user's constrained best response is a linear
//! program over occupation measures; equilibria are found by round-robin
//! best-response iteration ([`solver::algorithm1`]) or, for randomized SIC
//! decoding built from an ordered partition, by solving the partition
//! blocks in sequence ([`solver::algorithm2`]).
//!
//! Users and decoding-order indices are 0-based throughout this crate.

pub mod experiment;
mod game;
mod linalg;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod throughput;

mod error;

pub use error::{Error, Result};
pub use lp::{
    evaluate, is_vertex, occupation_to_policy, policy_to_occupation, reward_vector, simplex_solve,
    Evaluation, LinearProgram, LpError, LpSolution, OccupationMeasure, OccupationPolytope,
    StationaryPolicy,
};
pub use game::Game;
pub use model::{
    build_bf_fsmc, truncated_arrival_pmf, Action, ChannelModel, CostKind, GameSpec, Mode,
    QueueModel, State, StateActionSpace, UserModel,
};
pub use solver::{
    algorithm1, algorithm2, best_response, initial_profile, restrict_game, simulate, verify_cne, CneReport,
    EquilibriumResult, Init, RestrictedGame, SimulationReport, SolverOptions,
};
pub use throughput::{
    make_randomization, permutation_by_index, support_set, DecodingRandomization,
    PartitionScheme, ThroughputSelector,
};
