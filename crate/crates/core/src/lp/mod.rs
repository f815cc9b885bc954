//! Occupation-measure linear programming: the simplex solver, the
//! per-user constraint polytope, reward vectors, and conversions between
//! occupation measures and stationary policies.

mod occupation;
mod polytope;
mod simplex;

pub use occupation::{
    evaluate, occupation_to_policy, policy_to_occupation, reward_vector, Evaluation,
    OccupationMeasure, StationaryPolicy,
};
pub use polytope::{build_polytope, is_vertex, OccupationPolytope};
pub use simplex::{simplex_solve, LinearProgram, LpError, LpSolution};
