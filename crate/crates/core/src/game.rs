use crate::lp::{build_polytope, OccupationPolytope};
use crate::model::{GameSpec, StateActionSpace, UserModel};
use crate::throughput::RateEvaluator;
use crate::Result;

/// A [`GameSpec`] together with everything derived from it once: the
/// per-user state/action enumerations, occupation polytopes, and the
/// compiled throughput function.
#[derive(Debug, Clone)]
pub struct Game {
    spec: GameSpec,
    polytopes: Vec<OccupationPolytope>,
    evaluator: RateEvaluator,
}

impl Game {
    pub fn new(spec: GameSpec) -> Result<Self> {
        let polytopes = spec.users.iter().map(build_polytope).collect();
        let evaluator = spec.throughput.evaluator(spec.num_users());
        Ok(Self { spec, polytopes, evaluator })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn num_users(&self) -> usize {
        self.spec.num_users()
    }

    pub fn user(&self, i: usize) -> &UserModel {
        &self.spec.users[i]
    }

    pub fn space(&self, i: usize) -> &StateActionSpace {
        &self.polytopes[i].space
    }

    pub fn polytope(&self, i: usize) -> &OccupationPolytope {
        &self.polytopes[i]
    }

    pub fn evaluator(&self) -> &RateEvaluator {
        &self.evaluator
    }

    pub fn noise_power(&self) -> f64 {
        self.spec.noise_power
    }
}
