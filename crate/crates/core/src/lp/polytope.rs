use crate::linalg;
use crate::model::{instantaneous_cost, user_kernel, CostKind, Mode, StateActionSpace, UserModel};

use super::{LinearProgram, OccupationMeasure};

const ZERO_TOL: f64 = 1e-10;
const BINDING_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-9;

/// Feasible occupation measures of one user:
///
/// - one balance row per state `y`: `sum_{x,a} (1{x=y} - P(y | x, a)) z(x,a) = 0`
/// - cost rows `sum c^k(x,a) z(x,a) <= budget_k` (power, plus queue when unsaturated)
/// - `sum z = 1`, `z >= 0`
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationPolytope {
    pub space: StateActionSpace,
    pub balance: Vec<Vec<f64>>,
    pub costs: Vec<Vec<f64>>,
    pub budgets: Vec<f64>,
}

pub fn build_polytope(user: &UserModel) -> OccupationPolytope {
    let space = user.space();
    let n = space.num_pairs();
    let ns = space.num_states();
    let mut balance = vec![vec![0.0; n]; ns];
    let mut power = vec![0.0; n];
    let mut queue = vec![0.0; n];

    for (ai, &action) in space.actions.iter().enumerate() {
        let kernel = user_kernel(user, action);
        for (xi, &state) in space.states.iter().enumerate() {
            let j = space.pair_index(xi, ai);
            balance[xi][j] += 1.0;
            for (yi, row) in balance.iter_mut().enumerate() {
                row[j] -= kernel[xi][yi];
            }
            power[j] = instantaneous_cost(user, state, action, CostKind::Power).expect("power cost");
            if space.mode == Mode::Unsaturated {
                queue[j] = instantaneous_cost(user, state, action, CostKind::Queue).expect("queue cost");
            }
        }
    }

    let (costs, budgets) = match (space.mode, user.queue_budget) {
        (Mode::Unsaturated, Some(qb)) => (vec![power, queue], vec![user.power_budget, qb]),
        _ => (vec![power], vec![user.power_budget]),
    };
    OccupationPolytope { space, balance, costs, budgets }
}

impl OccupationPolytope {
    pub fn num_vars(&self) -> usize {
        self.space.num_pairs()
    }

    /// Equality rows (balance then normalization) with their right-hand sides.
    pub fn equalities(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = self.balance.clone();
        rows.push(vec![1.0; self.num_vars()]);
        let mut rhs = vec![0.0; self.balance.len()];
        rhs.push(1.0);
        (rows, rhs)
    }

    /// The best-response LP for the reward vector.
    pub fn lp(&self, reward: &[f64]) -> LinearProgram {
        let (eq_lhs, eq_rhs) = self.equalities();
        LinearProgram {
            objective: reward.to_vec(),
            eq_lhs,
            eq_rhs,
            ub_lhs: self.costs.clone(),
            ub_rhs: self.budgets.clone(),
        }
    }

    /// Largest constraint violation of a point (0 when feasible).
    pub fn violation(&self, z: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        let balance = self.balance.iter().map(|r| dot(r).abs()).fold(0.0, f64::max);
        let norm = (z.iter().sum::<f64>() - 1.0).abs();
        let cost = self
            .costs
            .iter()
            .zip(&self.budgets)
            .map(|(r, b)| (dot(r) - b).max(0.0))
            .fold(0.0, f64::max);
        let neg = z.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        balance.max(norm).max(cost).max(neg)
    }

    pub fn cost_values(&self, z: &[f64]) -> Vec<f64> {
        self.costs.iter().map(|r| r.iter().zip(z).map(|(a, b)| a * b).sum()).collect()
    }
}

/// True iff `z` is a basic feasible solution of the polytope: the columns
/// of the support, restricted to the active constraints, are independent.
pub fn is_vertex(z: &OccupationMeasure, polytope: &OccupationPolytope) -> bool {
    let z = z.as_slice();
    if polytope.violation(z) > 1e-8 {
        return false;
    }
    let support: Vec<usize> = (0..z.len()).filter(|&j| z[j] > ZERO_TOL).collect();
    let (mut rows, _) = polytope.equalities();
    for (row, (&value, &budget)) in polytope
        .costs
        .iter()
        .zip(polytope.cost_values(z).iter().zip(&polytope.budgets))
    {
        if (value - budget).abs() <= BINDING_TOL * budget.abs().max(1.0) {
            rows.push(row.clone());
        }
    }
    let restricted: Vec<Vec<f64>> =
        rows.iter().map(|r| support.iter().map(|&j| r[j]).collect()).collect();
    linalg::rank(&restricted, RANK_TOL) == support.len()
}
