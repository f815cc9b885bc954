use crate::game::Game;
use crate::linalg;
use crate::model::{user_kernel, Mode, StateActionSpace, UserModel};
use crate::{Error, Result};

use super::OccupationPolytope;

const CLAMP_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-12;

/// Steady-state probability of each `(state, action)` pair of one user,
/// in the enumeration order of its [`StateActionSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    z: Vec<f64>,
}

impl OccupationMeasure {
    /// Clamps entries in `[-1e-12, 0)` to zero and renormalizes. Larger
    /// negative entries or a zero total are rejected.
    pub fn new(mut z: Vec<f64>) -> Result<Self> {
        if let Some(v) = z.iter().find(|v| **v < -CLAMP_TOL || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("occupation entry {v} is negative")));
        }
        z.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = z.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("occupation measure has no mass".into()));
        }
        z.iter_mut().for_each(|v| *v /= total);
        Ok(Self { z })
    }

    /// Checks the measure against the user's polytope within `tol`.
    pub fn validated(z: Vec<f64>, polytope: &OccupationPolytope, tol: f64) -> Result<Self> {
        if z.len() != polytope.num_vars() {
            return Err(Error::InvalidArgument(format!(
                "measure has {} entries, expected {}",
                z.len(),
                polytope.num_vars()
            )));
        }
        let m = Self::new(z)?;
        let v = polytope.violation(&m.z);
        if v > tol {
            return Err(Error::InvalidArgument(format!("measure violates constraints by {v:.3e}")));
        }
        Ok(m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn sup_distance(&self, other: &OccupationMeasure) -> f64 {
        self.z.iter().zip(&other.z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn mix(&self, other: &OccupationMeasure, t: f64) -> OccupationMeasure {
        let z = self.z.iter().zip(&other.z).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        OccupationMeasure { z }
    }

    /// Probability of each state.
    pub fn state_marginal(&self, space: &StateActionSpace) -> Vec<f64> {
        self.z.chunks(space.num_actions()).map(|c| c.iter().sum()).collect()
    }

    /// Mass on each `(channel index, effective power index)` cell.
    pub fn channel_power_marginal(&self, user: &UserModel, space: &StateActionSpace) -> Vec<Vec<f64>> {
        let mut table = vec![vec![0.0; user.l_max() + 1]; user.channel.num_states()];
        for (j, &w) in self.z.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (state, action) = space.pair(j);
            table[state.channel][space.effective_power(state, action)] += w;
        }
        table
    }
}

/// Conditional action distribution for each state.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    probs: Vec<Vec<f64>>,
}

impl StationaryPolicy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (x, row) in probs.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidArgument(format!("policy row {x} is not a distribution")));
            }
        }
        Ok(Self { probs })
    }

    /// `u(a | x)`.
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state][action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state]
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }
}

/// `u(a|x) = z(x,a) / sum_a z(x,a)`; states without mass get the uniform
/// distribution.
pub fn occupation_to_policy(z: &OccupationMeasure, space: &StateActionSpace) -> StationaryPolicy {
    let na = space.num_actions();
    let probs = z
        .as_slice()
        .chunks(na)
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 1e-12 {
                row.iter().map(|v| v / total).collect()
            } else {
                vec![1.0 / na as f64; na]
            }
        })
        .collect();
    StationaryPolicy { probs }
}

/// `z(x,a) = pi(x) u(a|x)` with `pi` the stationary law of the chain the
/// policy induces. Fails when that law is not unique.
pub fn policy_to_occupation(user: &UserModel, policy: &StationaryPolicy) -> Result<OccupationMeasure> {
    let space = user.space();
    let ns = space.num_states();
    if policy.num_states() != ns || policy.probs.iter().any(|r| r.len() != space.num_actions()) {
        return Err(Error::InvalidArgument("policy shape does not match the user".into()));
    }
    let mut chain = vec![vec![0.0; ns]; ns];
    for (ai, &action) in space.actions.iter().enumerate() {
        let kernel = user_kernel(user, action);
        for (x, row) in chain.iter_mut().enumerate() {
            let u = policy.prob(x, ai);
            if u > 0.0 {
                for (y, v) in row.iter_mut().enumerate() {
                    *v += u * kernel[x][y];
                }
            }
        }
    }
    let pi = linalg::stationary_distribution(&chain).ok_or(Error::NotUnichain)?;
    let z = (0..ns).flat_map(|x| policy.row(x).iter().map(|u| pi[x] * u).collect::<Vec<_>>()).collect();
    OccupationMeasure::new(z)
}

/// Expected immediate reward of user `i` for each of its `(state, action)`
/// pairs when every other user `j` plays `profile[j]` (`profile[i]` is
/// ignored).
///
/// The rate depends on the other users only through their channel index
/// and effective power, so each opponent measure is first collapsed to the
/// distribution of its received signal power; the sum over opponent
/// profiles then runs over those (usually few) signal levels.
pub fn reward_vector(game: &Game, i: usize, profile: &[OccupationMeasure]) -> Vec<f64> {
    let n = game.num_users();
    let user = game.user(i);
    let space = game.space(i);
    let noise = game.noise_power();
    let eval = game.evaluator();

    let mut levels: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n);
    for j in 0..n {
        if j == i {
            levels.push(vec![(0.0, 1.0)]);
            continue;
        }
        levels.push(signal_levels(game.user(j), game.space(j), &profile[j]));
    }

    let mut table = vec![vec![0.0; user.l_max() + 1]; user.channel.num_states()];
    let mut signals = vec![0.0; n];
    for (k, row) in table.iter_mut().enumerate() {
        for (l, cell) in row.iter_mut().enumerate() {
            let own = user.signal(k, l);
            if own == 0.0 && !game.spec().throughput.is_common_objective() {
                continue;
            }
            signals[i] = own;
            *cell = expected_rate(eval, i, &levels, &mut signals, 0, 1.0, noise);
        }
    }

    (0..space.num_pairs())
        .map(|j| {
            let (state, action) = space.pair(j);
            table[state.channel][space.effective_power(state, action)]
        })
        .collect()
}

fn expected_rate(
    eval: &crate::throughput::RateEvaluator,
    i: usize,
    levels: &[Vec<(f64, f64)>],
    signals: &mut Vec<f64>,
    depth: usize,
    weight: f64,
    noise: f64,
) -> f64 {
    if depth == levels.len() {
        return weight * eval.rate(i, signals, noise);
    }
    if depth == i {
        return expected_rate(eval, i, levels, signals, depth + 1, weight, noise);
    }
    let mut total = 0.0;
    for &(s, w) in &levels[depth] {
        signals[depth] = s;
        total += expected_rate(eval, i, levels, signals, depth + 1, weight * w, noise);
    }
    total
}

/// Distribution of the received signal power `h(k) p(l_eff)` under `z`.
fn signal_levels(user: &UserModel, space: &StateActionSpace, z: &OccupationMeasure) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, row) in z.channel_power_marginal(user, space).iter().enumerate() {
        for (l, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let s = user.signal(k, l);
            match out.iter_mut().find(|(v, _)| *v == s) {
                Some(entry) => entry.1 += w,
                None => out.push((s, w)),
            }
        }
    }
    out
}

/// Time-average rate and costs of a measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub rate: f64,
    pub power_cost: f64,
    pub queue_cost: Option<f64>,
}

pub fn evaluate(z: &OccupationMeasure, reward: &[f64], polytope: &OccupationPolytope) -> Evaluation {
    let z = z.as_slice();
    let rate = reward.iter().zip(z).map(|(r, v)| r * v).sum();
    let costs = polytope.cost_values(z);
    Evaluation {
        rate,
        power_cost: costs[0],
        queue_cost: (polytope.space.mode == Mode::Unsaturated).then(|| costs[1]),
    }
}
