use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::Game;
use crate::lp::StationaryPolicy;
use crate::model::{Mode, State};
use crate::{Error, Result};

const CHANNEL_STREAM: u64 = 0;
const ACTION_STREAM: u64 = 1;
const ARRIVAL_STREAM: u64 = 2;

/// Empirical time averages of a simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub horizon: u64,
    pub rates: Vec<f64>,
    pub power_costs: Vec<f64>,
    pub queue_costs: Option<Vec<f64>>,
    /// Fraction of slots each user spent in each channel state.
    pub channel_occupancy: Vec<Vec<f64>>,
}

fn stream(seed: u64, user: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user as u64 * 3 + purpose);
    rng
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

struct UserSim {
    channel_cdf: Vec<Vec<f64>>,
    action_cdf: Vec<Vec<f64>>,
    arrival_cdf: Vec<f64>,
    channel_rng: ChaCha8Rng,
    action_rng: ChaCha8Rng,
    arrival_rng: ChaCha8Rng,
    state: State,
}

/// Runs the slot-level process under stationary policies from the all-zero
/// initial state and returns running averages. Deterministic in `seed`;
/// each user draws channel moves, actions and arrivals from its own stream.
pub fn simulate(
    game: &Game,
    policies: &[StationaryPolicy],
    horizon: u64,
    seed: u64,
) -> Result<SimulationReport> {
    let n = game.num_users();
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if policies.len() != n {
        return Err(Error::InvalidArgument(format!("{} policies for {n} users", policies.len())));
    }
    let mut sims: Vec<UserSim> = (0..n)
        .map(|i| {
            let user = game.user(i);
            let space = game.space(i);
            if policies[i].num_states() != space.num_states() {
                return Err(Error::InvalidArgument(format!("policy {i} has the wrong shape")));
            }
            Ok(UserSim {
                channel_cdf: user.channel.transition().iter().map(|r| cumulative(r)).collect(),
                action_cdf: (0..space.num_states()).map(|x| cumulative(policies[i].row(x))).collect(),
                arrival_cdf: user.queue.as_ref().map_or_else(Vec::new, |q| cumulative(q.arrival_pmf())),
                channel_rng: stream(seed, i, CHANNEL_STREAM),
                action_rng: stream(seed, i, ACTION_STREAM),
                arrival_rng: stream(seed, i, ARRIVAL_STREAM),
                state: State { channel: 0, queue: 0 },
            })
        })
        .collect::<Result<_>>()?;

    let eval = game.evaluator();
    let noise = game.noise_power();
    let mut rate_sum = vec![0.0; n];
    let mut power_sum = vec![0.0; n];
    let mut queue_sum = vec![0.0; n];
    let mut occupancy: Vec<Vec<u64>> = (0..n).map(|i| vec![0; game.user(i).channel.num_states()]).collect();
    let mut signals = vec![0.0; n];
    let mut actions = Vec::with_capacity(n);

    for _ in 0..horizon {
        actions.clear();
        for (i, sim) in sims.iter_mut().enumerate() {
            let space = game.space(i);
            let x = space.state_index(sim.state).expect("reachable state");
            let action = space.actions[draw(&sim.action_cdf[x], &mut sim.action_rng)];
            let l_eff = space.effective_power(sim.state, action);
            signals[i] = game.user(i).signal(sim.state.channel, l_eff);
            power_sum[i] += game.user(i).power[action.power];
            queue_sum[i] += sim.state.queue as f64;
            occupancy[i][sim.state.channel] += 1;
            actions.push(action);
        }
        for (i, total) in rate_sum.iter_mut().enumerate() {
            *total += eval.rate(i, &signals, noise);
        }
        for (i, sim) in sims.iter_mut().enumerate() {
            let k = sim.state.channel;
            let next_k = draw(&sim.channel_cdf[k], &mut sim.channel_rng);
            let next_q = match &game.user(i).queue {
                Some(queue) => {
                    let gamma = draw(&sim.arrival_cdf, &mut sim.arrival_rng);
                    queue.next(sim.state.queue, actions[i], gamma)
                }
                None => 0,
            };
            sim.state = State { channel: next_k, queue: next_q };
        }
    }

    let t = horizon as f64;
    Ok(SimulationReport {
        horizon,
        rates: rate_sum.iter().map(|v| v / t).collect(),
        power_costs: power_sum.iter().map(|v| v / t).collect(),
        queue_costs: (game.spec().mode == Mode::Unsaturated).then(|| queue_sum.iter().map(|v| v / t).collect()),
        channel_occupancy: occupancy
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / t).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_bf_fsmc, GameSpec, UserModel};
    use crate::throughput::ThroughputSelector;

    fn game() -> Game {
        let ch = build_bf_fsmc(3).unwrap();
        let users = (0..2).map(|_| UserModel::saturated(ch.clone(), 5, 2.0).unwrap()).collect();
        Game::new(GameSpec::new(users, 1.0, ThroughputSelector::MatchedFilter, Mode::Saturated).unwrap()).unwrap()
    }

    fn idle_policy() -> StationaryPolicy {
        StationaryPolicy::new(vec![vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]; 4]).unwrap()
    }

    #[test]
    fn idle_policies_earn_nothing() {
        let g = game();
        let r = simulate(&g, &[idle_policy(), idle_policy()], 10_000, 7).unwrap();
        assert_eq!(r.rates, vec![0.0, 0.0]);
        assert_eq!(r.power_costs, vec![0.0, 0.0]);
        assert!(r.queue_costs.is_none());
    }

    #[test]
    fn deterministic_in_seed() {
        let g = game();
        let u = StationaryPolicy::new(vec![vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.5]; 4]).unwrap();
        let a = simulate(&g, &[u.clone(), u.clone()], 5_000, 42).unwrap();
        let b = simulate(&g, &[u.clone(), u.clone()], 5_000, 42).unwrap();
        let c = simulate(&g, &[u.clone(), u], 5_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = game();
        assert!(simulate(&g, &[idle_policy(), idle_policy()], 0, 1).is_err());
        assert!(simulate(&g, &[idle_policy()], 10, 1).is_err());
    }
}
