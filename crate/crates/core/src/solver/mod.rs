//! Best-response dynamics over occupation measures.
//!
//! Iteration state is always a profile of occupation measures, one per
//! user; stationary policies are derived only for reporting and
//! simulation.

mod simulate;

use std::collections::BTreeMap;

use crate::game::Game;
use crate::lp::{
    evaluate, is_vertex, occupation_to_policy, reward_vector, simplex_solve, LpError,
    OccupationMeasure, StationaryPolicy,
};
use crate::model::{Mode, State};
use crate::throughput::{PartitionScheme, ThroughputSelector};
use crate::{Error, Result};

pub use simulate::{simulate, SimulationReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Tolerance for "the value did not improve" and "the measure did not change".
    pub eps: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { eps: 1e-8, max_sweeps: 500 }
    }
}

/// Starting profile for the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Each user's phase-1 vertex: the simplex solution of a zero objective.
    Phase1,
    /// All mass on power 0 (and no admission, empty queue).
    Idle,
    Measures(Vec<OccupationMeasure>),
}

pub fn initial_profile(game: &Game, init: &Init) -> Result<Vec<OccupationMeasure>> {
    let n = game.num_users();
    match init {
        Init::Phase1 => (0..n)
            .map(|i| {
                let p = game.polytope(i);
                let sol = simplex_solve(&p.lp(&vec![0.0; p.num_vars()])).map_err(|e| lp_error(i, e))?;
                OccupationMeasure::new(sol.x)
            })
            .collect(),
        Init::Idle => (0..n).map(|i| Ok(idle_measure(game, i))).collect(),
        Init::Measures(m) => {
            if m.len() != n {
                return Err(Error::InvalidArgument(format!("{} initial measures for {n} users", m.len())));
            }
            for (i, z) in m.iter().enumerate() {
                OccupationMeasure::validated(z.as_slice().to_vec(), game.polytope(i), 1e-8)?;
            }
            Ok(m.clone())
        }
    }
}

fn idle_measure(game: &Game, i: usize) -> OccupationMeasure {
    let space = game.space(i);
    let pi = game.user(i).channel.stationary();
    let mut z = vec![0.0; space.num_pairs()];
    for (k, w) in pi.into_iter().enumerate() {
        let x = space.state_index(State { channel: k, queue: 0 }).expect("state");
        z[space.pair_index(x, 0)] = w;
    }
    OccupationMeasure::new(z).expect("idle measure")
}

fn lp_error(i: usize, e: LpError) -> Error {
    match e {
        LpError::Infeasible => Error::Infeasible(i),
        other => Error::Lp(other),
    }
}

/// Optimal vertex of user `i`'s LP against the other users in `profile`,
/// and its value.
pub fn best_response(game: &Game, i: usize, profile: &[OccupationMeasure]) -> Result<(OccupationMeasure, f64)> {
    let reward = reward_vector(game, i, profile);
    let sol = simplex_solve(&game.polytope(i).lp(&reward)).map_err(|e| lp_error(i, e))?;
    Ok((OccupationMeasure::new(sol.x)?, sol.value))
}

/// Per-user gain of the best feasible unilateral deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct CneReport {
    pub values: Vec<f64>,
    pub best_values: Vec<f64>,
    pub gains: Vec<f64>,
    pub epsilon: f64,
}

impl CneReport {
    pub fn is_cne(&self) -> bool {
        self.gains.iter().all(|&g| g <= self.epsilon)
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn verify_cne(game: &Game, profile: &[OccupationMeasure], eps: f64) -> Result<CneReport> {
    let n = game.num_users();
    let mut values = Vec::with_capacity(n);
    let mut best_values = Vec::with_capacity(n);
    for i in 0..n {
        let reward = reward_vector(game, i, profile);
        let current: f64 = reward.iter().zip(profile[i].as_slice()).map(|(r, z)| r * z).sum();
        let sol = simplex_solve(&game.polytope(i).lp(&reward)).map_err(|e| lp_error(i, e))?;
        values.push(current);
        best_values.push(sol.value);
    }
    let gains = best_values.iter().zip(&values).map(|(b, v)| b - v).collect();
    Ok(CneReport { values, best_values, gains, epsilon: eps })
}

/// Outcome of an equilibrium computation.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub measures: Vec<OccupationMeasure>,
    pub policies: Vec<StationaryPolicy>,
    pub rates: Vec<f64>,
    pub power_costs: Vec<f64>,
    pub queue_costs: Option<Vec<f64>>,
    /// Full sweeps performed (summed over blocks for the partitioned solve).
    pub iterations: usize,
    pub pure: Vec<bool>,
    /// Reached a fixed point and every deviation gain is at most `epsilon`.
    pub converged: bool,
    pub epsilon: f64,
    pub gains: Vec<f64>,
}

/// A view of the game in which only `active` users update and the rest
/// stay at fixed measures.
#[derive(Debug, Clone)]
pub struct RestrictedGame<'a> {
    game: &'a Game,
    active: Vec<usize>,
    fixed: BTreeMap<usize, OccupationMeasure>,
}

pub fn restrict_game<'a>(
    game: &'a Game,
    active: &[usize],
    fixed: BTreeMap<usize, OccupationMeasure>,
) -> Result<RestrictedGame<'a>> {
    let n = game.num_users();
    if active.is_empty() {
        return Err(Error::InvalidArgument("restriction needs at least one active user".into()));
    }
    let mut covered = vec![false; n];
    for &i in active.iter().chain(fixed.keys()) {
        if i >= n {
            return Err(Error::OutOfRange { index: i, limit: n });
        }
        if std::mem::replace(&mut covered[i], true) {
            return Err(Error::InvalidArgument(format!("user {i} is both active and fixed")));
        }
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(Error::InvalidArgument(format!("user {i} is neither active nor fixed")));
    }
    let mut active = active.to_vec();
    active.sort_unstable();
    Ok(RestrictedGame { game, active, fixed })
}

struct SweepOutcome {
    profile: Vec<OccupationMeasure>,
    sweeps: usize,
    fixed_point: bool,
}

impl RestrictedGame<'_> {
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn fixed(&self) -> &BTreeMap<usize, OccupationMeasure> {
        &self.fixed
    }

    /// Round-robin best response over the active users, starting from
    /// `start` (entries of fixed users are overridden).
    fn iterate(&self, start: &[OccupationMeasure], opts: &SolverOptions) -> Result<SweepOutcome> {
        let mut profile: Vec<OccupationMeasure> = start.to_vec();
        for (&i, z) in &self.fixed {
            profile[i] = z.clone();
        }
        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut changed = false;
            for &i in &self.active {
                let reward = reward_vector(self.game, i, &profile);
                let incumbent: f64 = reward.iter().zip(profile[i].as_slice()).map(|(r, z)| r * z).sum();
                let sol = simplex_solve(&self.game.polytope(i).lp(&reward)).map_err(|e| lp_error(i, e))?;
                if sol.value > incumbent + opts.eps {
                    let candidate = OccupationMeasure::new(sol.x)?;
                    if candidate.sup_distance(&profile[i]) > opts.eps {
                        changed = true;
                    }
                    profile[i] = candidate;
                }
            }
            if !changed {
                return Ok(SweepOutcome { profile, sweeps, fixed_point: true });
            }
        }
        Ok(SweepOutcome { profile, sweeps, fixed_point: false })
    }

    pub fn algorithm1(&self, start: &[OccupationMeasure], opts: &SolverOptions) -> Result<EquilibriumResult> {
        let out = self.iterate(start, opts)?;
        finalize(self.game, out.profile, out.sweeps, out.fixed_point, opts)
    }
}

/// Round-robin best-response iteration on the full game.
pub fn algorithm1(game: &Game, init: &Init, opts: &SolverOptions) -> Result<EquilibriumResult> {
    let start = initial_profile(game, init)?;
    let all: Vec<usize> = (0..game.num_users()).collect();
    restrict_game(game, &all, BTreeMap::new())?.algorithm1(&start, opts)
}

/// Partition-sequential solve for a randomized SIC game whose decoding
/// randomization was built from `partition`: blocks are solved in order,
/// earlier blocks frozen at their solution, later blocks at the start
/// profile.
pub fn algorithm2(
    game: &Game,
    partition: &PartitionScheme,
    init: &Init,
    opts: &SolverOptions,
) -> Result<EquilibriumResult> {
    match &game.spec().throughput {
        ThroughputSelector::SicRandomized(alpha) if alpha.provenance() == Some(partition) => {}
        _ => return Err(Error::ProvenanceMismatch),
    }
    let mut profile = initial_profile(game, init)?;
    let mut sweeps = 0;
    let mut fixed_point = true;
    for block in partition.blocks() {
        let fixed: BTreeMap<usize, OccupationMeasure> = (0..game.num_users())
            .filter(|i| !block.contains(i))
            .map(|i| (i, profile[i].clone()))
            .collect();
        let out = restrict_game(game, block, fixed)?.iterate(&profile, opts)?;
        sweeps += out.sweeps;
        fixed_point &= out.fixed_point;
        profile = out.profile;
    }
    finalize(game, profile, sweeps, fixed_point, opts)
}

fn finalize(
    game: &Game,
    profile: Vec<OccupationMeasure>,
    iterations: usize,
    fixed_point: bool,
    opts: &SolverOptions,
) -> Result<EquilibriumResult> {
    let n = game.num_users();
    let report = verify_cne(game, &profile, opts.eps)?;
    let mut rates = Vec::with_capacity(n);
    let mut power_costs = Vec::with_capacity(n);
    let mut queue_costs = Vec::with_capacity(n);
    let mut pure = Vec::with_capacity(n);
    let mut policies = Vec::with_capacity(n);
    for (i, z) in profile.iter().enumerate() {
        let reward = reward_vector(game, i, &profile);
        let e = evaluate(z, &reward, game.polytope(i));
        rates.push(e.rate);
        power_costs.push(e.power_cost);
        queue_costs.extend(e.queue_cost);
        pure.push(is_vertex(z, game.polytope(i)));
        policies.push(occupation_to_policy(z, game.space(i)));
    }
    Ok(EquilibriumResult {
        measures: profile,
        policies,
        rates,
        power_costs,
        queue_costs: (game.spec().mode == Mode::Unsaturated).then_some(queue_costs),
        iterations,
        pure,
        converged: fixed_point && report.is_cne(),
        epsilon: opts.eps,
        gains: report.gains,
    })
}
