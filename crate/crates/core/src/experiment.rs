//! The three-user benchmark instance and its published equilibrium
//! throughputs.

use crate::model::{build_bf_fsmc, GameSpec, Mode, QueueModel, UserModel};
use crate::throughput::{make_randomization, three_user_partitions, PartitionScheme, ThroughputSelector};
use crate::{Error, Result};

pub const USERS: usize = 3;
pub const K_MAX: usize = 3;
pub const L_MAX: usize = 5;
pub const Q_MAX: usize = 10;
pub const POWER_BUDGET: f64 = 2.0;
pub const QUEUE_BUDGET: f64 = 5.0;
pub const ARRIVAL_RATE: f64 = 0.3;
pub const NOISE_POWER: f64 = 1.0;

pub fn benchmark_user(mode: Mode) -> UserModel {
    let channel = build_bf_fsmc(K_MAX).expect("benchmark channel");
    match mode {
        Mode::Saturated => UserModel::saturated(channel, L_MAX, POWER_BUDGET),
        Mode::Unsaturated => {
            let queue = QueueModel::poisson(Q_MAX, ARRIVAL_RATE).expect("benchmark queue");
            UserModel::unsaturated(channel, queue, L_MAX, POWER_BUDGET, QUEUE_BUDGET)
        }
    }
    .expect("benchmark user")
}

/// Decoding scheme of one benchmark game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkGame {
    MatchedFilter,
    /// Partition-induced randomization with label `(p_a, p_e)`.
    Randomized(usize, usize),
    Sum,
    SumCapacity,
}

impl BenchmarkGame {
    pub fn name(&self) -> String {
        match self {
            BenchmarkGame::MatchedFilter => "in".into(),
            BenchmarkGame::Randomized(a, e) => format!("alpha({a},{e})"),
            BenchmarkGame::Sum => "s".into(),
            BenchmarkGame::SumCapacity => "sc".into(),
        }
    }

    pub fn partition(&self) -> Result<Option<PartitionScheme>> {
        match *self {
            BenchmarkGame::Randomized(a, e) => three_user_partitions()
                .into_iter()
                .find(|p| p.label == (a, e))
                .map(|p| Some(p.scheme))
                .ok_or_else(|| Error::InvalidArgument(format!("no partition labelled ({a},{e})"))),
            _ => Ok(None),
        }
    }

    pub fn spec(&self, mode: Mode) -> Result<GameSpec> {
        let throughput = match self {
            BenchmarkGame::MatchedFilter => ThroughputSelector::MatchedFilter,
            BenchmarkGame::Randomized(..) => {
                let partition = self.partition()?.expect("randomized game has a partition");
                ThroughputSelector::SicRandomized(make_randomization(&partition))
            }
            BenchmarkGame::Sum => ThroughputSelector::Sum,
            BenchmarkGame::SumCapacity => ThroughputSelector::SumCapacity,
        };
        GameSpec::new(vec![benchmark_user(mode); USERS], NOISE_POWER, throughput, mode)
    }
}

/// Published equilibrium throughputs of one game in one mode. Common
/// objective games list the objective value once per user. Several
/// entries mean several equilibria were reported.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub game: BenchmarkGame,
    pub mode: Mode,
    pub equilibria: Vec<[f64; USERS]>,
}

impl ReferenceRow {
    /// Largest coordinate gap to the closest listed equilibrium.
    pub fn distance(&self, rates: &[f64]) -> f64 {
        self.equilibria
            .iter()
            .map(|e| e.iter().zip(rates).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn reference_table() -> Vec<ReferenceRow> {
    use BenchmarkGame::*;
    use Mode::*;
    let row = |game, mode, equilibria: &[[f64; 3]]| ReferenceRow { game, mode, equilibria: equilibria.to_vec() };
    vec![
        row(MatchedFilter, Saturated, &[[0.5263, 0.5263, 0.5263]]),
        row(MatchedFilter, Unsaturated, &[[0.4649, 0.4649, 0.4649]]),
        row(Randomized(1, 1), Saturated, &[[1.0644, 0.6969, 0.5068]]),
        row(Randomized(1, 1), Unsaturated, &[[0.6949, 0.5649, 0.4649]]),
        row(Randomized(4, 2), Saturated, &[[0.8836, 0.8836, 0.5082]]),
        row(Randomized(4, 2), Unsaturated, &[[0.6299, 0.6299, 0.4649]]),
        row(Randomized(5, 1), Saturated, &[[0.7566, 0.7566, 0.7566]]),
        row(Randomized(5, 1), Unsaturated, &[[0.5749, 0.5749, 0.5749]]),
        row(Randomized(2, 1), Saturated, &[[1.0644, 0.6035, 0.5987], [1.0644, 0.5987, 0.6035]]),
        row(Randomized(2, 1), Unsaturated, &[[0.6949, 0.5149, 0.5149]]),
        row(Sum, Saturated, &[[1.6139; 3]]),
        row(Sum, Unsaturated, &[[1.3959; 3]]),
        row(SumCapacity, Saturated, &[[2.2789; 3]]),
        row(SumCapacity, Unsaturated, &[[1.7246; 3]]),
    ]
}
