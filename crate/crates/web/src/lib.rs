//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every exported function takes plain numbers and strings and returns a
//! JSON document. The `*_json` functions hold the logic and are callable
//! from native tests; the `#[wasm_bindgen]` wrappers only convert errors.

use macgame::experiment::{reference_table, BenchmarkGame, K_MAX, L_MAX, NOISE_POWER, USERS};
use macgame::throughput::{three_user_partitions, PartitionScheme};
use macgame::{
    algorithm1, algorithm2, build_bf_fsmc, make_randomization, permutation_by_index, support_set, GameSpec, Init,
    Mode, QueueModel, SolverOptions, ThroughputSelector, UserModel,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Parses `in`, `s`, `sc` or `alpha(a,e)`.
pub fn parse_game(name: &str) -> Result<BenchmarkGame, String> {
    let name = name.trim();
    match name {
        "in" => return Ok(BenchmarkGame::MatchedFilter),
        "s" => return Ok(BenchmarkGame::Sum),
        "sc" => return Ok(BenchmarkGame::SumCapacity),
        _ => {}
    }
    let inner = name
        .strip_prefix("alpha(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("unknown game `{name}`; expected in, s, sc or alpha(a,e)"))?;
    let (a, e) = inner.split_once(',').ok_or_else(|| format!("`{name}`: expected alpha(a,e)"))?;
    let label = (
        a.trim().parse().map_err(|_| format!("`{name}`: bad partition label"))?,
        e.trim().parse().map_err(|_| format!("`{name}`: bad block order label"))?,
    );
    if !three_user_partitions().iter().any(|p| p.label == label) {
        return Err(format!("`{name}`: no ordered partition with that label"));
    }
    Ok(BenchmarkGame::Randomized(label.0, label.1))
}

fn parse_mode(mode: &str) -> Result<Mode, String> {
    match mode.trim() {
        "saturated" => Ok(Mode::Saturated),
        "unsaturated" => Ok(Mode::Unsaturated),
        other => Err(format!("unknown mode `{other}`")),
    }
}

/// Parses blocks written with 1-based users, e.g. `1 | 2 3`.
pub fn parse_blocks(text: &str, n_users: usize) -> Result<PartitionScheme, String> {
    let blocks = text
        .split('|')
        .map(|b| {
            b.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| match t.parse::<usize>() {
                    Ok(u) if u >= 1 => Ok(u - 1),
                    _ => Err(format!("`{t}` is not a user number")),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    PartitionScheme::new(blocks, n_users).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct WeightedOrder {
    order: Vec<usize>,
    mass: f64,
}

#[derive(Debug, Serialize)]
struct RandomizationView {
    blocks: Vec<Vec<usize>>,
    orders: Vec<WeightedOrder>,
    total_mass: f64,
}

/// Decoding orders (1-based users, first decoded first) and their mass
/// for the ordered partition written as in [`parse_blocks`].
pub fn randomization_json(blocks: &str, n_users: usize) -> Result<String, String> {
    if n_users == 0 || n_users > 8 {
        return Err("number of users must be in 1..=8".into());
    }
    let partition = parse_blocks(blocks, n_users)?;
    let alpha = make_randomization(&partition);
    let orders: Vec<WeightedOrder> = support_set(&partition)
        .into_iter()
        .map(|m| WeightedOrder {
            order: permutation_by_index(n_users, m).expect("support index").iter().map(|u| u + 1).collect(),
            mass: alpha.mass()[m],
        })
        .collect();
    let view = RandomizationView {
        blocks: partition.blocks().iter().map(|b| b.iter().map(|u| u + 1).collect()).collect(),
        total_mass: orders.iter().map(|o| o.mass).sum(),
        orders,
    };
    Ok(serde_json::to_string(&view).expect("plain data"))
}

fn benchmark_spec(game: BenchmarkGame, mode: Mode, power_budget: f64, queue_budget: f64) -> Result<GameSpec, String> {
    let err = |e: macgame::Error| e.to_string();
    let channel = build_bf_fsmc(K_MAX).map_err(err)?;
    let user = match mode {
        Mode::Saturated => UserModel::saturated(channel, L_MAX, power_budget),
        Mode::Unsaturated => {
            let queue = QueueModel::poisson(macgame::experiment::Q_MAX, macgame::experiment::ARRIVAL_RATE).map_err(err)?;
            UserModel::unsaturated(channel, queue, L_MAX, power_budget, queue_budget)
        }
    }
    .map_err(err)?;
    let base = game.spec(mode).map_err(err)?;
    GameSpec::new(vec![user; USERS], NOISE_POWER, base.throughput, mode).map_err(err)
}

#[derive(Debug, Serialize)]
struct SolveView {
    game: String,
    mode: String,
    rates: Vec<f64>,
    power_costs: Vec<f64>,
    queue_costs: Option<Vec<f64>>,
    pure: Vec<bool>,
    iterations: usize,
    converged: bool,
    /// Listed equilibria for this game, only when the budgets are the
    /// benchmark ones.
    reference: Vec<[f64; USERS]>,
}

/// Solves the three-user benchmark game with the given budgets.
pub fn solve_json(game: &str, mode: &str, power_budget: f64, queue_budget: f64) -> Result<String, String> {
    let bench = parse_game(game)?;
    let mode = parse_mode(mode)?;
    let spec = benchmark_spec(bench, mode, power_budget, queue_budget)?;
    let g = macgame::Game::new(spec).map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    let result = match bench.partition().map_err(|e| e.to_string())? {
        Some(p) => algorithm2(&g, &p, &Init::Phase1, &opts),
        None => algorithm1(&g, &Init::Phase1, &opts),
    }
    .map_err(|e| e.to_string())?;
    let default_budgets = power_budget == macgame::experiment::POWER_BUDGET
        && (mode == Mode::Saturated || queue_budget == macgame::experiment::QUEUE_BUDGET);
    let reference = if default_budgets {
        reference_table()
            .into_iter()
            .find(|r| r.game == bench && r.mode == mode)
            .map(|r| r.equilibria)
            .unwrap_or_default()
    } else {
        Vec::new()
    };
    let view = SolveView {
        game: bench.name(),
        mode: format!("{mode:?}").to_lowercase(),
        rates: result.rates,
        power_costs: result.power_costs,
        queue_costs: result.queue_costs,
        pure: result.pure,
        iterations: result.iterations,
        converged: result.converged,
        reference,
    };
    Ok(serde_json::to_string(&view).expect("plain data"))
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    level: usize,
    rates: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CurveView {
    game: String,
    channel: usize,
    other_level: usize,
    points: Vec<CurvePoint>,
}

/// Instantaneous rates of all users as user 1 sweeps its power level,
/// every user in channel state `channel` and users 2.. at `other_level`.
pub fn rate_curve_json(game: &str, channel: usize, other_level: usize) -> Result<String, String> {
    let bench = parse_game(game)?;
    if channel > K_MAX {
        return Err(format!("channel state must be in 0..={K_MAX}"));
    }
    if other_level > L_MAX {
        return Err(format!("power level must be in 0..={L_MAX}"));
    }
    let spec = bench.spec(Mode::Saturated).map_err(|e| e.to_string())?;
    let eval = spec.throughput.evaluator(USERS);
    let points = (0..=L_MAX)
        .map(|l| {
            let signals: Vec<f64> = spec
                .users
                .iter()
                .enumerate()
                .map(|(i, u)| u.signal(channel, if i == 0 { l } else { other_level }))
                .collect();
            let rates = match spec.throughput {
                ThroughputSelector::Sum | ThroughputSelector::SumCapacity => {
                    vec![eval.rate(0, &signals, spec.noise_power)]
                }
                _ => (0..USERS).map(|i| eval.rate(i, &signals, spec.noise_power)).collect(),
            };
            CurvePoint { level: l, rates }
        })
        .collect();
    let view = CurveView { game: bench.name(), channel, other_level, points };
    Ok(serde_json::to_string(&view).expect("plain data"))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn randomization(blocks: &str, n_users: usize) -> Result<String, JsError> {
    js(randomization_json(blocks, n_users))
}

#[wasm_bindgen]
pub fn solve(game: &str, mode: &str, power_budget: f64, queue_budget: f64) -> Result<String, JsError> {
    js(solve_json(game, mode, power_budget, queue_budget))
}

#[wasm_bindgen]
pub fn rate_curve(game: &str, channel: usize, other_level: usize) -> Result<String, JsError> {
    js(rate_curve_json(game, channel, other_level))
}
