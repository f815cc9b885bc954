//! Experiment configuration: a TOML document with user models, the
//! throughput selector, solver settings, simulation settings and output
//! location. User indices and decoding orders are 1-based here.

use std::path::{Path, PathBuf};

use macgame::{
    build_bf_fsmc, make_randomization, GameSpec, Mode, PartitionScheme, QueueModel, SolverOptions,
    ThroughputSelector, UserModel,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub users: Vec<UserConfig>,
    pub noise_power: f64,
    pub mode: ModeConfig,
    pub throughput: ThroughputConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Saturated,
    Unsaturated,
}

impl From<ModeConfig> for Mode {
    fn from(m: ModeConfig) -> Mode {
        match m {
            ModeConfig::Saturated => Mode::Saturated,
            ModeConfig::Unsaturated => Mode::Unsaturated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    /// Highest channel index; the channel has `k_max + 1` states.
    pub k_max: usize,
    /// Highest power index; power level `l` costs `l`.
    pub l_max: usize,
    pub q_max: Option<usize>,
    pub power_budget: f64,
    pub queue_budget: Option<f64>,
    /// Mean of the Poisson arrival law, packets per slot.
    pub arrival_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputKind {
    MatchedFilter,
    Sum,
    SumCapacity,
    SicEndpoint,
    SicRandomized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThroughputConfig {
    pub kind: ThroughputKind,
    /// Decoding order for `sic_endpoint`, 1-based lexicographic index.
    pub m: Option<usize>,
    /// Ordered blocks of 1-based user indices for `sic_randomized`.
    pub partition: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub eps: f64,
    pub max_sweeps: usize,
    /// `phase1`, `idle`, or `file:<path to measures.csv>`.
    pub init: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { eps: d.eps, max_sweeps: d.max_sweeps, init: "phase1".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub horizon: u64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { horizon: 1_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// What `solve` prints on stdout; files are always CSV.
    pub format: OutputFormat,
    pub path: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: OutputFormat::Table, path: PathBuf::from("results") }
    }
}

/// How to start the best-response iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitChoice {
    Phase1,
    Idle,
    File(PathBuf),
}

/// A validated configuration together with the game it describes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: GameSpec,
    /// 0-based partition when the throughput is partition-randomized.
    pub partition: Option<PartitionScheme>,
    pub init: InitChoice,
    /// Exact text the configuration was parsed from.
    pub source: String,
}

impl Experiment {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { eps: self.config.solver.eps, max_sweeps: self.config.solver.max_sweeps }
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config(format!("{}: {}", path.into(), message.into()))
}

/// Reads a configuration from a file, or from an embedded preset when
/// `path` has the form `preset:<name>`.
pub fn load_config(path: &Path) -> Result<Experiment, CliError> {
    let text = match path.to_str().and_then(|p| p.strip_prefix("preset:")) {
        Some(name) => presets::get(name)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?
            .to_string(),
        None => std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
    };
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<Experiment, CliError> {
    let de = toml::Deserializer::new(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner
            .span()
            .map(|s| format!(" (line {})", text[..s.start].lines().count().max(1)))
            .unwrap_or_default();
        if path == "." {
            CliError::Config(format!("{}{line}", inner.message()))
        } else {
            invalid(path, format!("{}{line}", inner.message()))
        }
    })?;
    validate(config, text)
}

fn validate(config: ExperimentConfig, source: &str) -> Result<Experiment, CliError> {
    let mode: Mode = config.mode.into();
    if config.users.is_empty() {
        return Err(invalid("users", "at least one user is required"));
    }
    if !(config.noise_power > 0.0 && config.noise_power.is_finite()) {
        return Err(invalid("noise_power", "must be positive"));
    }
    let mut users = Vec::with_capacity(config.users.len());
    for (i, u) in config.users.iter().enumerate() {
        users.push(build_user(u, mode).map_err(|(field, m)| invalid(format!("users[{i}].{field}"), m))?);
    }
    let n = users.len();

    let t = &config.throughput;
    let (throughput, partition) = match t.kind {
        ThroughputKind::MatchedFilter => (ThroughputSelector::MatchedFilter, None),
        ThroughputKind::Sum => (ThroughputSelector::Sum, None),
        ThroughputKind::SumCapacity => (ThroughputSelector::SumCapacity, None),
        ThroughputKind::SicEndpoint => {
            let m = t.m.ok_or_else(|| invalid("throughput.m", "required for kind = \"sic_endpoint\""))?;
            let count: usize = (1..=n).product();
            if m == 0 || m > count {
                return Err(invalid("throughput.m", format!("must be in 1..={count}")));
            }
            (ThroughputSelector::SicEndpoint(m - 1), None)
        }
        ThroughputKind::SicRandomized => {
            let blocks = t
                .partition
                .as_ref()
                .ok_or_else(|| invalid("throughput.partition", "required for kind = \"sic_randomized\""))?;
            let zero_based = blocks
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|&u| {
                            u.checked_sub(1).ok_or_else(|| invalid("throughput.partition", "user indices start at 1"))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let scheme =
                PartitionScheme::new(zero_based, n).map_err(|e| invalid("throughput.partition", e.to_string()))?;
            (ThroughputSelector::SicRandomized(make_randomization(&scheme)), Some(scheme))
        }
    };
    if t.kind != ThroughputKind::SicEndpoint && t.m.is_some() {
        return Err(invalid("throughput.m", "only used with kind = \"sic_endpoint\""));
    }
    if t.kind != ThroughputKind::SicRandomized && t.partition.is_some() {
        return Err(invalid("throughput.partition", "only used with kind = \"sic_randomized\""));
    }

    let s = &config.solver;
    if !(s.eps > 0.0 && s.eps.is_finite()) {
        return Err(invalid("solver.eps", "must be positive"));
    }
    let init = match s.init.as_str() {
        "phase1" => InitChoice::Phase1,
        "idle" => InitChoice::Idle,
        other => match other.strip_prefix("file:") {
            Some(p) if !p.is_empty() => InitChoice::File(PathBuf::from(p)),
            _ => return Err(invalid("solver.init", "expected \"phase1\", \"idle\" or \"file:<path>\"")),
        },
    };
    if config.sim.horizon == 0 {
        return Err(invalid("sim.horizon", "must be at least 1"));
    }

    let spec = GameSpec::new(users, config.noise_power, throughput, mode)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Experiment { config, spec, partition, init, source: source.to_string() })
}

/// Builds one user; errors name the offending field.
fn build_user(u: &UserConfig, mode: Mode) -> Result<UserModel, (&'static str, String)> {
    if u.k_max == 0 {
        return Err(("k_max", "must be at least 1".into()));
    }
    if u.l_max == 0 {
        return Err(("l_max", "must be at least 1".into()));
    }
    let channel = build_bf_fsmc(u.k_max).map_err(|e| ("k_max", e.to_string()))?;
    match mode {
        Mode::Saturated => {
            for (name, set) in [
                ("q_max", u.q_max.is_some()),
                ("queue_budget", u.queue_budget.is_some()),
                ("arrival_rate", u.arrival_rate.is_some()),
            ] {
                if set {
                    return Err((name, "only used when mode = \"unsaturated\"".into()));
                }
            }
            UserModel::saturated(channel, u.l_max, u.power_budget).map_err(|e| ("power_budget", e.to_string()))
        }
        Mode::Unsaturated => {
            let need = |name: &'static str| (name, "required when mode = \"unsaturated\"".to_string());
            let q_max = u.q_max.ok_or_else(|| need("q_max"))?;
            let queue_budget = u.queue_budget.ok_or_else(|| need("queue_budget"))?;
            let rate = u.arrival_rate.ok_or_else(|| need("arrival_rate"))?;
            if q_max == 0 {
                return Err(("q_max", "must be at least 1".into()));
            }
            let queue = QueueModel::poisson(q_max, rate).map_err(|e| ("arrival_rate", e.to_string()))?;
            UserModel::unsaturated(channel, queue, u.l_max, u.power_budget, queue_budget)
                .map_err(|e| ("queue_budget", e.to_string()))
        }
    }
}
