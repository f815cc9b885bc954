use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use macgame::experiment::reference_table;
use macgame::{
    algorithm1, algorithm2, occupation_to_policy, simulate, verify_cne, CneReport, EquilibriumResult, Game, Init,
    SimulationReport,
};
use rayon::prelude::*;

use crate::config::{parse_config, Experiment, InitChoice};
use crate::error::CliError;
use crate::output::{measures_csv, read_measures, result_csv, write_atomic, Meta};
use crate::presets::{Preset, PRESETS};

pub fn solve_experiment(exp: &Experiment) -> Result<(Game, EquilibriumResult), CliError> {
    let game = Game::new(exp.spec.clone())?;
    let init = match &exp.init {
        InitChoice::Phase1 => Init::Phase1,
        InitChoice::Idle => Init::Idle,
        InitChoice::File(path) => Init::Measures(read_measures(path, &game)?),
    };
    let opts = exp.options();
    let result = match &exp.partition {
        Some(p) => algorithm2(&game, p, &init, &opts)?,
        None => algorithm1(&game, &init, &opts)?,
    };
    Ok((game, result))
}

/// Writes `result.csv`, `measures.csv` and `meta.json` into `dir`.
pub fn write_run(dir: &Path, exp: &Experiment, game: &Game, result: &EquilibriumResult) -> Result<(), CliError> {
    write_atomic(&dir.join("result.csv"), &result_csv(result))?;
    write_atomic(&dir.join("measures.csv"), &measures_csv(game, &result.measures))?;
    let meta = serde_json::to_string_pretty(&Meta::new(&exp.source, result)).expect("plain struct");
    write_atomic(&dir.join("meta.json"), &(meta + "\n"))
}

pub struct SolveOutcome {
    pub dir: PathBuf,
    pub result: EquilibriumResult,
}

pub fn run_solve(exp: &Experiment, out: Option<&Path>) -> Result<SolveOutcome, CliError> {
    let (game, result) = solve_experiment(exp)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| exp.config.output.path.clone());
    write_run(&dir, exp, &game, &result)?;
    Ok(SolveOutcome { dir, result })
}

pub fn render_result(result: &EquilibriumResult) -> String {
    let mut out = String::from("user        rate  power_cost  queue_cost  pure\n");
    for i in 0..result.rates.len() {
        let queue = result.queue_costs.as_ref().map(|q| format!("{:>10.6}", q[i])).unwrap_or(format!("{:>10}", "-"));
        let _ = writeln!(
            out,
            "{:>4}  {:>10.6}  {:>10.6}  {queue}  {}",
            i + 1,
            result.rates[i],
            result.power_costs[i],
            if result.pure[i] { "yes" } else { "no" }
        );
    }
    let gain = result.gains.iter().copied().fold(0.0, f64::max);
    let _ = writeln!(
        out,
        "{} after {} sweeps; largest deviation gain {gain:.2e}",
        if result.converged { "converged" } else { "NOT converged" },
        result.iterations
    );
    out
}

pub fn run_verify(exp: &Experiment, measures: &Path) -> Result<CneReport, CliError> {
    let game = Game::new(exp.spec.clone())?;
    let profile = read_measures(measures, &game)?;
    Ok(verify_cne(&game, &profile, exp.config.solver.eps)?)
}

pub fn run_simulate(exp: &Experiment, measures: &Path, horizon: u64, seed: u64) -> Result<SimulationReport, CliError> {
    let game = Game::new(exp.spec.clone())?;
    let profile = read_measures(measures, &game)?;
    let policies: Vec<_> = profile.iter().enumerate().map(|(i, z)| occupation_to_policy(z, game.space(i))).collect();
    Ok(simulate(&game, &policies, horizon, seed)?)
}

/// One line of the reproduced throughput table: a computed equilibrium
/// against one listed reference equilibrium.
#[derive(Debug, Clone)]
pub struct Table2Line {
    pub preset: &'static str,
    pub game: String,
    pub mode: &'static str,
    pub reference: Vec<f64>,
    pub rates: Vec<f64>,
    /// Largest per-user gap in user order.
    pub delta: f64,
    /// Largest gap after sorting both sides.
    pub multiset_delta: f64,
    pub converged: bool,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn solve_preset(p: &'static Preset, out: &Path) -> Result<(EquilibriumResult, &'static Preset), CliError> {
    let exp = parse_config(p.text)?;
    let (game, result) = solve_experiment(&exp)?;
    write_run(&out.join(p.name), &exp, &game, &result)?;
    Ok((result, p))
}

pub fn run_table2(out: &Path) -> Result<Vec<Table2Line>, CliError> {
    let solved: Vec<(EquilibriumResult, &'static Preset)> =
        PRESETS.par_iter().map(|p| solve_preset(p, out)).collect::<Result<_, _>>()?;
    let references = reference_table();
    let mut lines = Vec::new();
    for (result, preset) in solved {
        let row = references
            .iter()
            .find(|r| r.game == preset.game && r.mode == preset.mode)
            .expect("every preset has a reference row");
        for eq in &row.equilibria {
            lines.push(Table2Line {
                preset: preset.name,
                game: preset.game.name(),
                mode: mode_name(preset.mode),
                reference: eq.to_vec(),
                rates: result.rates.clone(),
                delta: max_gap(eq, &result.rates),
                multiset_delta: max_gap(&sorted(eq), &sorted(&result.rates)),
                converged: result.converged,
            });
        }
    }
    write_atomic(&out.join("table2.csv"), &table2_csv(&lines))?;
    Ok(lines)
}

fn mode_name(mode: macgame::Mode) -> &'static str {
    match mode {
        macgame::Mode::Saturated => "saturated",
        macgame::Mode::Unsaturated => "unsaturated",
    }
}

fn join(v: &[f64], digits: usize) -> String {
    v.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join(" ")
}

pub fn table2_csv(lines: &[Table2Line]) -> String {
    let mut out = String::from("game,mode,reference,rates,max_abs_delta,multiset_delta,converged\n");
    for l in lines {
        let _ = writeln!(
            out,
            "\"{}\",{},{},{},{:.6},{:.6},{}",
            l.game,
            l.mode,
            join(&l.reference, 4),
            join(&l.rates, 6),
            l.delta,
            l.multiset_delta,
            l.converged
        );
    }
    out
}

pub fn render_table2(lines: &[Table2Line]) -> String {
    let mut out = format!(
        "{:<12} {:<12} {:<22} {:<22} {:>9} {:>9}\n",
        "game", "mode", "reference", "computed", "|delta|", "multiset"
    );
    for l in lines {
        let _ = writeln!(
            out,
            "{:<12} {:<12} {:<22} {:<22} {:>9.4} {:>9.4}{}",
            l.game,
            l.mode,
            join(&l.reference, 4),
            join(&l.rates, 4),
            l.delta,
            l.multiset_delta,
            if l.converged { "" } else { "  (not converged)" }
        );
    }
    out
}
