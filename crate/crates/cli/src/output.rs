//! Result files: per-user summary CSV, full occupation measures, sidecar
//! metadata, and the readers `verify`, `simulate` and `init = "file:..."` use.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use macgame::{CneReport, EquilibriumResult, Game, OccupationMeasure, SimulationReport};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const RESULT_HEADER: &str = "user,rate,power_cost,queue_cost,pure,iterations,converged";
pub const MEASURES_HEADER: &str = "user,state,action,channel,queue,power,admit,z";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

/// One row per user, 1-based, six decimals. `queue_cost` is empty for
/// saturated users.
pub fn result_csv(result: &EquilibriumResult) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for i in 0..result.rates.len() {
        let queue = result.queue_costs.as_ref().map(|q| format!("{:.6}", q[i])).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{},{},{}",
            i + 1,
            result.rates[i],
            result.power_costs[i],
            queue,
            result.pure[i],
            result.iterations,
            result.converged
        );
    }
    out
}

/// Nonzero occupation entries with their decoded state and action. Values
/// use the shortest exact decimal form so that reading them back
/// reproduces the solver's measure bit for bit.
pub fn measures_csv(game: &Game, measures: &[OccupationMeasure]) -> String {
    let mut out = String::from(MEASURES_HEADER);
    out.push('\n');
    for (i, z) in measures.iter().enumerate() {
        let space = game.space(i);
        let na = space.num_actions();
        for (j, &v) in z.as_slice().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (state, action) = space.pair(j);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                j / na,
                j % na,
                state.channel,
                state.queue,
                action.power,
                u8::from(action.admit),
                v
            );
        }
    }
    out
}

pub fn read_measures(path: &Path, game: &Game) -> Result<Vec<OccupationMeasure>, CliError> {
    let path = if path.is_dir() { path.join("measures.csv") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    parse_measures(&text, game).map_err(|m| CliError::Input(format!("{}: {m}", path.display())))
}

pub fn parse_measures(text: &str, game: &Game) -> Result<Vec<OccupationMeasure>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MEASURES_HEADER => {}
        _ => return Err(format!("expected header `{MEASURES_HEADER}`")),
    }
    let n = game.num_users();
    let mut raw: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; game.space(i).num_pairs()]).collect();
    for (lineno, line) in lines {
        let at = |msg: String| format!("line {}: {msg}", lineno + 1);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(at(format!("expected 8 fields, found {}", fields.len())));
        }
        let int = |k: usize, name: &str| -> Result<usize, String> {
            fields[k].parse().map_err(|_| at(format!("{name}: `{}` is not an index", fields[k])))
        };
        let user = int(0, "user")?;
        if user == 0 || user > n {
            return Err(at(format!("user: must be in 1..={n}")));
        }
        let space = game.space(user - 1);
        let (s, a) = (int(1, "state")?, int(2, "action")?);
        if s >= space.num_states() || a >= space.num_actions() {
            return Err(at("state/action: out of range for this user".into()));
        }
        let (state, action) = space.pair(space.pair_index(s, a));
        let decoded = [state.channel, state.queue, action.power, usize::from(action.admit)];
        for (k, (name, want)) in ["channel", "queue", "power", "admit"].iter().zip(decoded).enumerate() {
            if int(3 + k, name)? != want {
                return Err(at(format!("{name}: does not match state {s}, action {a}")));
            }
        }
        let v: f64 = fields[7].parse().map_err(|_| at(format!("z: `{}` is not a number", fields[7])))?;
        raw[user - 1][space.pair_index(s, a)] += v;
    }
    raw.into_iter()
        .enumerate()
        .map(|(i, z)| {
            OccupationMeasure::validated(z, game.polytope(i), 1e-8).map_err(|e| format!("user {}: {e}", i + 1))
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub config_sha256: String,
    pub solver_version: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub eps: f64,
    pub max_gain: f64,
}

impl Meta {
    pub fn new(source: &str, result: &EquilibriumResult) -> Self {
        Meta {
            config_sha256: sha256_hex(source),
            solver_version: env!("CARGO_PKG_VERSION"),
            iterations: result.iterations,
            converged: result.converged,
            eps: result.epsilon,
            max_gain: result.gains.iter().copied().fold(0.0, f64::max),
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn verify_csv(report: &CneReport) -> String {
    let mut out = String::from("user,value,best_value,gain,within_eps\n");
    for i in 0..report.values.len() {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.3e},{}",
            i + 1,
            report.values[i],
            report.best_values[i],
            report.gains[i],
            report.gains[i] <= report.epsilon
        );
    }
    out
}

pub fn simulation_csv(report: &SimulationReport) -> String {
    let states = report.channel_occupancy.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::from("user,rate,power_cost,queue_cost");
    for k in 0..states {
        let _ = write!(out, ",occupancy_k{k}");
    }
    out.push('\n');
    for i in 0..report.rates.len() {
        let queue = report.queue_costs.as_ref().map(|q| format!("{:.6}", q[i])).unwrap_or_default();
        let _ = write!(out, "{},{:.6},{:.6},{}", i + 1, report.rates[i], report.power_costs[i], queue);
        for k in 0..states {
            let v = report.channel_occupancy[i].get(k).copied().unwrap_or(0.0);
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use macgame::oracle::tiny_instance;
    use macgame::{algorithm1, Init, SolverOptions};

    fn solved() -> (Game, EquilibriumResult) {
        let game = Game::new(tiny_instance()).unwrap();
        let res = algorithm1(&game, &Init::Phase1, &SolverOptions::default()).unwrap();
        (game, res)
    }

    #[test]
    fn measures_round_trip_exactly() {
        let (game, res) = solved();
        let text = measures_csv(&game, &res.measures);
        let back = parse_measures(&text, &game).unwrap();
        assert_eq!(back, res.measures);
    }

    #[test]
    fn measures_schema_errors_name_the_line() {
        let (game, res) = solved();
        let text = measures_csv(&game, &res.measures);
        let broken = text.replacen("\n1,", "\n3,", 1);
        assert!(parse_measures(&broken, &game).unwrap_err().starts_with("line 2: user"));
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut f: Vec<String> = lines[1].split(',').map(String::from).collect();
        f[5] = "9".into();
        lines[1] = f.join(",");
        let err = parse_measures(&lines.join("\n"), &game).unwrap_err();
        assert!(err.contains("power: does not match"), "{err}");
        assert!(parse_measures("z\n", &game).unwrap_err().contains("header"));
    }

    #[test]
    fn result_csv_layout() {
        let (_, res) = solved();
        let text = result_csv(&res);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULT_HEADER);
        assert_eq!(lines.len(), 3);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "1");
        assert_eq!(fields[1].split('.').nth(1).unwrap().len(), 6);
        assert_eq!(fields[3], "");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
