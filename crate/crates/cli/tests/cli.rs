use std::path::Path;
use std::process::{Command, Output};

use macgame_cli::presets;

fn macgame(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macgame")).args(args).current_dir(cwd).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a preset with `edit` applied and returns its path.
fn config_from_preset(dir: &Path, name: &str, edit: impl Fn(&str) -> String) -> String {
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, edit(presets::get(name).unwrap())).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = macgame(&["solve", "--config", "preset:table2_saturated_in", "--out", "run"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let result = std::fs::read_to_string(d.join("run/result.csv")).unwrap();
    assert_eq!(result.lines().next().unwrap(), "user,rate,power_cost,queue_cost,pure,iterations,converged");
    for line in result.lines().skip(1) {
        let rate: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((rate - 0.5263).abs() <= 5e-3, "{line}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("run/meta.json")).unwrap()).unwrap();
    assert_eq!(meta["converged"], true);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);

    let o = macgame(&["verify", "--config", "preset:table2_saturated_in", "--result", "run/measures.csv"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = stdout(&o);
    assert_eq!(report.lines().count(), 4);
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")), "{report}");
}

#[test]
fn zero_sweeps_exits_not_converged_but_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = config_from_preset(d, "table2_saturated_s", |t| t.replace("max_sweeps = 500", "max_sweeps = 0"));
    let o = macgame(&["solve", "--config", &cfg, "--out", "run"], d);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let result = std::fs::read_to_string(d.join("run/result.csv")).unwrap();
    assert!(result.lines().skip(1).all(|l| l.ends_with(",0,false")), "{result}");
}

#[test]
fn config_errors_exit_3_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = config_from_preset(d, "table2_saturated_in", |t| t.replace("noise_power = 1.0\n", ""));
    let o = macgame(&["solve", "--config", &cfg], d);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("noise_power"), "{}", stderr(&o));

    let cfg = config_from_preset(d, "table2_unsaturated_in", |t| t.replacen("arrival_rate = 0.3\n", "", 1));
    let o = macgame(&["solve", "--config", &cfg], d);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("users[0].arrival_rate"), "{}", stderr(&o));

    let o = macgame(&["solve", "--config", "preset:nope"], d);
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&macgame(&["solve", "--config", "preset:table2_saturated_a42", "--out", "run"], d)), 0);
    let args = ["simulate", "--config", "preset:table2_saturated_a42", "--result", "run", "--horizon", "20000", "--seed", "11"];
    let a = macgame(&args, d);
    let b = macgame(&args, d);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let mut other = args;
    other[8] = "12";
    assert_ne!(macgame(&other, d).stdout, a.stdout);
    assert!(stdout(&a).starts_with("user,rate,power_cost,queue_cost,occupancy_k0"));
}

#[test]
fn warm_start_from_solved_measures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&macgame(&["solve", "--config", "preset:table2_unsaturated_a11", "--out", "first"], d)), 0);
    let cfg = config_from_preset(d, "table2_unsaturated_a11", |t| {
        t.replace("init = \"phase1\"", "init = \"file:first/measures.csv\"")
    });
    let o = macgame(&["solve", "--config", &cfg, "--out", "second"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = std::fs::read_to_string(d.join("first/measures.csv")).unwrap();
    let second = std::fs::read_to_string(d.join("second/measures.csv")).unwrap();
    assert_eq!(first, second);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("second/meta.json")).unwrap()).unwrap();
    // one confirming sweep per partition block
    assert_eq!(meta["iterations"], 3);
}

#[test]
fn table2_reproduces_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = macgame(&["table2", "--out", "t2"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("t2/table2.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let rows: Vec<Vec<&str>> = records.iter().map(|r| r.iter().collect()).collect();
    // fourteen games, two listed equilibria for one of them
    assert_eq!(rows.len(), 15);
    let a21: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] == "alpha(2,1)" && r[1] == "saturated").collect();
    assert_eq!(a21.len(), 2);
    let best_a21 = a21.iter().map(|r| r[4].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(best_a21 <= 5e-3);
    for r in rows.iter().filter(|r| !(r[0] == "alpha(2,1)" && r[1] == "saturated")) {
        assert!(r[4].parse::<f64>().unwrap() <= 5e-3, "{r:?}");
        assert_eq!(r[6], "true");
    }
    for p in presets::PRESETS.iter() {
        assert!(d.join("t2").join(p.name).join("result.csv").exists(), "{}", p.name);
    }
}
