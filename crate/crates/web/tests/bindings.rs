use macgame_web::{parse_blocks, parse_game, randomization_json, rate_curve_json, solve_json};
use serde_json::Value;

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn game_names_round_trip() {
    for name in ["in", "s", "sc", "alpha(1,1)", "alpha(4,2)", "alpha(5,1)"] {
        assert_eq!(parse_game(name).unwrap().name(), name);
    }
    assert!(parse_game("alpha(6,1)").is_err());
    assert!(parse_game("beta").is_err());
}

#[test]
fn randomization_of_two_blocks() {
    let v = json(&randomization_json("1 | 2 3", 3).unwrap());
    assert_eq!(v["blocks"], json("[[1],[2,3]]"));
    let orders = v["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    for o in orders {
        assert_eq!(o["order"][0], 1);
        assert!((o["mass"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    }
    assert!((v["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn randomization_rejects_bad_blocks() {
    assert!(parse_blocks("1 | 1 2", 3).is_err());
    assert!(parse_blocks("1 | 2", 3).is_err());
    assert!(randomization_json("0 | 1 2", 3).is_err());
    assert!(randomization_json("x", 3).is_err());
}

#[test]
fn solve_matches_listed_equilibrium() {
    let v = json(&solve_json("in", "saturated", 2.0, 5.0).unwrap());
    assert_eq!(v["converged"], true);
    let reference = v["reference"][0].as_array().unwrap();
    for (r, x) in reference.iter().zip(v["rates"].as_array().unwrap()) {
        assert!((r.as_f64().unwrap() - x.as_f64().unwrap()).abs() <= 5e-3);
    }
}

#[test]
fn solve_with_other_budget_has_no_reference_and_more_power_helps() {
    let low = json(&solve_json("s", "saturated", 1.0, 5.0).unwrap());
    let high = json(&solve_json("s", "saturated", 2.0, 5.0).unwrap());
    assert_eq!(low["reference"], json("[]"));
    assert!(high["rates"][0].as_f64().unwrap() >= low["rates"][0].as_f64().unwrap());
    for c in low["power_costs"].as_array().unwrap() {
        assert!(c.as_f64().unwrap() <= 1.0 + 1e-9);
    }
    assert!(solve_json("s", "saturated", 0.0, 5.0).is_err());
    assert!(solve_json("s", "bursty", 1.0, 5.0).is_err());
}

#[test]
fn rate_curve_by_hand() {
    // channel gain at the top state is 1, so signal equals the level
    let v = json(&rate_curve_json("in", 3, 1).unwrap());
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 6);
    assert_eq!(points[0]["rates"][0], 0.0);
    let l = 4.0_f64;
    let own = points[4]["rates"][0].as_f64().unwrap();
    assert!((own - (1.0 + l / (1.0 + 2.0)).log2()).abs() < 1e-12);
    let other = points[4]["rates"][1].as_f64().unwrap();
    assert!((other - (1.0 + 1.0 / (1.0 + l + 1.0)).log2()).abs() < 1e-12);

    let sc = json(&rate_curve_json("sc", 3, 1).unwrap());
    let total = sc["points"][4]["rates"][0].as_f64().unwrap();
    assert!((total - (1.0 + l + 2.0_f64).log2()).abs() < 1e-12);
    assert!(rate_curve_json("in", 9, 1).is_err());
}
