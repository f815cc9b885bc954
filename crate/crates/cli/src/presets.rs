//! The fourteen benchmark configurations, embedded at build time.

use macgame::experiment::BenchmarkGame;
use macgame::Mode;

pub struct Preset {
    pub name: &'static str,
    pub game: BenchmarkGame,
    pub mode: Mode,
    pub text: &'static str,
}

pub static PRESETS: [Preset; 14] = [
    Preset { name: "table2_saturated_in", game: BenchmarkGame::MatchedFilter, mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_in.toml") },
    Preset { name: "table2_saturated_a11", game: BenchmarkGame::Randomized(1, 1), mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_a11.toml") },
    Preset { name: "table2_saturated_a42", game: BenchmarkGame::Randomized(4, 2), mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_a42.toml") },
    Preset { name: "table2_saturated_a51", game: BenchmarkGame::Randomized(5, 1), mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_a51.toml") },
    Preset { name: "table2_saturated_a21", game: BenchmarkGame::Randomized(2, 1), mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_a21.toml") },
    Preset { name: "table2_saturated_s", game: BenchmarkGame::Sum, mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_s.toml") },
    Preset { name: "table2_saturated_sc", game: BenchmarkGame::SumCapacity, mode: Mode::Saturated, text: include_str!("../presets/table2_saturated_sc.toml") },
    Preset { name: "table2_unsaturated_in", game: BenchmarkGame::MatchedFilter, mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_in.toml") },
    Preset { name: "table2_unsaturated_a11", game: BenchmarkGame::Randomized(1, 1), mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_a11.toml") },
    Preset { name: "table2_unsaturated_a42", game: BenchmarkGame::Randomized(4, 2), mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_a42.toml") },
    Preset { name: "table2_unsaturated_a51", game: BenchmarkGame::Randomized(5, 1), mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_a51.toml") },
    Preset { name: "table2_unsaturated_a21", game: BenchmarkGame::Randomized(2, 1), mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_a21.toml") },
    Preset { name: "table2_unsaturated_s", game: BenchmarkGame::Sum, mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_s.toml") },
    Preset { name: "table2_unsaturated_sc", game: BenchmarkGame::SumCapacity, mode: Mode::Unsaturated, text: include_str!("../presets/table2_unsaturated_sc.toml") },
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.name == name).map(|p| p.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_matches_its_benchmark_game() {
        for p in &PRESETS {
            let e = parse_config(p.text).unwrap_or_else(|err| panic!("{}: {err}", p.name));
            let expected = p.game.spec(p.mode).unwrap();
            assert_eq!(e.spec.throughput, expected.throughput, "{}", p.name);
            assert_eq!(e.spec.mode, p.mode);
            assert_eq!(e.spec.users, expected.users, "{}", p.name);
            assert_eq!(e.partition, p.game.partition().unwrap(), "{}", p.name);
        }
    }

    #[test]
    fn saturated_matched_filter_preset() {
        let e = parse_config(get("table2_saturated_in").unwrap()).unwrap();
        assert_eq!(e.spec.num_users(), 3);
        for u in &e.spec.users {
            assert_eq!((u.channel.k_max(), u.l_max(), u.power_budget), (3, 5, 2.0));
        }
        assert_eq!(e.spec.noise_power, 1.0);
    }

    #[test]
    fn unsaturated_preset_adds_queue() {
        let e = parse_config(get("table2_unsaturated_in").unwrap()).unwrap();
        for u in &e.spec.users {
            let q = u.queue.as_ref().unwrap();
            assert_eq!((q.q_max(), q.arrival_rate(), u.queue_budget), (10, 0.3, Some(5.0)));
        }
    }
}
