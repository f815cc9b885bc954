use macgame::experiment::benchmark_user;
use macgame::lp::build_polytope;
use macgame::model::{queue_kernel, user_kernel};
use macgame::oracle::{enumerate_vertices, oracle_best_response};
use macgame::throughput::{rate_matched_filter, rate_randomized, rate_sic_endpoint, rate_sum_capacity};
use macgame::*;
use proptest::prelude::*;

fn benchmark_spec(throughput: ThroughputSelector) -> GameSpec {
    GameSpec::new(vec![benchmark_user(Mode::Saturated); 3], 1.0, throughput, Mode::Saturated).unwrap()
}

/// SIC rate computed from scratch: users earlier in the decoding order
/// interfere with user `i`.
fn sic_by_hand(order: &[usize], i: usize, s: &[f64]) -> f64 {
    if s[i] == 0.0 {
        return 0.0;
    }
    let pos = order.iter().position(|&u| u == i).unwrap();
    let interference: f64 = order[..pos].iter().map(|&u| s[u]).sum();
    (1.0 + s[i] / (1.0 + interference)).log2()
}

fn all_orders3() -> Vec<Vec<usize>> {
    vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
}

fn signal(k: usize, l: usize) -> f64 {
    k as f64 / 3.0 * l as f64
}

fn mass_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("all zero", |w| {
        let t: f64 = w.iter().sum();
        (t > 1e-6).then(|| w.iter().map(|v| v / t).collect())
    })
}

fn grid_point() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (prop::collection::vec(0usize..4, 3), prop::collection::vec(0usize..6, 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn randomized_rates_sum_to_capacity(mass in mass_strategy(6), (k, l) in grid_point()) {
        let spec = benchmark_spec(ThroughputSelector::MatchedFilter);
        let alpha = DecodingRandomization::new(mass.clone()).unwrap();
        let total: f64 = (0..3).map(|i| rate_randomized(&spec, &alpha, i, &k, &l).unwrap()).sum();
        let s: Vec<f64> = (0..3).map(|i| signal(k[i], l[i])).collect();
        let capacity = (1.0 + s.iter().sum::<f64>()).log2();
        prop_assert!((total - capacity).abs() <= 1e-12);
        prop_assert!((rate_sum_capacity(&spec, &k, &l) - capacity).abs() <= 1e-12);
        for i in 0..3 {
            let by_hand: f64 = all_orders3().iter().zip(&mass).map(|(o, w)| w * sic_by_hand(o, i, &s)).sum();
            prop_assert!((rate_randomized(&spec, &alpha, i, &k, &l).unwrap() - by_hand).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_signal_earns_nothing(mass in mass_strategy(6), (mut k, mut l) in grid_point(), who in 0usize..3, zero_channel in any::<bool>()) {
        if zero_channel { k[who] = 0 } else { l[who] = 0 }
        let spec = benchmark_spec(ThroughputSelector::MatchedFilter);
        let alpha = DecodingRandomization::new(mass).unwrap();
        prop_assert_eq!(rate_matched_filter(&spec, who, &k, &l), 0.0);
        prop_assert_eq!(rate_randomized(&spec, &alpha, who, &k, &l).unwrap(), 0.0);
        for m in 0..6 {
            prop_assert_eq!(rate_sic_endpoint(&spec, m, who, &k, &l).unwrap(), 0.0);
        }
    }

    #[test]
    fn support_size_is_product_of_block_factorials(
        order in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(),
        cuts in prop::collection::vec(any::<bool>(), 4),
    ) {
        let mut blocks = vec![vec![order[0]]];
        for (u, cut) in order[1..].iter().zip(&cuts) {
            if *cut { blocks.push(vec![*u]) } else { blocks.last_mut().unwrap().push(*u) }
        }
        let fact = |n: usize| (1..=n).product::<usize>();
        let expected: usize = blocks.iter().map(|b| fact(b.len())).product();
        let partition = PartitionScheme::new(blocks.clone(), 5).unwrap();
        let support = support_set(&partition);
        prop_assert_eq!(support.len(), expected);
        // every order in the support lists the blocks in sequence
        for &m in &support {
            let perm = permutation_by_index(5, m).unwrap();
            let mut at = 0;
            for b in &blocks {
                let mut seg = perm[at..at + b.len()].to_vec();
                seg.sort_unstable();
                let mut want = b.clone();
                want.sort_unstable();
                prop_assert_eq!(seg, want);
                at += b.len();
            }
        }
        let alpha = make_randomization(&partition);
        prop_assert!((alpha.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(alpha.mass().iter().filter(|&&w| w > 0.0).count(), expected);
    }

    #[test]
    fn evaluate_is_affine_in_the_measure(r in prop::collection::vec(-1.0f64..1.0, 24), t in 0.0f64..1.0) {
        let p = build_polytope(&benchmark_user(Mode::Saturated));
        let a = OccupationMeasure::new(simplex_solve(&p.lp(&r)).unwrap().x).unwrap();
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let b = OccupationMeasure::new(simplex_solve(&p.lp(&neg)).unwrap().x).unwrap();
        let (ea, eb, em) = (evaluate(&a, &r, &p), evaluate(&b, &r, &p), evaluate(&a.mix(&b, t), &r, &p));
        prop_assert!((em.rate - ((1.0 - t) * ea.rate + t * eb.rate)).abs() < 1e-12);
        prop_assert!((em.power_cost - ((1.0 - t) * ea.power_cost + t * eb.power_cost)).abs() < 1e-12);
    }

    #[test]
    fn simplex_output_is_a_feasible_optimal_vertex(r in prop::collection::vec(-1.0f64..1.0, 24)) {
        let p = build_polytope(&benchmark_user(Mode::Saturated));
        let sol = simplex_solve(&p.lp(&r)).unwrap();
        prop_assert!(p.violation(&sol.x) <= 1e-9);
        prop_assert!(sol.reduced_costs.iter().all(|&d| d >= -1e-9));
        prop_assert!(is_vertex(&OccupationMeasure::new(sol.x).unwrap(), &p));
    }

    #[test]
    fn simplex_agrees_with_vertex_enumeration(
        l_max in 1usize..3,
        budget in 0.05f64..2.5,
        r in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let user = UserModel::saturated(build_bf_fsmc(1).unwrap(), l_max, budget).unwrap();
        let p = build_polytope(&user);
        prop_assume!(p.num_vars() + p.costs.len() <= 12);
        let reward = &r[..p.num_vars()];
        let vs = enumerate_vertices(&p).unwrap();
        let best = oracle_best_response(reward, &vs).unwrap();
        let sol = simplex_solve(&p.lp(reward)).unwrap();
        prop_assert!((sol.value - best.value).abs() <= 1e-9);
        prop_assert!(vs.contains(&sol.x, 1e-9));
    }

    #[test]
    fn is_vertex_matches_enumeration(
        l_max in 1usize..3,
        budget in 0.05f64..2.5,
        weights in mass_strategy(8),
    ) {
        let user = UserModel::saturated(build_bf_fsmc(1).unwrap(), l_max, budget).unwrap();
        let p = build_polytope(&user);
        let vs = enumerate_vertices(&p).unwrap();
        for v in &vs.vertices {
            prop_assert!(is_vertex(&OccupationMeasure::new(v.clone()).unwrap(), &p));
        }
        // a point that is not within 1e-9 of any vertex must be rejected
        let mut z = vec![0.0; p.num_vars()];
        for (v, w) in vs.vertices.iter().zip(&weights) {
            z.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
        }
        prop_assume!(z.iter().sum::<f64>() > 1e-6);
        let z = OccupationMeasure::new(z).unwrap();
        prop_assert_eq!(is_vertex(&z, &p), vs.contains(z.as_slice(), 1e-9));
    }
}

#[test]
fn endpoint_rates_telescope_on_the_full_grid() {
    let spec = benchmark_spec(ThroughputSelector::MatchedFilter);
    for code in 0..(4usize.pow(3) * 6usize.pow(3)) {
        let k = vec![code % 4, code / 4 % 4, code / 16 % 4];
        let rest = code / 64;
        let l = vec![rest % 6, rest / 6 % 6, rest / 36];
        let capacity = rate_sum_capacity(&spec, &k, &l);
        for m in 0..6 {
            let total: f64 = (0..3).map(|i| rate_sic_endpoint(&spec, m, i, &k, &l).unwrap()).sum();
            assert!((total - capacity).abs() <= 1e-12, "k={k:?} l={l:?} m={m}");
        }
    }
}

#[test]
fn kernels_on_the_benchmark_instance() {
    let user = benchmark_user(Mode::Unsaturated);
    let space = user.space();
    let channel = user.channel.transition();
    let queue = user.queue.as_ref().unwrap();
    let nq = queue.q_max() + 1;
    for &action in &space.actions {
        let qk = queue_kernel(queue, action);
        let uk = user_kernel(&user, action);
        for (q, row) in qk.iter().enumerate() {
            assert_eq!(row.len(), nq);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            if !action.admit {
                assert!(row[q + 1..].iter().all(|&v| v == 0.0), "queue grew without admission");
            }
        }
        for (x, row) in uk.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for (y, &v) in row.iter().enumerate() {
                let expected = channel[x / nq][y / nq] * qk[x % nq][y % nq];
                assert_eq!(v, expected);
            }
        }
    }
}

#[test]
fn iterates_stay_feasible_and_converged_means_verified() {
    let spec = experiment::BenchmarkGame::Randomized(1, 1).spec(Mode::Saturated).unwrap();
    let game = Game::new(spec).unwrap();
    for sweeps in 0..6 {
        let opts = SolverOptions { max_sweeps: sweeps, ..SolverOptions::default() };
        let res = algorithm1(&game, &Init::Phase1, &opts).unwrap();
        for (i, z) in res.measures.iter().enumerate() {
            assert!(game.polytope(i).violation(z.as_slice()) <= 1e-9);
        }
        if res.converged {
            let report = verify_cne(&game, &res.measures, opts.eps).unwrap();
            assert!(report.gains.iter().all(|&g| g <= opts.eps));
        }
    }
}

#[test]
fn best_response_never_regresses() {
    let spec = experiment::BenchmarkGame::MatchedFilter.spec(Mode::Saturated).unwrap();
    let game = Game::new(spec).unwrap();
    let profile = initial_profile(&game, &Init::Phase1).unwrap();
    for i in 0..3 {
        let reward = reward_vector(&game, i, &profile);
        let current: f64 = reward.iter().zip(profile[i].as_slice()).map(|(a, b)| a * b).sum();
        let (_, value) = best_response(&game, i, &profile).unwrap();
        assert!(value >= current - 1e-12);
    }
}
