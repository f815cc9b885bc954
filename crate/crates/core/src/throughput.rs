//! Throughput functions of the multiple-access channel, SIC decoding
//! orders, the partition-induced decoding randomizations, and an exact
//! potential test for finite games.
//!
//! Decoding orders are permutations `sigma(m)` of the users in
//! lexicographic order. In `sigma(m)` the last user is decoded first and
//! cancelled, so user `i` sees interference only from the users that
//! precede it in the tuple.

use num_rational::Ratio;

use crate::model::GameSpec;
use crate::{Error, Result};

const MAX_SIC_USERS: usize = 8;
const POTENTIAL_TOL: f64 = 1e-9;

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// The `m`-th permutation (0-based, lexicographic) of `0..n_users`.
pub fn permutation_by_index(n_users: usize, m: usize) -> Result<Vec<usize>> {
    let total = factorial(n_users);
    if m >= total {
        return Err(Error::OutOfRange { index: m, limit: total });
    }
    let mut pool: Vec<usize> = (0..n_users).collect();
    let mut rest = m;
    let mut out = Vec::with_capacity(n_users);
    for pos in (0..n_users).rev() {
        let block = factorial(pos);
        out.push(pool.remove(rest / block));
        rest %= block;
    }
    Ok(out)
}

/// Inverse of [`permutation_by_index`].
pub fn permutation_index(perm: &[usize]) -> usize {
    let mut pool: Vec<usize> = {
        let mut p = perm.to_vec();
        p.sort_unstable();
        p
    };
    let mut m = 0;
    for (pos, u) in perm.iter().enumerate() {
        let rank = pool.iter().position(|v| v == u).expect("permutation element");
        pool.remove(rank);
        m += rank * factorial(perm.len() - pos - 1);
    }
    m
}

/// Ordered partition of the users into non-empty disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionScheme {
    blocks: Vec<Vec<usize>>,
}

impl PartitionScheme {
    pub fn new(blocks: Vec<Vec<usize>>, n_users: usize) -> Result<Self> {
        let mut seen = vec![false; n_users];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidArgument("partition block is empty".into()));
            }
            for &u in block {
                if u >= n_users {
                    return Err(Error::OutOfRange { index: u, limit: n_users });
                }
                if std::mem::replace(&mut seen[u], true) {
                    return Err(Error::InvalidArgument(format!("user {u} appears twice")));
                }
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("user {u} is not in any block")));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_users(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// The same partition irrespective of block order and element order.
    pub fn same_sets(&self, other: &PartitionScheme) -> bool {
        let norm = |p: &PartitionScheme| {
            let mut b: Vec<Vec<usize>> = p
                .blocks
                .iter()
                .map(|blk| {
                    let mut s = blk.clone();
                    s.sort_unstable();
                    s
                })
                .collect();
            b.sort();
            b
        };
        norm(self) == norm(other)
    }
}

/// Decoding orders consistent with the ordered partition: concatenations of
/// within-block permutations, in block order. Sorted ascending.
pub fn support_set(partition: &PartitionScheme) -> Vec<usize> {
    let mut orders: Vec<Vec<usize>> = vec![Vec::new()];
    for block in partition.blocks() {
        let k = block.len();
        let members = block_sorted(block);
        let mut next = Vec::with_capacity(orders.len() * factorial(k));
        for prefix in &orders {
            for m in 0..factorial(k) {
                let local = permutation_by_index(k, m).expect("in range");
                let mut full = prefix.clone();
                full.extend(local.iter().map(|&j| members[j]));
                next.push(full);
            }
        }
        orders = next;
    }
    let mut out: Vec<usize> = orders.iter().map(|o| permutation_index(o)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn block_sorted(block: &[usize]) -> Vec<usize> {
    let mut b = block.to_vec();
    b.sort_unstable();
    b
}

/// Probability mass over the `N!` decoding orders.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingRandomization {
    mass: Vec<f64>,
    provenance: Option<PartitionScheme>,
}

impl DecodingRandomization {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_SIC_USERS).any(|n| factorial(n) == mass.len()) {
            return Err(Error::InvalidArgument(format!("{} is not N! for N <= 8", mass.len())));
        }
        if mass.iter().any(|&p| !(p >= 0.0)) || (mass.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("decoding mass is not a probability vector".into()));
        }
        Ok(Self { mass, provenance: None })
    }

    /// Point mass on the decoding order `m`.
    pub fn point(n_users: usize, m: usize) -> Result<Self> {
        let total = factorial(n_users);
        if m >= total {
            return Err(Error::OutOfRange { index: m, limit: total });
        }
        let mut mass = vec![0.0; total];
        mass[m] = 1.0;
        Ok(Self { mass, provenance: None })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn provenance(&self) -> Option<&PartitionScheme> {
        self.provenance.as_ref()
    }

    pub fn num_users(&self) -> usize {
        (1..=MAX_SIC_USERS).find(|&n| factorial(n) == self.mass.len()).unwrap_or(0)
    }

    /// Exact rational masses, available for partition-generated randomizations.
    pub fn exact_mass(&self) -> Option<Vec<Ratio<u64>>> {
        let p = self.provenance.as_ref()?;
        let denom: u64 = p.blocks().iter().map(|b| factorial(b.len()) as u64).product();
        let support = support_set(p);
        Some(
            (0..self.mass.len())
                .map(|m| {
                    if support.binary_search(&m).is_ok() {
                        Ratio::new(1, denom)
                    } else {
                        Ratio::from_integer(0)
                    }
                })
                .collect(),
        )
    }
}

/// Uniform mass `1 / prod |P_j|!` on the support set of the ordered partition.
pub fn make_randomization(partition: &PartitionScheme) -> DecodingRandomization {
    let n = partition.num_users();
    let denom: usize = partition.blocks().iter().map(|b| factorial(b.len())).product();
    let mut mass = vec![0.0; factorial(n)];
    for m in support_set(partition) {
        mass[m] = 1.0 / denom as f64;
    }
    DecodingRandomization { mass, provenance: Some(partition.clone()) }
}

/// One row of the table of partition-induced randomizations for three users.
#[derive(Debug, Clone)]
pub struct NamedPartition {
    /// `(p_a, p_e)`: partition label and block-permutation label, 1-based.
    pub label: (usize, usize),
    pub scheme: PartitionScheme,
}

/// The thirteen ordered partitions of three users, labelled as in the
/// reference table (users 0-based here).
pub fn three_user_partitions() -> Vec<NamedPartition> {
    let rows: [((usize, usize), &[&[usize]]); 13] = [
        ((1, 1), &[&[0], &[1], &[2]]),
        ((1, 2), &[&[0], &[2], &[1]]),
        ((1, 3), &[&[1], &[0], &[2]]),
        ((1, 4), &[&[1], &[2], &[0]]),
        ((1, 5), &[&[2], &[0], &[1]]),
        ((1, 6), &[&[2], &[1], &[0]]),
        ((2, 1), &[&[0], &[1, 2]]),
        ((2, 2), &[&[1, 2], &[0]]),
        ((3, 1), &[&[1], &[0, 2]]),
        ((3, 2), &[&[0, 2], &[1]]),
        ((4, 1), &[&[2], &[0, 1]]),
        ((4, 2), &[&[0, 1], &[2]]),
        ((5, 1), &[&[0, 1, 2]]),
    ];
    rows.iter()
        .map(|(label, blocks)| NamedPartition {
            label: *label,
            scheme: PartitionScheme::new(blocks.iter().map(|b| b.to_vec()).collect(), 3)
                .expect("valid partition"),
        })
        .collect()
}

/// Which throughput function every user maximizes.
#[derive(Debug, Clone, PartialEq)]
pub enum ThroughputSelector {
    /// Each user decoded treating all others as noise.
    MatchedFilter,
    /// Common objective: sum of matched-filter rates.
    Sum,
    /// Common objective: sum capacity `log2(1 + sum s / N0)`.
    SumCapacity,
    /// SIC with the fixed decoding order `m` (0-based).
    SicEndpoint(usize),
    /// SIC with decoding order drawn from a known distribution each slot.
    SicRandomized(DecodingRandomization),
}

impl ThroughputSelector {
    pub(crate) fn check_users(&self, n: usize) -> Result<()> {
        match self {
            Self::SicEndpoint(m) if n > MAX_SIC_USERS || *m >= factorial(n) => {
                Err(Error::OutOfRange { index: *m, limit: factorial(n.min(MAX_SIC_USERS)) })
            }
            Self::SicRandomized(alpha) if alpha.mass.len() != factorial(n) => Err(
                Error::InvalidArgument(format!("decoding mass has length {}, expected {n}!", alpha.mass.len())),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_common_objective(&self) -> bool {
        matches!(self, Self::Sum | Self::SumCapacity)
    }

    pub fn evaluator(&self, n_users: usize) -> RateEvaluator {
        let orders = match self {
            Self::SicEndpoint(m) => vec![(1.0, *m)],
            Self::SicRandomized(alpha) => alpha
                .mass
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(m, &w)| (w, m))
                .collect::<Vec<_>>(),
            _ => Vec::new(),
        };
        let orders = orders
            .into_iter()
            .map(|(weight, m)| {
                let perm = permutation_by_index(n_users, m).expect("validated order");
                let mut preceding = vec![Vec::new(); n_users];
                for (pos, &u) in perm.iter().enumerate() {
                    preceding[u] = perm[..pos].to_vec();
                }
                WeightedOrder { weight, preceding }
            })
            .collect();
        RateEvaluator { kind: self.clone(), orders }
    }
}

#[derive(Debug, Clone)]
struct WeightedOrder {
    weight: f64,
    preceding: Vec<Vec<usize>>,
}

/// A throughput selector compiled for a fixed number of users.
#[derive(Debug, Clone)]
pub struct RateEvaluator {
    kind: ThroughputSelector,
    orders: Vec<WeightedOrder>,
}

impl RateEvaluator {
    /// Rate of user `i` given every user's received signal power `h(k) p(l)`.
    pub fn rate(&self, i: usize, signals: &[f64], noise: f64) -> f64 {
        match self.kind {
            ThroughputSelector::MatchedFilter => matched_filter(i, signals, noise),
            ThroughputSelector::Sum => (0..signals.len()).map(|j| matched_filter(j, signals, noise)).sum(),
            ThroughputSelector::SumCapacity => (1.0 + signals.iter().sum::<f64>() / noise).log2(),
            ThroughputSelector::SicEndpoint(_) | ThroughputSelector::SicRandomized(_) => {
                if signals[i] == 0.0 {
                    return 0.0;
                }
                self.orders
                    .iter()
                    .map(|o| {
                        let interference: f64 = o.preceding[i].iter().map(|&j| signals[j]).sum();
                        o.weight * (1.0 + signals[i] / (noise + interference)).log2()
                    })
                    .sum()
            }
        }
    }
}

fn matched_filter(i: usize, signals: &[f64], noise: f64) -> f64 {
    if signals[i] == 0.0 {
        return 0.0;
    }
    let interference: f64 = signals.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s).sum();
    (1.0 + signals[i] / (noise + interference)).log2()
}

fn signals(spec: &GameSpec, k: &[usize], l_eff: &[usize]) -> Vec<f64> {
    spec.users.iter().zip(k).zip(l_eff).map(|((u, &k), &l)| u.signal(k, l)).collect()
}

/// Matched-filter rate of user `i` at channel tuple `k` and effective powers `l_eff`.
pub fn rate_matched_filter(spec: &GameSpec, i: usize, k: &[usize], l_eff: &[usize]) -> f64 {
    matched_filter(i, &signals(spec, k, l_eff), spec.noise_power)
}

pub fn rate_sic_endpoint(
    spec: &GameSpec,
    m: usize,
    i: usize,
    k: &[usize],
    l_eff: &[usize],
) -> Result<f64> {
    let n = spec.num_users();
    let sel = ThroughputSelector::SicEndpoint(m);
    sel.check_users(n)?;
    Ok(sel.evaluator(n).rate(i, &signals(spec, k, l_eff), spec.noise_power))
}

pub fn rate_randomized(
    spec: &GameSpec,
    alpha: &DecodingRandomization,
    i: usize,
    k: &[usize],
    l_eff: &[usize],
) -> Result<f64> {
    let n = spec.num_users();
    let sel = ThroughputSelector::SicRandomized(alpha.clone());
    sel.check_users(n)?;
    Ok(sel.evaluator(n).rate(i, &signals(spec, k, l_eff), spec.noise_power))
}

pub fn rate_sum(spec: &GameSpec, k: &[usize], l_eff: &[usize]) -> f64 {
    ThroughputSelector::Sum.evaluator(spec.num_users()).rate(0, &signals(spec, k, l_eff), spec.noise_power)
}

pub fn rate_sum_capacity(spec: &GameSpec, k: &[usize], l_eff: &[usize]) -> f64 {
    let s = signals(spec, k, l_eff);
    (1.0 + s.iter().sum::<f64>() / spec.noise_power).log2()
}

/// A finite game in dense form: `payoffs[i][profile]`, profiles in
/// mixed-radix order with the last player varying fastest.
#[derive(Debug, Clone)]
pub struct FiniteGame {
    pub action_counts: Vec<usize>,
    pub payoffs: Vec<Vec<f64>>,
}

impl FiniteGame {
    pub fn num_profiles(&self) -> usize {
        self.action_counts.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.action_counts.len()];
        for i in (0..self.action_counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.action_counts[i + 1];
        }
        strides
    }
}

/// Result of [`is_exact_potential`].
#[derive(Debug, Clone)]
pub struct PotentialCheck {
    pub is_potential: bool,
    /// Largest absolute four-cycle sum found.
    pub max_cycle_violation: f64,
    /// Potential built by path integration from the all-zero profile,
    /// anchored to player 0's payoff there. Present iff `is_potential`.
    pub potential: Option<Vec<f64>>,
}

/// Exact-potential test by the four-cycle condition over every pair of
/// players, every co-action profile and every pair of unilateral switches.
pub fn is_exact_potential(game: &FiniteGame) -> PotentialCheck {
    let n = game.action_counts.len();
    let strides = game.strides();
    let total = game.num_profiles();
    let mut worst: f64 = 0.0;

    for i in 0..n {
        for j in i + 1..n {
            let (si, sj) = (strides[i], strides[j]);
            for base in 0..total {
                // iterate over profiles whose i and j coordinates are 0
                if (base / si) % game.action_counts[i] != 0 || (base / sj) % game.action_counts[j] != 0 {
                    continue;
                }
                for ai in 0..game.action_counts[i] {
                    for bi in ai + 1..game.action_counts[i] {
                        for aj in 0..game.action_counts[j] {
                            for bj in aj + 1..game.action_counts[j] {
                                let p = |x: usize, y: usize| base + x * si + y * sj;
                                let ui = &game.payoffs[i];
                                let uj = &game.payoffs[j];
                                let cycle = (ui[p(bi, aj)] - ui[p(ai, aj)])
                                    + (uj[p(bi, bj)] - uj[p(bi, aj)])
                                    + (ui[p(ai, bj)] - ui[p(bi, bj)])
                                    + (uj[p(ai, aj)] - uj[p(ai, bj)]);
                                worst = worst.max(cycle.abs());
                            }
                        }
                    }
                }
            }
        }
    }

    let is_potential = worst <= POTENTIAL_TOL;
    let potential = is_potential.then(|| {
        let anchor = game.payoffs.first().map_or(0.0, |u| u[0]);
        (0..total)
            .map(|profile| {
                // walk from the zero profile switching players 0..n in turn
                let mut value = anchor;
                let mut current = 0;
                for (p, &stride) in strides.iter().enumerate() {
                    let a = (profile / stride) % game.action_counts[p];
                    let next = current + a * stride;
                    value += game.payoffs[p][next] - game.payoffs[p][current];
                    current = next;
                }
                value
            })
            .collect()
    });
    PotentialCheck { is_potential, max_cycle_violation: worst, potential }
}

/// The per-channel-state power game: players choose power indices and
/// receive `t_i(k, l)` at the fixed channel tuple `k`.
pub fn channel_slice_game(spec: &GameSpec, k: &[usize]) -> FiniteGame {
    let n = spec.num_users();
    let action_counts: Vec<usize> = spec.users.iter().map(|u| u.l_max() + 1).collect();
    let eval = spec.throughput.evaluator(n);
    let game = FiniteGame { payoffs: Vec::new(), action_counts: action_counts.clone() };
    let strides = game.strides();
    let total = game.num_profiles();
    let mut payoffs = vec![vec![0.0; total]; n];
    let mut s = vec![0.0; n];
    for profile in 0..total {
        for (j, user) in spec.users.iter().enumerate() {
            let l = (profile / strides[j]) % action_counts[j];
            s[j] = user.signal(k[j], l);
        }
        for (i, row) in payoffs.iter_mut().enumerate() {
            row[profile] = eval.rate(i, &s, spec.noise_power);
        }
    }
    FiniteGame { action_counts, payoffs }
}
