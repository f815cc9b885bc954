//! Brute-force ground truth for tiny instances: every basic feasible
//! solution of an occupation polytope by basis enumeration, LP-free best
//! responses, and an equilibrium check that evaluates the immediate reward
//! by literal summation over all opponent (state, action) profiles.
//!
//! None of this touches the simplex code; the linear algebra is nalgebra's.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::game::Game;
use crate::lp::{OccupationMeasure, OccupationPolytope};
use crate::model::{build_bf_fsmc, GameSpec, Mode, UserModel};
use crate::throughput::ThroughputSelector;
use crate::{Error, Result};

/// Structural plus slack variables allowed in [`enumerate_vertices`].
pub const MAX_ORACLE_VARIABLES: usize = 20;
const FEAS_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    /// One generating basis (columns over structural then slack variables) per vertex.
    pub bases: Vec<Vec<usize>>,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.vertices.iter().any(|v| sup_distance(v, z) <= tol)
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone().svd(false, false).rank(RANK_TOL * m.amax().max(1.0))
}

/// All distinct basic feasible solutions of the polytope, found by solving
/// the square system of every basis-sized column subset.
pub fn enumerate_vertices(polytope: &OccupationPolytope) -> Result<VertexSet> {
    let n = polytope.num_vars();
    let m_ub = polytope.costs.len();
    let total = n + m_ub;
    if total > MAX_ORACLE_VARIABLES {
        return Err(Error::OracleCap { variables: total, cap: MAX_ORACLE_VARIABLES });
    }

    let (eq, eq_rhs) = polytope.equalities();
    let rows = eq.len() + m_ub;
    let mut a = DMatrix::<f64>::zeros(rows, total);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, (row, &rhs)) in eq.iter().zip(&eq_rhs).enumerate() {
        for (j, &v) in row.iter().enumerate() {
            a[(r, j)] = v;
        }
        b[r] = rhs;
    }
    for (k, (row, &budget)) in polytope.costs.iter().zip(&polytope.budgets).enumerate() {
        let r = eq.len() + k;
        for (j, &v) in row.iter().enumerate() {
            a[(r, j)] = v;
        }
        a[(r, n + k)] = 1.0;
        b[r] = budget;
    }

    // a maximal independent subset of rows
    let mut kept: Vec<usize> = Vec::new();
    for r in 0..rows {
        let mut trial = kept.clone();
        trial.push(r);
        if rank(&a.select_rows(&trial)) == trial.len() {
            kept = trial;
        }
    }
    let a_ind = a.select_rows(&kept);
    let b_ind = b.select_rows(&kept);
    let r = kept.len();

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut bases = Vec::new();
    for cols in (0..total).combinations(r) {
        let square = a_ind.select_columns(&cols);
        if rank(&square) < r {
            continue;
        }
        let Some(xb) = square.lu().solve(&b_ind) else {
            continue;
        };
        if xb.iter().any(|&v| v < -FEAS_TOL) {
            continue;
        }
        let mut x = DVector::<f64>::zeros(total);
        for (&c, &v) in cols.iter().zip(xb.iter()) {
            x[c] = v.max(0.0);
        }
        if (&a * &x - &b).amax() > FEAS_TOL {
            continue;
        }
        let z: Vec<f64> = x.iter().take(n).copied().collect();
        if !vertices.iter().any(|v| sup_distance(v, &z) <= FEAS_TOL) {
            vertices.push(z);
            bases.push(cols);
        }
    }
    Ok(VertexSet { vertices, bases })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleChoice {
    pub index: usize,
    pub value: f64,
    /// How many vertices attain the maximum within 1e-12.
    pub ties: usize,
}

/// Maximizes `reward . v` over the vertex list; ties go to the lowest index.
pub fn oracle_best_response(reward: &[f64], vertices: &VertexSet) -> Result<OracleChoice> {
    let values: Vec<f64> = vertices
        .vertices
        .iter()
        .map(|v| v.iter().zip(reward).map(|(a, b)| a * b).sum())
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let index = values
        .iter()
        .position(|&v| v == best)
        .ok_or_else(|| Error::InvalidArgument("empty vertex set".into()))?;
    let ties = values.iter().filter(|&&v| (v - best).abs() <= 1e-12).count();
    Ok(OracleChoice { index, value: best, ties })
}

/// Immediate reward of user `i` by direct summation over every joint
/// (state, action) profile of the other users.
pub fn brute_force_reward(game: &Game, i: usize, profile: &[OccupationMeasure]) -> Vec<f64> {
    let n = game.num_users();
    let space_i = game.space(i);
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let ranges: Vec<std::ops::Range<usize>> = others.iter().map(|&j| 0..game.space(j).num_pairs()).collect();
    let mut reward = vec![0.0; space_i.num_pairs()];
    let mut signals = vec![0.0; n];
    for (own, slot) in reward.iter_mut().enumerate() {
        let (s, a) = space_i.pair(own);
        signals[i] = game.user(i).signal(s.channel, space_i.effective_power(s, a));
        let profiles: Box<dyn Iterator<Item = Vec<usize>>> = if ranges.is_empty() {
            Box::new(std::iter::once(Vec::new()))
        } else {
            Box::new(ranges.iter().cloned().multi_cartesian_product())
        };
        for combo in profiles {
            let mut weight = 1.0;
            for (&j, &pair) in others.iter().zip(&combo) {
                let sp = game.space(j);
                let (sj, aj) = sp.pair(pair);
                weight *= profile[j].as_slice()[pair];
                signals[j] = game.user(j).signal(sj.channel, sp.effective_power(sj, aj));
            }
            if weight != 0.0 {
                *slot += weight * game.evaluator().rate(i, &signals, game.noise_power());
            }
        }
    }
    reward
}

/// True iff no user can improve its rate by more than 1e-9 by moving to
/// any vertex of its polytope. Sufficient, since a linear objective attains
/// its maximum at a vertex.
pub fn exhaustive_equilibrium_check(game: &Game, profile: &[OccupationMeasure]) -> Result<bool> {
    for i in 0..game.num_users() {
        let vertices = enumerate_vertices(game.polytope(i))?;
        let reward = brute_force_reward(game, i, profile);
        let current: f64 = reward.iter().zip(profile[i].as_slice()).map(|(r, z)| r * z).sum();
        let best = oracle_best_response(&reward, &vertices)?;
        if best.value > current + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Two saturated users on a two-state channel (gains 0 and 1), powers
/// {0, 1}, power budget 1/2, unit noise, matched-filter decoding.
pub fn tiny_instance() -> GameSpec {
    tiny_instance_with(2)
}

pub fn tiny_instance_with(n_users: usize) -> GameSpec {
    let channel = build_bf_fsmc(1).expect("two-state channel");
    let users = (0..n_users)
        .map(|_| UserModel::saturated(channel.clone(), 1, 0.5).expect("tiny user"))
        .collect();
    GameSpec::new(users, 1.0, ThroughputSelector::MatchedFilter, Mode::Saturated).expect("tiny spec")
}
