//! Users, channels, queues, and the per-user controlled Markov kernel.

use crate::linalg;
use crate::throughput::ThroughputSelector;
use crate::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Saturated users always have a packet and only carry a power budget.
/// Unsaturated users also own a finite queue and a queue-length budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Saturated,
    Unsaturated,
}

/// Finite-state Markov channel with gain `h(k)` per channel index.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    transition: Vec<Vec<f64>>,
    gain: Vec<f64>,
}

impl ChannelModel {
    pub fn new(transition: Vec<Vec<f64>>, gain: Vec<f64>) -> Result<Self> {
        let n = gain.len();
        if n < 2 {
            return Err(Error::InvalidModel("channel needs at least two states".into()));
        }
        check_stochastic(&transition, n, "channel transition")?;
        if gain[0] != 0.0 {
            return Err(Error::InvalidModel("channel gain at index 0 must be 0".into()));
        }
        if let Some(g) = gain.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::InvalidModel(format!("channel gain {g} outside [0, 1]")));
        }
        if !is_primitive(&transition) {
            return Err(Error::InvalidModel("channel chain is not ergodic".into()));
        }
        Ok(Self { transition, gain })
    }

    /// Largest channel index.
    pub fn k_max(&self) -> usize {
        self.gain.len() - 1
    }

    pub fn num_states(&self) -> usize {
        self.gain.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn gain(&self, k: usize) -> f64 {
        self.gain[k]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gain
    }

    pub fn stationary(&self) -> Vec<f64> {
        linalg::stationary_distribution(&self.transition)
            .expect("ergodic chain has a unique stationary distribution")
    }
}

/// Birth-death channel: 1/2 to stay or move inward at the two ends, 1/3 to
/// each neighbour and to itself in the interior. Gain is `k / k_max`.
pub fn build_bf_fsmc(k_max: usize) -> Result<ChannelModel> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let n = k_max + 1;
    let mut p = vec![vec![0.0; n]; n];
    p[0][0] = 0.5;
    p[0][1] = 0.5;
    p[k_max][k_max] = 0.5;
    p[k_max][k_max - 1] = 0.5;
    for (k, row) in p.iter_mut().enumerate().take(k_max).skip(1) {
        row[k - 1] = 1.0 / 3.0;
        row[k] = 1.0 / 3.0;
        row[k + 1] = 1.0 / 3.0;
    }
    let gain = (0..n).map(|k| k as f64 / k_max as f64).collect();
    ChannelModel::new(p, gain)
}

/// Poisson pmf on `0..cutoff` with the remaining tail lumped at `cutoff`.
pub fn truncated_arrival_pmf(rate: f64, cutoff: usize) -> Result<Vec<f64>> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("arrival rate {rate} must be >= 0")));
    }
    if cutoff < 1 {
        return Err(Error::InvalidArgument("arrival cutoff must be at least 1".into()));
    }
    let mut pmf = Vec::with_capacity(cutoff + 1);
    let mut term = (-rate).exp();
    for g in 0..cutoff {
        pmf.push(term);
        term *= rate / (g + 1) as f64;
    }
    let head: f64 = pmf.iter().sum();
    pmf.push((1.0 - head).max(0.0));
    Ok(pmf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueModel {
    q_max: usize,
    arrival_pmf: Vec<f64>,
    arrival_rate: f64,
}

impl QueueModel {
    /// Poisson arrivals truncated at `q_max`; the `min(.., q_max)` in the
    /// queue update makes any larger cutoff give the same kernel.
    pub fn poisson(q_max: usize, arrival_rate: f64) -> Result<Self> {
        let pmf = truncated_arrival_pmf(arrival_rate, q_max.max(1))?;
        Self::with_pmf(q_max, pmf, arrival_rate)
    }

    pub fn with_pmf(q_max: usize, arrival_pmf: Vec<f64>, arrival_rate: f64) -> Result<Self> {
        if q_max < 1 {
            return Err(Error::InvalidModel("queue length q_max must be at least 1".into()));
        }
        if arrival_pmf.iter().any(|&p| p < 0.0)
            || (arrival_pmf.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL
        {
            return Err(Error::InvalidModel("arrival pmf is not a probability vector".into()));
        }
        Ok(Self { q_max, arrival_pmf, arrival_rate })
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn arrival_pmf(&self) -> &[f64] {
        &self.arrival_pmf
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    /// Next queue length for arrivals `gamma` under `action` from `q`.
    /// One packet leaves whenever the queue is non-empty and power is positive.
    pub fn next(&self, q: usize, action: Action, gamma: usize) -> usize {
        let departure = usize::from(q > 0 && action.power > 0);
        let admitted = if action.admit { gamma } else { 0 };
        (q + admitted).saturating_sub(departure).min(self.q_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserModel {
    pub channel: ChannelModel,
    pub queue: Option<QueueModel>,
    pub power: Vec<f64>,
    pub power_budget: f64,
    pub queue_budget: Option<f64>,
}

impl UserModel {
    pub fn new(
        channel: ChannelModel,
        queue: Option<QueueModel>,
        power: Vec<f64>,
        power_budget: f64,
        queue_budget: Option<f64>,
    ) -> Result<Self> {
        if power.len() < 2 {
            return Err(Error::InvalidModel("need at least two power levels".into()));
        }
        if power[0] != 0.0 {
            return Err(Error::InvalidModel("power at index 0 must be 0".into()));
        }
        if power.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidModel("power levels must be finite and >= 0".into()));
        }
        if !(power_budget > 0.0) {
            return Err(Error::InvalidModel("power budget must be > 0".into()));
        }
        match (&queue, queue_budget) {
            (Some(_), Some(b)) if !(b > 0.0) => {
                return Err(Error::InvalidModel("queue budget must be > 0".into()))
            }
            (Some(_), None) => {
                return Err(Error::InvalidModel("a queue requires a queue budget".into()))
            }
            (None, Some(_)) => {
                return Err(Error::InvalidModel("queue budget given without a queue".into()))
            }
            _ => {}
        }
        Ok(Self { channel, queue, power, power_budget, queue_budget })
    }

    /// Saturated user with power map `p(l) = l`.
    pub fn saturated(channel: ChannelModel, l_max: usize, power_budget: f64) -> Result<Self> {
        let power = (0..=l_max).map(|l| l as f64).collect();
        Self::new(channel, None, power, power_budget, None)
    }

    /// Unsaturated user with power map `p(l) = l`.
    pub fn unsaturated(
        channel: ChannelModel,
        queue: QueueModel,
        l_max: usize,
        power_budget: f64,
        queue_budget: f64,
    ) -> Result<Self> {
        let power = (0..=l_max).map(|l| l as f64).collect();
        Self::new(channel, Some(queue), power, power_budget, Some(queue_budget))
    }

    pub fn l_max(&self) -> usize {
        self.power.len() - 1
    }

    pub fn mode(&self) -> Mode {
        if self.queue.is_some() {
            Mode::Unsaturated
        } else {
            Mode::Saturated
        }
    }

    pub fn space(&self) -> StateActionSpace {
        StateActionSpace::new(self)
    }

    /// Received signal power `h(k) p(l)`.
    pub fn signal(&self, k: usize, l: usize) -> f64 {
        self.channel.gain(k) * self.power[l]
    }
}

/// The full N-user game description.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub users: Vec<UserModel>,
    pub noise_power: f64,
    pub throughput: ThroughputSelector,
    pub mode: Mode,
}

impl GameSpec {
    pub fn new(
        users: Vec<UserModel>,
        noise_power: f64,
        throughput: ThroughputSelector,
        mode: Mode,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::InvalidModel("a game needs at least one user".into()));
        }
        if !(noise_power > 0.0) || !noise_power.is_finite() {
            return Err(Error::InvalidModel("noise power must be > 0".into()));
        }
        if let Some(i) = users.iter().position(|u| u.mode() != mode) {
            return Err(Error::InvalidModel(format!(
                "user {i} does not match the game mode {mode:?}"
            )));
        }
        throughput.check_users(users.len())?;
        Ok(Self { users, noise_power, throughput, mode })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}

/// A user state `(k, q)`; `q` is always 0 for saturated users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub channel: usize,
    pub queue: usize,
}

/// A user action `(l, d)`; `admit` is always false for saturated users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub power: usize,
    pub admit: bool,
}

/// Lexicographic enumeration of one user's states and actions. LP variable
/// `(s, a)` lives at index `s * num_actions + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateActionSpace {
    pub mode: Mode,
    pub states: Vec<State>,
    pub actions: Vec<Action>,
    q_levels: usize,
}

impl StateActionSpace {
    pub fn new(user: &UserModel) -> Self {
        let mode = user.mode();
        let q_levels = user.queue.as_ref().map_or(1, |q| q.q_max() + 1);
        let states = (0..user.channel.num_states())
            .flat_map(|k| (0..q_levels).map(move |q| State { channel: k, queue: q }))
            .collect();
        let admits: &[bool] = match mode {
            Mode::Saturated => &[false],
            Mode::Unsaturated => &[false, true],
        };
        let actions = (0..=user.l_max())
            .flat_map(|l| admits.iter().map(move |&d| Action { power: l, admit: d }))
            .collect();
        Self { mode, states, actions, q_levels }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.states.len() * self.actions.len()
    }

    pub fn state_index(&self, state: State) -> Option<usize> {
        let idx = state.channel * self.q_levels + state.queue;
        (state.queue < self.q_levels && idx < self.states.len()).then_some(idx)
    }

    pub fn action_index(&self, action: Action) -> Option<usize> {
        let idx = match (self.mode, action.admit) {
            (Mode::Saturated, true) => return None,
            (Mode::Saturated, false) => action.power,
            (Mode::Unsaturated, d) => 2 * action.power + usize::from(d),
        };
        (idx < self.actions.len()).then_some(idx)
    }

    pub fn pair_index(&self, state: usize, action: usize) -> usize {
        state * self.actions.len() + action
    }

    pub fn pair(&self, index: usize) -> (State, Action) {
        let n = self.actions.len();
        (self.states[index / n], self.actions[index % n])
    }

    /// Power index that actually reaches the receiver: zero on an empty queue.
    pub fn effective_power(&self, state: State, action: Action) -> usize {
        match self.mode {
            Mode::Saturated => action.power,
            Mode::Unsaturated if state.queue == 0 => 0,
            Mode::Unsaturated => action.power,
        }
    }
}

/// Queue transition matrix over `0..=q_max` for one action.
pub fn queue_kernel(queue: &QueueModel, action: Action) -> Vec<Vec<f64>> {
    let n = queue.q_max() + 1;
    let mut p = vec![vec![0.0; n]; n];
    for (q, row) in p.iter_mut().enumerate() {
        for (gamma, &mass) in queue.arrival_pmf().iter().enumerate() {
            row[queue.next(q, action, gamma)] += mass;
        }
    }
    p
}

/// Transition matrix over the user's states for one action: the channel
/// matrix times the queue kernel (the channel alone when saturated).
pub fn user_kernel(user: &UserModel, action: Action) -> Vec<Vec<f64>> {
    let channel = user.channel.transition();
    let Some(queue) = user.queue.as_ref() else {
        return channel.to_vec();
    };
    let qk = queue_kernel(queue, action);
    let nq = qk.len();
    let n = channel.len() * nq;
    let mut p = vec![vec![0.0; n]; n];
    for (k, crow) in channel.iter().enumerate() {
        for (q, qrow) in qk.iter().enumerate() {
            let row = &mut p[k * nq + q];
            for (k2, &pc) in crow.iter().enumerate() {
                if pc == 0.0 {
                    continue;
                }
                for (q2, &pq) in qrow.iter().enumerate() {
                    row[k2 * nq + q2] = pc * pq;
                }
            }
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// `p(l)`: power spent by the chosen power index.
    Power,
    /// `q`: current queue length.
    Queue,
}

pub fn instantaneous_cost(
    user: &UserModel,
    state: State,
    action: Action,
    which: CostKind,
) -> Result<f64> {
    match which {
        CostKind::Power => Ok(user.power[action.power]),
        CostKind::Queue if user.queue.is_none() => Err(Error::InvalidArgument(
            "queue cost is undefined for a saturated user".into(),
        )),
        CostKind::Queue => Ok(state.queue as f64),
    }
}

fn check_stochastic(m: &[Vec<f64>], n: usize, what: &str) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidModel(format!("{what} must be {n}x{n}")));
    }
    for (i, row) in m.iter().enumerate() {
        if row.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidModel(format!("{what} row {i} has a negative entry")));
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("{what} row {i} does not sum to 1")));
        }
    }
    Ok(())
}

/// Some power of the matrix is strictly positive. By Wielandt's bound it
/// suffices to look at the power `(n-1)^2 + 1`.
fn is_primitive(p: &[Vec<f64>]) -> bool {
    let n = p.len();
    let base: Vec<Vec<bool>> = p.iter().map(|r| r.iter().map(|&v| v > 0.0).collect()).collect();
    let mut reach = base.clone();
    for _ in 1..((n - 1) * (n - 1) + 1) {
        if reach.iter().all(|r| r.iter().all(|&b| b)) {
            return true;
        }
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        next[i][j] |= base[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    reach.iter().all(|r| r.iter().all(|&b| b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bf_fsmc_rows() {
        let ch = build_bf_fsmc(3).unwrap();
        let p = ch.transition();
        assert_eq!(p[0], vec![0.5, 0.5, 0.0, 0.0]);
        for (v, e) in p[1].iter().zip([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!(close(*v, e, 1e-15));
        }
        assert_eq!(p[3], vec![0.0, 0.0, 0.5, 0.5]);
        assert_eq!(ch.gains(), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn bf_fsmc_stationary_by_power_iteration() {
        let ch = build_bf_fsmc(3).unwrap();
        let p = ch.transition();
        // independent route: iterate pi <- pi P from a point mass
        let mut pi = vec![1.0, 0.0, 0.0, 0.0];
        for _ in 0..2000 {
            let mut next = vec![0.0; 4];
            for (x, &w) in pi.iter().enumerate() {
                for (y, &t) in p[x].iter().enumerate() {
                    next[y] += w * t;
                }
            }
            pi = next;
        }
        let expected = [0.2, 0.3, 0.3, 0.2];
        for ((a, b), c) in pi.iter().zip(expected).zip(ch.stationary()) {
            assert!(close(*a, b, 1e-12));
            assert!(close(c, b, 1e-12));
        }
    }

    #[test]
    fn bf_fsmc_two_state() {
        let ch = build_bf_fsmc(1).unwrap();
        assert_eq!(ch.transition(), &[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let pi = ch.stationary();
        assert!(close(pi[0], 0.5, 1e-15) && close(pi[1], 0.5, 1e-15));
        assert!(build_bf_fsmc(0).is_err());
    }

    #[test]
    fn channel_rejects_bad_inputs() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(ChannelModel::new(id, vec![0.0, 1.0]).is_err());
        let half = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(ChannelModel::new(half.clone(), vec![0.1, 1.0]).is_err());
        assert!(ChannelModel::new(half.clone(), vec![0.0, 1.5]).is_err());
        assert!(ChannelModel::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]], vec![0.0, 1.0]).is_err());
        // periodic chain: never strictly positive
        let flip = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(ChannelModel::new(flip, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn arrival_pmf() {
        assert_eq!(truncated_arrival_pmf(0.0, 5).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let pmf = truncated_arrival_pmf(0.3, 10).unwrap();
        assert_eq!(pmf.len(), 11);
        assert!(close(pmf[0], 0.740_818_220_681_717_8, 1e-15));
        assert!(close(pmf[2], 0.3f64.powi(2) / 2.0 * (-0.3f64).exp(), 1e-16));
        assert!(close(pmf.iter().sum::<f64>(), 1.0, 1e-15));
        assert!(truncated_arrival_pmf(-0.1, 5).is_err());
        assert!(truncated_arrival_pmf(1.0, 0).is_err());
    }

    fn benchmark_queue() -> QueueModel {
        QueueModel::poisson(10, 0.3).unwrap()
    }

    #[test]
    fn queue_kernel_examples() {
        let q = benchmark_queue();
        let idle = queue_kernel(&q, Action { power: 3, admit: false });
        assert_eq!(idle[0][0], 1.0);
        assert_eq!(idle[10][9], 1.0);

        let admit = queue_kernel(&q, Action { power: 0, admit: true });
        let e = (-0.3f64).exp();
        assert!(close(admit[0][0], e, 1e-15));
        assert!(close(admit[0][1], 0.3 * e, 1e-15));
        // no departure without power: from q=4 the queue cannot shrink
        assert!(admit[4][..4].iter().all(|&v| v == 0.0));

        let send = queue_kernel(&q, Action { power: 1, admit: true });
        assert!(close(send[4][3], e, 1e-15));
        for row in send.iter().chain(&admit).chain(&idle) {
            assert!(close(row.iter().sum::<f64>(), 1.0, 1e-12));
        }
    }

    #[test]
    fn queue_never_grows_without_admission() {
        let q = benchmark_queue();
        for l in 0..=5 {
            let k = queue_kernel(&q, Action { power: l, admit: false });
            for (from, row) in k.iter().enumerate() {
                assert!(row.iter().enumerate().all(|(to, &p)| p == 0.0 || to <= from));
            }
        }
    }

    #[test]
    fn user_kernel_factorizes() {
        let ch = build_bf_fsmc(3).unwrap();
        let user = UserModel::unsaturated(ch.clone(), benchmark_queue(), 5, 2.0, 5.0).unwrap();
        let space = user.space();
        assert_eq!(space.num_states(), 44);
        assert_eq!(space.num_actions(), 12);
        for &action in &space.actions {
            let full = user_kernel(&user, action);
            let qk = queue_kernel(user.queue.as_ref().unwrap(), action);
            for (xi, x) in space.states.iter().enumerate() {
                assert!(close(full[xi].iter().sum::<f64>(), 1.0, 1e-12));
                for (yi, y) in space.states.iter().enumerate() {
                    let expected = ch.transition()[x.channel][y.channel] * qk[x.queue][y.queue];
                    assert_eq!(full[xi][yi], expected);
                }
            }
        }

        let sat = UserModel::saturated(ch.clone(), 5, 2.0).unwrap();
        let space = sat.space();
        assert_eq!((space.num_states(), space.num_actions()), (4, 6));
        for &a in &space.actions {
            assert_eq!(user_kernel(&sat, a), ch.transition());
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let ch = build_bf_fsmc(1).unwrap();
        let user = UserModel::unsaturated(ch, QueueModel::poisson(2, 0.3).unwrap(), 1, 1.0, 1.0)
            .unwrap();
        let space = user.space();
        let states: Vec<_> = space.states.iter().map(|s| (s.channel, s.queue)).collect();
        assert_eq!(states, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        let actions: Vec<_> = space.actions.iter().map(|a| (a.power, a.admit)).collect();
        assert_eq!(actions, vec![(0, false), (0, true), (1, false), (1, true)]);
        for (i, &s) in space.states.iter().enumerate() {
            assert_eq!(space.state_index(s), Some(i));
        }
        for (i, &a) in space.actions.iter().enumerate() {
            assert_eq!(space.action_index(a), Some(i));
        }
    }

    #[test]
    fn costs() {
        let ch = build_bf_fsmc(3).unwrap();
        let user = UserModel::unsaturated(ch.clone(), benchmark_queue(), 5, 2.0, 5.0).unwrap();
        let s = State { channel: 2, queue: 7 };
        let a0 = Action { power: 0, admit: true };
        let a5 = Action { power: 5, admit: false };
        assert_eq!(instantaneous_cost(&user, s, a0, CostKind::Power).unwrap(), 0.0);
        assert_eq!(instantaneous_cost(&user, s, a5, CostKind::Power).unwrap(), 5.0);
        assert_eq!(instantaneous_cost(&user, s, a5, CostKind::Queue).unwrap(), 7.0);
        let sat = UserModel::saturated(ch, 5, 2.0).unwrap();
        assert!(instantaneous_cost(&sat, s, a5, CostKind::Queue).is_err());
    }

    #[test]
    fn user_validation() {
        let ch = build_bf_fsmc(3).unwrap();
        assert!(UserModel::new(ch.clone(), None, vec![1.0, 2.0], 1.0, None).is_err());
        assert!(UserModel::saturated(ch.clone(), 5, 0.0).is_err());
        assert!(UserModel::new(ch.clone(), Some(benchmark_queue()), vec![0.0, 1.0], 1.0, None).is_err());
        assert!(UserModel::new(ch, None, vec![0.0, 1.0], 1.0, Some(2.0)).is_err());
    }
}
