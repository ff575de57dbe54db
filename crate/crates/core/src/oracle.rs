//! Exact solvers for finite MDPs, used as ground truth for the learners.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};

/// Finite MDP with transition rows `P[s][a][s']` and rewards `R[s][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    gamma: f64,
}

impl FiniteMdp {
    pub fn new(transition: Vec<Vec<Vec<f64>>>, reward: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        let n_states = transition.len();
        if n_states == 0 {
            return Err(Error::Mdp("no states".into()));
        }
        let n_actions = transition[0].len();
        if n_actions == 0 {
            return Err(Error::Mdp("no actions".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Mdp(format!("gamma {gamma} outside [0, 1]")));
        }
        if reward.len() != n_states || reward.iter().any(|r| r.len() != n_actions) {
            return Err(Error::Mdp("reward table shape does not match transitions".into()));
        }
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, rows) in transition.iter().enumerate() {
            if rows.len() != n_actions {
                return Err(Error::Mdp(format!("state {s} has {} action rows", rows.len())));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::Mdp(format!("row ({s},{a}) has length {}", row.len())));
                }
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::Mdp(format!("row ({s},{a}) is not stochastic (sums to {sum})")));
                }
                flat.extend_from_slice(row);
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transition: flat,
            reward: reward.into_iter().flatten().collect(),
            gamma,
        })
    }

    /// Builds a deterministic MDP from `step(s, a) -> (s', r)`.
    pub fn deterministic(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        step: impl Fn(usize, usize) -> (usize, f64),
    ) -> Result<Self> {
        let mut transition = vec![vec![vec![0.0; n_states]; n_actions]; n_states];
        let mut reward = vec![vec![0.0; n_actions]; n_states];
        for s in 0..n_states {
            for a in 0..n_actions {
                let (next, r) = step(s, a);
                if next >= n_states {
                    return Err(Error::Mdp(format!("({s},{a}) leads to unknown state {next}")));
                }
                transition[s][a][next] = 1.0;
                reward[s][a] = r;
            }
        }
        Self::new(transition, reward, gamma)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    /// Span of the reward table, `max R - min R`.
    pub fn reward_span(&self) -> f64 {
        let max = self.reward.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.reward.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let row = self.transition_row(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (next, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return next;
            }
        }
        row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    fn backup(&self, q: &[Vec<f64>], s: usize, a: usize) -> f64 {
        let expected: f64 = self
            .transition_row(s, a)
            .iter()
            .zip(q)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, row)| p * max_of(row))
            .sum();
        self.reward(s, a) + self.gamma * expected
    }
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueSolution {
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Sup-norm change of Q at each sweep.
    pub residuals: Vec<f64>,
}

const MAX_SWEEPS: usize = 1_000_000;

/// Synchronous Q-value iteration `Q <- R + gamma * P * max_a Q` until the
/// sup-norm change drops below `tol`. Returns `Q*` and `V* = max_a Q*`.
pub fn value_iteration(mdp: &FiniteMdp, tol: f64) -> Result<ValueSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Mdp(format!("tolerance {tol} must be positive")));
    }
    let mut q = vec![vec![0.0; mdp.n_actions]; mdp.n_states];
    let mut residuals = Vec::new();
    for sweep in 1..=MAX_SWEEPS {
        let next: Vec<Vec<f64>> = (0..mdp.n_states)
            .map(|s| (0..mdp.n_actions).map(|a| mdp.backup(&q, s, a)).collect())
            .collect();
        let change = next
            .iter()
            .flatten()
            .zip(q.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        residuals.push(change);
        if !change.is_finite() {
            return Err(Error::Mdp("value iteration diverged".into()));
        }
        if change < tol {
            let v = q.iter().map(|row| max_of(row)).collect();
            return Ok(ValueSolution {
                v,
                q,
                iterations: sweep,
                residuals,
            });
        }
    }
    Err(Error::Mdp(format!("no convergence within {MAX_SWEEPS} sweeps")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub episodes: usize,
    pub horizon: usize,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            epsilon: 0.3,
            episodes: 10_000,
            horizon: 20,
        }
    }
}

/// Classic Q-learning with an epsilon-greedy behaviour policy. Episodes
/// start in a uniformly drawn state and are cut after `horizon` steps.
pub fn tabular_q_learning<R: Rng + ?Sized>(mdp: &FiniteMdp, config: &TabularConfig, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if !(config.alpha > 0.0 && config.alpha <= 1.0) {
        return Err(Error::validation("alpha", "must lie in (0, 1]"));
    }
    let mut q = vec![vec![0.0; mdp.n_actions]; mdp.n_states];
    for _ in 0..config.episodes {
        let mut s = rng.gen_range(0..mdp.n_states);
        for _ in 0..config.horizon {
            let a = if rng.gen::<f64>() < config.epsilon {
                rng.gen_range(0..mdp.n_actions)
            } else {
                argmax(&q[s])
            };
            let next = mdp.sample_next(s, a, rng);
            let target = mdp.reward(s, a) + mdp.gamma * max_of(&q[next]);
            q[s][a] += config.alpha * (target - q[s][a]);
            s = next;
        }
    }
    Ok(q)
}

/// Monte Carlo estimate of the discounted return of taking `a` in `s` and
/// then following the greedy policy of `q`.
pub fn greedy_return_estimate<R: Rng + ?Sized>(
    mdp: &FiniteMdp,
    q: &[Vec<f64>],
    s: usize,
    a: usize,
    rollouts: usize,
    horizon: usize,
    rng: &mut R,
) -> f64 {
    let mut total = 0.0;
    for _ in 0..rollouts {
        let (mut state, mut action) = (s, a);
        let mut discount = 1.0;
        for _ in 0..horizon {
            total += discount * mdp.reward(state, action);
            discount *= mdp.gamma;
            state = mdp.sample_next(state, action, rng);
            action = argmax(&q[state]);
        }
    }
    total / rollouts as f64
}

/// Largest absolute entry-wise difference between two Q tables.
pub fn max_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// [`max_deviation`] restricted to the rows flagged in `rows`.
pub fn max_deviation_on(a: &[Vec<f64>], b: &[Vec<f64>], rows: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(rows)
        .filter(|(_, &keep)| keep)
        .flat_map(|((x, y), _)| x.iter().zip(y).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// States reachable from `starts` under some sequence of actions.
pub fn reachable_states(mdp: &FiniteMdp, starts: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; mdp.n_states()];
    let mut stack: Vec<usize> = starts.to_vec();
    while let Some(s) = stack.pop() {
        if std::mem::replace(&mut seen[s], true) {
            continue;
        }
        for a in 0..mdp.n_actions() {
            for (next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 && !seen[next] {
                    stack.push(next);
                }
            }
        }
    }
    seen
}

/// Writes a Q table as CSV with header `state,action,q`.
pub fn write_q_csv<W: Write>(writer: W, q: &[Vec<f64>]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["state", "action", "q"])?;
    for (s, row) in q.iter().enumerate() {
        for (a, value) in row.iter().enumerate() {
            csv.write_record([s.to_string(), a.to_string(), value.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}
