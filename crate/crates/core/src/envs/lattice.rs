use rand::{Rng, RngCore};

use super::{clip_action, EnvDescriptor, Environment, EpisodeClock, StepResult};
use crate::domain::{index_to_direction, ActionSpaceSpec};
use crate::error::{Error, Result};
use crate::oracle::FiniteMdp;

/// A chain of `n` states driven by a scalar action in `[-1, 1]`.
///
/// The state moves one cell in the direction of the action's sign
/// (`s' = clamp(s + sign(a))`, zero actions stay put). Entering or staying
/// on the right edge pays +1, the left edge -1. Starting from `a = 0` with
/// step `delta_a`, every reachable action lies on `{-1, -1 + delta_a, .., 1}`,
/// so `(state, lattice action)` pairs form a finite MDP that value
/// iteration solves exactly. Episodes never terminate; they are truncated
/// at `max_steps`.
#[derive(Clone, Debug)]
pub struct LatticeMdp {
    descriptor: EnvDescriptor,
    n_states: usize,
    delta_a: f64,
    lattice: Vec<f64>,
    state: usize,
    clock: EpisodeClock,
    clip_warnings: u64,
}

impl LatticeMdp {
    pub const MAX_STATES: usize = 20;
    pub const DEFAULT_T: usize = 20;

    pub fn new(n_states: usize, delta_a: f64, max_steps: usize) -> Result<Self> {
        if !(2..=Self::MAX_STATES).contains(&n_states) {
            return Err(Error::validation(
                "lattice_states",
                format!("{n_states} not in 2..={}", Self::MAX_STATES),
            ));
        }
        let per_unit = 1.0 / delta_a;
        if !(delta_a > 0.0 && delta_a <= 1.0) || (per_unit - per_unit.round()).abs() > 1e-9 {
            return Err(Error::validation(
                "delta_a",
                format!("lattice needs 1/delta_a to be an integer, got delta_a={delta_a}"),
            ));
        }
        if max_steps == 0 {
            return Err(Error::validation("max_steps", "must be positive"));
        }
        let points = 2 * per_unit.round() as usize + 1;
        let lattice = (0..points).map(|i| -1.0 + i as f64 * delta_a).collect();
        Ok(Self {
            descriptor: EnvDescriptor {
                name: "lattice_mdp".into(),
                state_dim: 1,
                action_spec: ActionSpaceSpec::uniform(1, -1.0, 1.0, delta_a)?,
                max_steps,
                state_low: vec![0.0],
                state_high: vec![(n_states - 1) as f64],
                discrete_states: Some(n_states),
                success_threshold: None,
            },
            n_states,
            delta_a,
            lattice,
            state: 0,
            clock: EpisodeClock::default(),
            clip_warnings: 0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Action lattice points, ascending.
    pub fn lattice(&self) -> &[f64] {
        &self.lattice
    }

    /// Index of the lattice point closest to `action`.
    pub fn lattice_index(&self, action: f64) -> usize {
        let i = ((action + 1.0) / self.delta_a).round();
        (i.max(0.0) as usize).min(self.lattice.len() - 1)
    }

    pub fn reset_to(&mut self, state: usize) -> Vec<f64> {
        self.state = state.min(self.n_states - 1);
        self.clock.start();
        vec![self.state as f64]
    }

    /// Deterministic dynamics: next state and reward for executing `action` in `state`.
    pub fn transition(&self, state: usize, action: f64) -> (usize, f64) {
        let next = if action > 1e-9 {
            (state + 1).min(self.n_states - 1)
        } else if action < -1e-9 {
            state.saturating_sub(1)
        } else {
            state
        };
        (next, self.reward_on_entering(next))
    }

    fn reward_on_entering(&self, state: usize) -> f64 {
        if state == self.n_states - 1 {
            1.0
        } else if state == 0 {
            -1.0
        } else {
            0.0
        }
    }

    /// The MDP seen directly through a finite action set, e.g. a cartesian
    /// discretization. State index = chain state.
    pub fn direct_mdp(&self, actions: &[f64], gamma: f64) -> Result<FiniteMdp> {
        FiniteMdp::deterministic(self.n_states, actions.len(), gamma, |s, a| self.transition(s, actions[a]))
    }

    /// Auxiliary states an episode can start in: any `s`, action at 0.
    pub fn fsq_start_states(&self) -> Vec<usize> {
        let l0 = self.lattice_index(0.0);
        (0..self.n_states).map(|s| s * self.lattice.len() + l0).collect()
    }

    /// The auxiliary MDP seen by FSQ: states are `(s, lattice index)` pairs,
    /// indexed `s * L + l`, and actions are the three directions in head
    /// order (-1, 0, +1). With `execute_updated_action` the environment
    /// receives the integrated action, otherwise the previous one.
    pub fn fsq_mdp(&self, gamma: f64, execute_updated_action: bool) -> Result<FiniteMdp> {
        let points = self.lattice.len();
        FiniteMdp::deterministic(self.n_states * points, 3, gamma, |aux, head| {
            let (s, l) = (aux / points, aux % points);
            let d = index_to_direction(head + 1).expect("three heads") as i64;
            let next_l = (l as i64 + d).clamp(0, points as i64 - 1) as usize;
            let executed = if execute_updated_action { next_l } else { l };
            let (next_s, reward) = self.transition(s, self.lattice[executed]);
            (next_s * points + next_l, reward)
        })
    }
}

impl Environment for LatticeMdp {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let s = rng.gen_range(0..self.n_states);
        self.reset_to(s)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let truncated = self.clock.tick(self.descriptor.max_steps)?;
        let a = clip_action(&self.descriptor.action_spec, action, &mut self.clip_warnings)?[0];
        let (next, reward) = self.transition(self.state, a);
        self.state = next;
        if truncated {
            self.clock.finish();
        }
        Ok(StepResult {
            state: vec![next as f64],
            reward,
            terminal: false,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{greedy_return_estimate, value_iteration};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn augmented_state_count() {
        let env = LatticeMdp::new(3, 1.0, 20).unwrap();
        assert_eq!(env.lattice(), &[-1.0, 0.0, 1.0]);
        let mdp = env.fsq_mdp(0.9, true).unwrap();
        assert_eq!(mdp.n_states(), 9);
        assert_eq!(mdp.n_actions(), 3);
    }

    #[test]
    fn right_edge_self_transition_pays_one() {
        let mut env = LatticeMdp::new(3, 1.0, 20).unwrap();
        env.reset_to(2);
        let out = env.step(&[1.0]).unwrap();
        assert_eq!(out.state, vec![2.0]);
        assert_eq!(out.reward, 1.0);
        env.reset_to(0);
        assert_eq!(env.step(&[-0.5]).unwrap().reward, -1.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(LatticeMdp::new(3, 0.3, 20).is_err());
        assert!(LatticeMdp::new(21, 1.0, 20).is_err());
        assert!(LatticeMdp::new(3, 0.25, 20).is_ok());
    }

    #[test]
    fn oracle_matches_monte_carlo() {
        let env = LatticeMdp::new(3, 1.0, 20).unwrap();
        let mdp = env.fsq_mdp(0.9, true).unwrap();
        let sol = value_iteration(&mdp, 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in 0..mdp.n_states() {
            for a in 0..3 {
                // 0.9^400 * 10 is far below the tolerance.
                let estimate = greedy_return_estimate(&mdp, &sol.q, s, a, 20, 400, &mut rng);
                assert!((estimate - sol.q[s][a]).abs() < 0.01, "({s},{a}): {estimate} vs {}", sol.q[s][a]);
            }
        }
    }

    #[test]
    fn lattice_index_round_trips() {
        let env = LatticeMdp::new(4, 0.25, 20).unwrap();
        for (i, &a) in env.lattice().iter().enumerate() {
            assert_eq!(env.lattice_index(a), i);
        }
    }
}
