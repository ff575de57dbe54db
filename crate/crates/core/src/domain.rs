//! Domain types shared by the agents, the environments and the harness.
//!
//! A continuous action box is described by an [`ActionSpaceSpec`]. FSQ never
//! picks an absolute action: it picks a [`DirectionVector`] with one element
//! in `{-1, 0, +1}` per coordinate and moves the current action by
//! `d[j] * delta[j]`, clipped into the box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounds and per-coordinate step sizes of a continuous action box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpaceSpec {
    low: Vec<f64>,
    high: Vec<f64>,
    delta: Vec<f64>,
}

impl ActionSpaceSpec {
    pub fn new(low: Vec<f64>, high: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if low.is_empty() {
            return Err(Error::ActionSpace("action space needs at least one dimension".into()));
        }
        if high.len() != low.len() || delta.len() != low.len() {
            return Err(Error::ActionSpace(format!(
                "low/high/delta lengths differ: {}/{}/{}",
                low.len(),
                high.len(),
                delta.len()
            )));
        }
        for j in 0..low.len() {
            let (lo, hi, step) = (low[j], high[j], delta[j]);
            if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
                return Err(Error::ActionSpace(format!("coordinate {j} is not finite")));
            }
            if lo >= hi {
                return Err(Error::ActionSpace(format!("coordinate {j}: low {lo} >= high {hi}")));
            }
            if step <= 0.0 || step > hi - lo {
                return Err(Error::ActionSpace(format!(
                    "coordinate {j}: delta {step} outside (0, {}]",
                    hi - lo
                )));
            }
        }
        Ok(Self { low, high, delta })
    }

    /// The same bounds and step on every coordinate.
    pub fn uniform(dims: usize, low: f64, high: f64, delta: f64) -> Result<Self> {
        Self::new(vec![low; dims], vec![high; dims], vec![delta; dims])
    }

    pub fn dims(&self) -> usize {
        self.low.len()
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn clip(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(&a, (&lo, &hi))| a.clamp(lo, hi))
            .collect()
    }

    pub fn contains(&self, action: &[f64]) -> bool {
        action.len() == self.dims()
            && action
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(&a, (&lo, &hi))| a >= lo && a <= hi)
    }

    /// The first action of every episode: the zero vector, clipped into the box.
    pub fn initial_action(&self) -> Vec<f64> {
        self.clip(&vec![0.0; self.dims()])
    }
}

/// Per-coordinate auxiliary action, each element in `{-1, 0, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectionVector(Vec<i8>);

impl DirectionVector {
    pub fn new(elements: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = elements.iter().find(|d| !(-1..=1).contains(*d)) {
            return Err(Error::InvalidDirection(bad as i64));
        }
        Ok(Self(elements))
    }

    pub fn zeros(dims: usize) -> Self {
        Self(vec![0; dims])
    }

    /// Builds the vector from 0-based head offsets (0, 1, 2) within each partition.
    pub fn from_head_offsets(offsets: &[usize]) -> Result<Self> {
        offsets
            .iter()
            .map(|&k| index_to_direction(k + 1))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 0-based head offset of coordinate `j` inside its partition.
    pub fn head_offset(&self, j: usize) -> usize {
        (self.0[j] + 1) as usize
    }
}

/// The auxiliary state `v = (s, a)`: environment state plus current action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryState {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
}

impl AuxiliaryState {
    pub fn new(state: Vec<f64>, action: Vec<f64>) -> Self {
        Self { state, action }
    }

    /// Plain concatenation `(s || a)`.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.state.len() + self.action.len());
        v.extend_from_slice(&self.state);
        v.extend_from_slice(&self.action);
        v
    }
}

/// One replayed FSQ experience.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub phi: AuxiliaryState,
    pub direction: DirectionVector,
    pub reward: f64,
    pub phi_next: AuxiliaryState,
    pub terminal: bool,
}

impl Transition {
    pub fn new(
        phi: AuxiliaryState,
        direction: DirectionVector,
        reward: f64,
        phi_next: AuxiliaryState,
        terminal: bool,
    ) -> Result<Self> {
        if phi.state.len() != phi_next.state.len() {
            return Err(Error::Shape {
                context: "transition state",
                expected: phi.state.len(),
                got: phi_next.state.len(),
            });
        }
        if phi.action.len() != phi_next.action.len() || phi.action.len() != direction.len() {
            return Err(Error::Shape {
                context: "transition action",
                expected: phi.action.len(),
                got: phi_next.action.len().min(direction.len()),
            });
        }
        Ok(Self {
            phi,
            direction,
            reward,
            phi_next,
            terminal,
        })
    }
}

/// Per-episode summary streamed to the learning-curve sink.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    /// Undiscounted sum of rewards over the episode.
    #[serde(rename = "return")]
    pub undiscounted_return: f64,
    pub epsilon: f64,
    /// Mean loss over the episode's learn steps; NaN when none ran.
    pub mean_loss: f64,
}

/// Where the target of partition `j` is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetIndexMode {
    /// At the head of the direction actually taken in the transition.
    StoredDirection,
    /// At the argmax head of the target network's partition.
    PaperLiteral,
}

impl TargetIndexMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetIndexMode::StoredDirection => "stored_direction",
            TargetIndexMode::PaperLiteral => "paper_literal",
        }
    }
}

impl std::str::FromStr for TargetIndexMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stored_direction" => Ok(Self::StoredDirection),
            "paper_literal" => Ok(Self::PaperLiteral),
            other => Err(format!("unknown target index mode `{other}`")),
        }
    }
}

/// Learning hyperparameters. Defaults are the FSQ example settings:
/// memory 50000, sync every 1000 steps, batch 32, Adam at 5e-4, gamma 0.99,
/// epsilon 1.0 -> 0.1 at rate 0.001, 128 hidden units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub memory_size: usize,
    /// Steps between target network syncs (C).
    pub target_update_interval: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
    pub hidden_units: usize,
    pub use_per: bool,
    pub use_double_q: bool,
    pub target_index_mode: TargetIndexMode,
    pub execute_updated_action: bool,
    pub per_alpha: f64,
    pub per_beta0: f64,
    /// Global steps over which the PER importance exponent anneals to 1.
    pub per_beta_steps: usize,
    pub per_epsilon: f64,
    pub per_importance_weights: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            memory_size: 50_000,
            target_update_interval: 1000,
            batch_size: 32,
            learning_rate: 0.0005,
            gamma: 0.99,
            eps_max: 1.0,
            eps_min: 0.1,
            eps_decay: 0.001,
            hidden_units: 128,
            use_per: false,
            use_double_q: false,
            target_index_mode: TargetIndexMode::StoredDirection,
            execute_updated_action: true,
            per_alpha: 0.6,
            per_beta0: 0.4,
            per_beta_steps: 100_000,
            per_epsilon: 1e-3,
            per_importance_weights: true,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("memory_size", self.memory_size),
            ("target_update_interval", self.target_update_interval),
            ("batch_size", self.batch_size),
            ("hidden_units", self.hidden_units),
            ("per_beta_steps", self.per_beta_steps),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(Error::validation(key, "must be positive"));
            }
        }
        if self.batch_size > self.memory_size {
            return Err(Error::validation("batch_size", "exceeds memory_size"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::validation("gamma", format!("{} not in (0, 1]", self.gamma)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning_rate", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.eps_max) {
            return Err(Error::validation("eps_max", format!("{} not in [0, 1]", self.eps_max)));
        }
        if !(0.0..=self.eps_max).contains(&self.eps_min) {
            return Err(Error::validation(
                "eps_min",
                format!("{} not in [0, eps_max]", self.eps_min),
            ));
        }
        if !(self.eps_decay >= 0.0 && self.eps_decay.is_finite()) {
            return Err(Error::validation("eps_decay", "must be non-negative"));
        }
        if !(self.per_alpha >= 0.0 && self.per_alpha.is_finite()) {
            return Err(Error::validation("per_alpha", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.per_beta0) {
            return Err(Error::validation("per_beta0", "must lie in [0, 1]"));
        }
        if !(self.per_epsilon > 0.0 && self.per_epsilon.is_finite()) {
            return Err(Error::validation("per_epsilon", "must be positive"));
        }
        Ok(())
    }

    /// Exploration rate after `step` global steps:
    /// `eps_min + (eps_max - eps_min) * exp(-eps_decay * step)`.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        let eps = self.eps_min + (self.eps_max - self.eps_min) * (-self.eps_decay * step as f64).exp();
        eps.clamp(self.eps_min, self.eps_max)
    }

    /// PER importance exponent, annealed linearly from `per_beta0` to 1.
    pub fn per_beta_at(&self, step: u64) -> f64 {
        let progress = (step as f64 / self.per_beta_steps as f64).min(1.0);
        self.per_beta0 + (1.0 - self.per_beta0) * progress
    }
}

/// Maps a direction element to its head index: -1 -> 1, 0 -> 2, +1 -> 3.
pub fn direction_to_index(d: i64) -> Result<usize> {
    match d {
        -1 => Ok(1),
        0 => Ok(2),
        1 => Ok(3),
        other => Err(Error::InvalidDirection(other)),
    }
}

/// Inverse of [`direction_to_index`].
pub fn index_to_direction(k: usize) -> Result<i8> {
    match k {
        1 => Ok(-1),
        2 => Ok(0),
        3 => Ok(1),
        other => Err(Error::InvalidHeadIndex(other)),
    }
}

/// `clip(a + d * delta, low, high)`, element-wise.
pub fn integrate_action(
    action: &[f64],
    direction: &DirectionVector,
    spec: &ActionSpaceSpec,
) -> Result<Vec<f64>> {
    let m = spec.dims();
    if action.len() != m {
        return Err(Error::Shape {
            context: "integrate_action action",
            expected: m,
            got: action.len(),
        });
    }
    if direction.len() != m {
        return Err(Error::Shape {
            context: "integrate_action direction",
            expected: m,
            got: direction.len(),
        });
    }
    Ok((0..m)
        .map(|j| {
            let moved = action[j] + f64::from(direction.as_slice()[j]) * spec.delta[j];
            moved.clamp(spec.low[j], spec.high[j])
        })
        .collect())
}
