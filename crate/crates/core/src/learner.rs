//! Machinery shared by the FSQ and DQN agents: online and target networks,
//! Adam, replay, the masked regression step and the target sync schedule.

use rand::Rng;

use crate::approximator::{adam_step, clone_parameters, AdamState, QNetwork};
use crate::domain::AgentConfig;
use crate::error::Result;
use crate::replay::{Replay, Sampled};

/// Regression problem for one minibatch: inputs, full-width target rows and
/// the mask selecting which entries carry a target.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetBatch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LearnOutcome {
    /// Fewer than `batch_size` transitions stored; nothing changed.
    NotReady,
    Learned { loss: f64 },
}

impl LearnOutcome {
    pub fn loss(self) -> Option<f64> {
        match self {
            LearnOutcome::Learned { loss } => Some(loss),
            LearnOutcome::NotReady => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QLearner<T> {
    pub(crate) online: QNetwork,
    pub(crate) target: QNetwork,
    pub(crate) optimizer: AdamState,
    pub(crate) replay: Replay<T>,
    pub(crate) config: AgentConfig,
    global_step: u64,
    syncs: u64,
}

impl<T: Clone> QLearner<T> {
    pub fn new(online: QNetwork, config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let replay = if config.use_per {
            Replay::prioritized(
                config.memory_size,
                config.per_alpha,
                config.per_epsilon,
                config.per_importance_weights,
            )
        } else {
            Replay::uniform(config.memory_size)
        };
        Ok(Self {
            target: clone_parameters(&online),
            optimizer: AdamState::new(&online),
            online,
            replay,
            config,
            global_step: 0,
            syncs: 0,
        })
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon_at(self.global_step)
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    /// Counts one environment step; every `target_update_interval` steps the
    /// target network is overwritten with the online one. Returns whether a
    /// sync happened.
    pub fn advance(&mut self) -> bool {
        self.global_step += 1;
        if self.global_step.is_multiple_of(self.config.target_update_interval as u64) {
            self.target = clone_parameters(&self.online);
            self.syncs += 1;
            true
        } else {
            false
        }
    }

    /// Samples a minibatch, regresses the online network towards the targets
    /// produced by `build`, and refreshes PER priorities with the mean
    /// absolute residual over each transition's masked entries. On a numeric
    /// failure the parameters are left as they were.
    pub fn learn<R, F>(&mut self, rng: &mut R, build: F) -> Result<LearnOutcome>
    where
        R: Rng + ?Sized,
        F: FnOnce(&QNetwork, &QNetwork, &[Sampled<T>]) -> Result<TargetBatch>,
    {
        let beta = self.config.per_beta_at(self.global_step);
        let Some(batch) = self.replay.sample(self.config.batch_size, beta, rng) else {
            return Ok(LearnOutcome::NotReady);
        };
        let problem = build(&self.online, &self.target, &batch)?;
        let weights: Vec<f64> = batch.iter().map(|s| s.weight).collect();
        let weights = self.config.use_per.then_some(weights.as_slice());

        let (loss, grads, predictions) =
            match self
                .online
                .loss_and_gradients(&problem.inputs, &problem.targets, &problem.mask, weights)
            {
                Ok(out) => out,
                Err(e) => {
                    log::warn!("learn step aborted at global step {}: {e}", self.global_step);
                    return Err(e);
                }
            };
        adam_step(&mut self.online, &grads, &mut self.optimizer, self.config.learning_rate)?;

        if self.config.use_per {
            let indices: Vec<_> = batch.iter().map(|s| s.index).collect();
            let td_errors: Vec<f64> = predictions
                .iter()
                .zip(&problem.targets)
                .zip(&problem.mask)
                .map(|((q, y), mask)| mean_abs_residual(q, y, mask))
                .collect();
            self.replay.update_priorities(&indices, &td_errors);
        }
        Ok(LearnOutcome::Learned { loss })
    }
}

fn mean_abs_residual(q: &[f64], y: &[f64], mask: &[bool]) -> f64 {
    let (sum, count) = q
        .iter()
        .zip(y)
        .zip(mask)
        .filter(|(_, &on)| on)
        .fold((0.0, 0usize), |(s, c), ((q, y), _)| (s + (y - q).abs(), c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Destination for per-episode records.
pub trait RecordSink {
    fn record(&mut self, record: &crate::domain::EpisodeRecord) -> Result<()>;
}

impl RecordSink for Vec<crate::domain::EpisodeRecord> {
    fn record(&mut self, record: &crate::domain::EpisodeRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards records.
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _: &crate::domain::EpisodeRecord) -> Result<()> {
        Ok(())
    }
}

/// Mean of the learn-step losses, NaN when there were none.
pub(crate) fn mean_or_nan(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_abs_residual_over_masked_entries() {
        let q = [0.0, 5.0, 0.0, 3.0];
        let y = [1.0, 100.0, -1.0, 3.0];
        let mask = [true, false, true, false];
        assert_eq!(mean_abs_residual(&q, &y, &mask), 1.0);
    }
}
