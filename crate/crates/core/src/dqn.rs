//! Baseline DQN over a finite action set, plus the cartesian grid that
//! turns a continuous box into `k^m` discrete actions.

use rand::Rng;

use crate::approximator::QNetwork;
use crate::domain::{ActionSpaceSpec, AgentConfig, EpisodeRecord};
use crate::encoding::FeatureMap;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::learner::{mean_or_nan, LearnOutcome, QLearner, RecordSink, TargetBatch};
use crate::oracle::argmax;
use crate::replay::Sampled;
use crate::seeding::RngStreams;

pub const DEFAULT_ACTION_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteActionSet {
    actions: Vec<Vec<f64>>,
}

impl DiscreteActionSet {
    pub fn new(actions: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = actions.first() else {
            return Err(Error::validation("actions", "empty action set"));
        };
        let m = first.len();
        if actions.iter().any(|a| a.len() != m) {
            return Err(Error::validation("actions", "actions have differing dimensions"));
        }
        Ok(Self { actions })
    }

    pub fn count(&self) -> usize {
        self.actions.len()
    }

    pub fn get(&self, index: usize) -> &[f64] {
        &self.actions[index]
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn dims(&self) -> usize {
        self.actions[0].len()
    }
}

/// `k^m` without allocating; `None` on overflow.
pub fn cartesian_count(m: usize, k: usize) -> Option<u128> {
    u32::try_from(m).ok().and_then(|m| (k as u128).checked_pow(m))
}

/// `k` equally spaced levels per coordinate (both endpoints included) and
/// their full cartesian product. The last coordinate varies fastest.
pub fn cartesian_discretize(spec: &ActionSpaceSpec, k: usize, cap: u128) -> Result<DiscreteActionSet> {
    if k < 2 {
        return Err(Error::validation("levels", format!("need at least 2 levels, got {k}")));
    }
    let count = cartesian_count(spec.dims(), k).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::Blowup { count, cap });
    }
    let levels: Vec<Vec<f64>> = (0..spec.dims())
        .map(|j| {
            let (lo, hi) = (spec.low()[j], spec.high()[j]);
            (0..k)
                .map(|i| {
                    if i == k - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (k - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut actions = Vec::with_capacity(count as usize);
    for flat in 0..count as usize {
        let mut rest = flat;
        let mut action = vec![0.0; spec.dims()];
        for j in (0..spec.dims()).rev() {
            action[j] = levels[j][rest % k];
            rest /= k;
        }
        actions.push(action);
    }
    DiscreteActionSet::new(actions)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTransition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Clone, Debug)]
pub struct DqnAgent {
    learner: QLearner<DiscreteTransition>,
    actions: DiscreteActionSet,
    features: FeatureMap,
    episodes_done: usize,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(
        actions: DiscreteActionSet,
        features: FeatureMap,
        config: AgentConfig,
        init_rng: &mut R,
    ) -> Result<Self> {
        let net = QNetwork::new(features.dim(), config.hidden_units, actions.count(), init_rng);
        Self::from_network(net, actions, features, config)
    }

    pub fn from_network(
        net: QNetwork,
        actions: DiscreteActionSet,
        features: FeatureMap,
        config: AgentConfig,
    ) -> Result<Self> {
        if net.output_dim() != actions.count() {
            return Err(Error::Shape {
                context: "dqn network output",
                expected: actions.count(),
                got: net.output_dim(),
            });
        }
        if net.input_dim() != features.dim() {
            return Err(Error::Shape {
                context: "dqn network input",
                expected: features.dim(),
                got: net.input_dim(),
            });
        }
        Ok(Self {
            learner: QLearner::new(net, config)?,
            actions,
            features,
            episodes_done: 0,
        })
    }

    pub fn online(&self) -> &QNetwork {
        &self.learner.online
    }

    pub fn target(&self) -> &QNetwork {
        &self.learner.target
    }

    pub fn actions(&self) -> &DiscreteActionSet {
        &self.actions
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn config(&self) -> &AgentConfig {
        &self.learner.config
    }

    pub fn epsilon(&self) -> f64 {
        self.learner.epsilon()
    }

    pub fn global_step(&self) -> u64 {
        self.learner.global_step()
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.learner.online.forward(&self.features.encode(state, &[]))
    }

    pub fn select_action<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        if rng.gen::<f64>() < epsilon {
            Ok(rng.gen_range(0..self.actions.count()))
        } else {
            Ok(argmax(&self.q_values(state)?))
        }
    }

    /// Single-head targets: `r` on terminal transitions, otherwise
    /// `r + gamma * max_a' Qhat(s', a')`, written only at the taken action.
    pub fn build_targets(&self, batch: &[DiscreteTransition]) -> Result<TargetBatch> {
        build_targets(
            &self.learner.online,
            &self.learner.target,
            &self.features,
            self.config(),
            batch.iter(),
        )
    }

    pub fn observe(&mut self, transition: DiscreteTransition) {
        self.learner.replay.push(transition);
    }

    pub fn learn_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<LearnOutcome> {
        let features = &self.features;
        let config = self.learner.config.clone();
        self.learner.learn(rng, |online, target, batch: &[Sampled<DiscreteTransition>]| {
            build_targets(online, target, features, &config, batch.iter().map(|s| &s.transition))
        })
    }

    pub fn step_update<R: Rng + ?Sized>(
        &mut self,
        transition: DiscreteTransition,
        replay_rng: &mut R,
    ) -> Result<LearnOutcome> {
        self.observe(transition);
        let outcome = self.learn_step(replay_rng)?;
        self.learner.advance();
        Ok(outcome)
    }

    pub fn train(
        &mut self,
        env: &mut dyn Environment,
        episodes: usize,
        streams: &mut RngStreams,
        sink: &mut dyn RecordSink,
    ) -> Result<Vec<EpisodeRecord>> {
        if env.descriptor().action_spec.dims() != self.actions.dims() {
            return Err(Error::Shape {
                context: "environment action dims",
                expected: self.actions.dims(),
                got: env.descriptor().action_spec.dims(),
            });
        }
        let mut records = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut state = env.reset(&mut streams.env);
            let mut total = 0.0;
            let mut steps = 0;
            let mut losses = Vec::new();
            loop {
                let action = self.select_action(&state, self.epsilon(), &mut streams.agent)?;
                let result = env.step(self.actions.get(action))?;
                total += result.reward;
                steps += 1;
                let transition = DiscreteTransition {
                    state,
                    action,
                    reward: result.reward,
                    next_state: result.state.clone(),
                    terminal: result.terminal,
                };
                if let Some(loss) = self.step_update(transition, &mut streams.replay)?.loss() {
                    losses.push(loss);
                }
                if result.done() {
                    break;
                }
                state = result.state;
            }
            let record = EpisodeRecord {
                episode: self.episodes_done,
                steps,
                undiscounted_return: total,
                epsilon: self.epsilon(),
                mean_loss: mean_or_nan(&losses),
            };
            self.episodes_done += 1;
            sink.record(&record)?;
            records.push(record);
        }
        Ok(records)
    }

    pub fn evaluate<R: Rng>(&self, env: &mut dyn Environment, episodes: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut returns = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut state = env.reset(rng);
            let mut total = 0.0;
            loop {
                let action = self.select_action(&state, 0.0, rng)?;
                let result = env.step(self.actions.get(action))?;
                total += result.reward;
                if result.done() {
                    break;
                }
                state = result.state;
            }
            returns.push(total);
        }
        Ok(returns)
    }
}

fn build_targets<'a>(
    online: &QNetwork,
    target: &QNetwork,
    features: &FeatureMap,
    config: &AgentConfig,
    batch: impl ExactSizeIterator<Item = &'a DiscreteTransition>,
) -> Result<TargetBatch> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::DegenerateLoss);
    }
    let width = online.output_dim();
    let mut out = TargetBatch {
        inputs: Vec::with_capacity(n),
        targets: Vec::with_capacity(n),
        mask: Vec::with_capacity(n),
    };
    for t in batch {
        if t.action >= width {
            return Err(Error::Shape {
                context: "dqn action index",
                expected: width,
                got: t.action,
            });
        }
        let value = if t.terminal {
            t.reward
        } else {
            let next_input = features.encode(&t.next_state, &[]);
            let next_target = target.forward(&next_input)?;
            let bootstrap = if config.use_double_q {
                next_target[argmax(&online.forward(&next_input)?)]
            } else {
                next_target[argmax(&next_target)]
            };
            t.reward + config.gamma * bootstrap
        };
        let mut y = vec![0.0; width];
        let mut mask = vec![false; width];
        y[t.action] = value;
        mask[t.action] = true;
        out.inputs.push(features.encode(&t.state, &[]));
        out.targets.push(y);
        out.mask.push(mask);
    }
    Ok(out)
}
