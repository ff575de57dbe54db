//! Finite Step Q-learning.
//!
//! The agent works on auxiliary states `v = (s, a)` and picks, for each
//! action coordinate `j`, a direction `d[j]` in `{-1, 0, +1}`; the action
//! then moves by `d[j] * delta[j]`. The network carries one partition of
//! three heads per coordinate, so its output grows as `3m` rather than the
//! `k^m` of a cartesian grid. Every replayed transition gives a target to
//! all `m` partitions at once.

use rand::Rng;

use crate::approximator::QNetwork;
use crate::domain::{
    direction_to_index, integrate_action, ActionSpaceSpec, AgentConfig, AuxiliaryState, DirectionVector,
    EpisodeRecord, TargetIndexMode, Transition,
};
use crate::encoding::FeatureMap;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::learner::{mean_or_nan, LearnOutcome, QLearner, RecordSink, TargetBatch};
use crate::oracle::argmax;
use crate::replay::Sampled;
use crate::seeding::RngStreams;

/// Greedy direction per partition; ties go to the lowest head.
pub fn greedy_directions(outputs: &[f64]) -> DirectionVector {
    debug_assert_eq!(outputs.len() % 3, 0);
    let offsets: Vec<usize> = outputs.chunks_exact(3).map(argmax).collect();
    DirectionVector::from_head_offsets(&offsets).expect("argmax over three heads")
}

/// What [`FsqAgent::act`] decided.
#[derive(Clone, Debug, PartialEq)]
pub struct ActOutcome {
    /// Action sent to the environment.
    pub executed: Vec<f64>,
    pub direction: DirectionVector,
    /// `clip(a + d * delta)`, the action carried into the next auxiliary state.
    pub next_action: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FsqAgent {
    learner: QLearner<Transition>,
    spec: ActionSpaceSpec,
    features: FeatureMap,
    episodes_done: usize,
}

impl FsqAgent {
    pub fn new<R: Rng + ?Sized>(
        spec: ActionSpaceSpec,
        features: FeatureMap,
        config: AgentConfig,
        init_rng: &mut R,
    ) -> Result<Self> {
        let net = QNetwork::new_fsq(features.dim(), config.hidden_units, spec.dims(), init_rng);
        Self::from_network(net, spec, features, config)
    }

    /// Wraps existing parameters; both networks start equal to `net`.
    pub fn from_network(
        net: QNetwork,
        spec: ActionSpaceSpec,
        features: FeatureMap,
        config: AgentConfig,
    ) -> Result<Self> {
        if net.output_dim() != 3 * spec.dims() {
            return Err(Error::Shape {
                context: "fsq network output",
                expected: 3 * spec.dims(),
                got: net.output_dim(),
            });
        }
        if net.input_dim() != features.dim() {
            return Err(Error::Shape {
                context: "fsq network input",
                expected: features.dim(),
                got: net.input_dim(),
            });
        }
        Ok(Self {
            learner: QLearner::new(net, config)?,
            spec,
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

    pub fn config(&self) -> &AgentConfig {
        &self.learner.config
    }

    pub fn spec(&self) -> &ActionSpaceSpec {
        &self.spec
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn global_step(&self) -> u64 {
        self.learner.global_step()
    }

    pub fn epsilon(&self) -> f64 {
        self.learner.epsilon()
    }

    pub fn replay_len(&self) -> usize {
        self.learner.replay.len()
    }

    pub fn encode(&self, v: &AuxiliaryState) -> Vec<f64> {
        self.features.encode(&v.state, &v.action)
    }

    /// Online-network AQF outputs at `v`, `3m` values.
    pub fn q_values(&self, v: &AuxiliaryState) -> Result<Vec<f64>> {
        self.learner.online.forward(&self.encode(v))
    }

    /// Per coordinate: a uniform draw from `{-1, 0, 1}` with probability
    /// epsilon, otherwise the argmax of that coordinate's partition.
    pub fn select_directions<R: Rng + ?Sized>(&self, v: &AuxiliaryState, rng: &mut R) -> Result<DirectionVector> {
        self.select_directions_with(v, self.epsilon(), rng)
    }

    pub fn select_directions_with<R: Rng + ?Sized>(
        &self,
        v: &AuxiliaryState,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<DirectionVector> {
        let m = self.spec.dims();
        let explore: Vec<Option<i8>> = (0..m)
            .map(|_| (rng.gen::<f64>() < epsilon).then(|| rng.gen_range(-1i8..=1)))
            .collect();
        let greedy = if explore.iter().any(Option::is_none) {
            Some(greedy_directions(&self.q_values(v)?))
        } else {
            None
        };
        let d = explore
            .iter()
            .enumerate()
            .map(|(j, choice)| choice.unwrap_or_else(|| greedy.as_ref().expect("greedy computed").as_slice()[j]))
            .collect();
        DirectionVector::new(d)
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], action: &[f64], rng: &mut R) -> Result<ActOutcome> {
        self.act_with(state, action, self.epsilon(), rng)
    }

    pub fn act_with<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        action: &[f64],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<ActOutcome> {
        let v = AuxiliaryState::new(state.to_vec(), action.to_vec());
        let direction = self.select_directions_with(&v, epsilon, rng)?;
        let next_action = integrate_action(action, &direction, &self.spec)?;
        let executed = if self.config().execute_updated_action {
            next_action.clone()
        } else {
            action.to_vec()
        };
        Ok(ActOutcome {
            executed,
            direction,
            next_action,
        })
    }

    /// Targets for every partition of every transition. For partition `j`
    /// the value is `r` on terminal transitions, otherwise
    /// `r + gamma * max_k Qhat[j,k](phi_next)` (double-Q: the target net's
    /// value at the online net's argmax). It is written at the stored
    /// direction's head, or at the target net's argmax head under
    /// `TargetIndexMode::PaperLiteral`; the other two heads are masked out.
    pub fn build_targets(&self, batch: &[Transition]) -> Result<TargetBatch> {
        build_targets(
            &self.learner.online,
            &self.learner.target,
            &self.features,
            self.config(),
            batch.iter(),
        )
    }

    pub fn observe(&mut self, transition: Transition) {
        self.learner.replay.push(transition);
    }

    /// One minibatch regression step. Does not advance the global step.
    pub fn learn_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<LearnOutcome> {
        let features = &self.features;
        let config = self.learner.config.clone();
        self.learner.learn(rng, |online, target, batch: &[Sampled<Transition>]| {
            build_targets(online, target, features, &config, batch.iter().map(|s| &s.transition))
        })
    }

    /// Stores a transition, learns once and advances the global step,
    /// syncing the target network every `target_update_interval` steps.
    pub fn step_update<R: Rng + ?Sized>(&mut self, transition: Transition, replay_rng: &mut R) -> Result<LearnOutcome> {
        self.observe(transition);
        let outcome = self.learn_step(replay_rng)?;
        self.learner.advance();
        Ok(outcome)
    }

    /// Runs `episodes` episodes, streaming one record per episode to `sink`.
    /// Every episode starts from the zero action clipped into the box.
    pub fn train(
        &mut self,
        env: &mut dyn Environment,
        episodes: usize,
        streams: &mut RngStreams,
        sink: &mut dyn RecordSink,
    ) -> Result<Vec<EpisodeRecord>> {
        if env.descriptor().action_spec.dims() != self.spec.dims() {
            return Err(Error::Shape {
                context: "environment action dims",
                expected: self.spec.dims(),
                got: env.descriptor().action_spec.dims(),
            });
        }
        let mut records = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let record = self.run_episode(env, streams)?;
            sink.record(&record)?;
            records.push(record);
        }
        Ok(records)
    }

    fn run_episode(&mut self, env: &mut dyn Environment, streams: &mut RngStreams) -> Result<EpisodeRecord> {
        let mut state = env.reset(&mut streams.env);
        let mut action = self.spec.initial_action();
        let mut total = 0.0;
        let mut steps = 0;
        let mut losses = Vec::new();
        loop {
            let outcome = self.act(&state, &action, &mut streams.agent)?;
            let result = env.step(&outcome.executed)?;
            total += result.reward;
            steps += 1;
            let transition = Transition::new(
                AuxiliaryState::new(state, action),
                outcome.direction,
                result.reward,
                AuxiliaryState::new(result.state.clone(), outcome.next_action.clone()),
                result.terminal,
            )?;
            if let Some(loss) = self.step_update(transition, &mut streams.replay)?.loss() {
                losses.push(loss);
            }
            if result.done() {
                break;
            }
            state = result.state;
            action = outcome.next_action;
        }
        let record = EpisodeRecord {
            episode: self.episodes_done,
            steps,
            undiscounted_return: total,
            epsilon: self.epsilon(),
            mean_loss: mean_or_nan(&losses),
        };
        self.episodes_done += 1;
        Ok(record)
    }

    /// Greedy (epsilon = 0) episode returns, without learning.
    pub fn evaluate<R: Rng>(&self, env: &mut dyn Environment, episodes: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut returns = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut state = env.reset(rng);
            let mut action = self.spec.initial_action();
            let mut total = 0.0;
            loop {
                let outcome = self.act_with(&state, &action, 0.0, rng)?;
                let result = env.step(&outcome.executed)?;
                total += result.reward;
                if result.done() {
                    break;
                }
                state = result.state;
                action = outcome.next_action;
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
    batch: impl ExactSizeIterator<Item = &'a Transition>,
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
        let m = t.direction.len();
        if 3 * m != width {
            return Err(Error::Shape {
                context: "transition direction",
                expected: width / 3,
                got: m,
            });
        }
        let next_input = features.encode(&t.phi_next.state, &t.phi_next.action);
        let next_target = target.forward(&next_input)?;
        let next_online = if config.use_double_q {
            Some(online.forward(&next_input)?)
        } else {
            None
        };

        let mut y = vec![0.0; width];
        let mut mask = vec![false; width];
        for j in 0..m {
            let heads = &next_target[3 * j..3 * j + 3];
            let target_argmax = argmax(heads);
            let bootstrap = match &next_online {
                Some(q) => heads[argmax(&q[3 * j..3 * j + 3])],
                None => heads[target_argmax],
            };
            let value = if t.terminal {
                t.reward
            } else {
                t.reward + config.gamma * bootstrap
            };
            let head = match config.target_index_mode {
                TargetIndexMode::StoredDirection => direction_to_index(t.direction.as_slice()[j] as i64)? - 1,
                TargetIndexMode::PaperLiteral => target_argmax,
            };
            y[3 * j + head] = value;
            mask[3 * j + head] = true;
        }
        out.inputs.push(features.encode(&t.phi.state, &t.phi.action));
        out.targets.push(y);
        out.mask.push(mask);
    }
    Ok(out)
}
