use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rand::Rng;

use super::config::{Algo, RunConfig};
use super::curve::{first_success, CurveWriter};
use super::plot::render_svg;
use crate::approximator::checkpoint::Checkpoint;
use crate::approximator::QNetwork;
use crate::domain::{AuxiliaryState, EpisodeRecord};
use crate::dqn::{cartesian_discretize, DqnAgent, DEFAULT_ACTION_CAP};
use crate::encoding::{Encoding, FeatureMap};
use crate::envs::{make_env, EnvDescriptor, Environment, LatticeMdp};
use crate::error::{Error, Result};
use crate::fsq::FsqAgent;
use crate::learner::RecordSink;
use crate::oracle::{max_deviation_on, reachable_states, value_iteration, write_q_csv, FiniteMdp};
use crate::seeding::{stream_rng, RngStreams, Stream};

pub const SUCCESS_WINDOW: usize = 100;
pub const ORACLE_TOL: f64 = 1e-10;

pub const EXIT_SOLVED: i32 = 0;
pub const EXIT_EXHAUSTED: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Either learner, behind one interface for the harness.
#[derive(Clone, Debug)]
pub enum Agent {
    Fsq(FsqAgent),
    Dqn(DqnAgent),
}

impl Agent {
    pub fn build<R: Rng + ?Sized>(config: &RunConfig, desc: &EnvDescriptor, init_rng: &mut R) -> Result<Self> {
        Ok(match config.algo {
            Algo::Fsq => {
                let features = FeatureMap::for_fsq(config.encoding, desc)?;
                Agent::Fsq(FsqAgent::new(desc.action_spec.clone(), features, config.agent.clone(), init_rng)?)
            }
            Algo::Dqn => {
                let actions = cartesian_discretize(&desc.action_spec, config.dqn_levels, DEFAULT_ACTION_CAP)?;
                let features = FeatureMap::for_states(config.encoding, desc)?;
                Agent::Dqn(DqnAgent::new(actions, features, config.agent.clone(), init_rng)?)
            }
        })
    }

    pub fn from_network(net: QNetwork, config: &RunConfig, desc: &EnvDescriptor) -> Result<Self> {
        Ok(match config.algo {
            Algo::Fsq => {
                let features = FeatureMap::for_fsq(config.encoding, desc)?;
                Agent::Fsq(FsqAgent::from_network(net, desc.action_spec.clone(), features, config.agent.clone())?)
            }
            Algo::Dqn => {
                let actions = cartesian_discretize(&desc.action_spec, config.dqn_levels, DEFAULT_ACTION_CAP)?;
                let features = FeatureMap::for_states(config.encoding, desc)?;
                Agent::Dqn(DqnAgent::from_network(net, actions, features, config.agent.clone())?)
            }
        })
    }

    pub fn online(&self) -> &QNetwork {
        match self {
            Agent::Fsq(a) => a.online(),
            Agent::Dqn(a) => a.online(),
        }
    }

    pub fn train(
        &mut self,
        env: &mut dyn Environment,
        episodes: usize,
        streams: &mut RngStreams,
        sink: &mut dyn RecordSink,
    ) -> Result<Vec<EpisodeRecord>> {
        match self {
            Agent::Fsq(a) => a.train(env, episodes, streams, sink),
            Agent::Dqn(a) => a.train(env, episodes, streams, sink),
        }
    }

    pub fn evaluate<R: Rng>(&self, env: &mut dyn Environment, episodes: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Agent::Fsq(a) => a.evaluate(env, episodes, rng),
            Agent::Dqn(a) => a.evaluate(env, episodes, rng),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub records: Vec<EpisodeRecord>,
    pub threshold: Option<f64>,
    /// Episode index at which the rolling mean first met the threshold.
    pub solved_at: Option<usize>,
    pub exit_code: i32,
    pub curve_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Trains the configured agent, writing `curve.csv`, `curve.svg` and
/// `checkpoint.ckpt` into `out_dir`.
pub fn run_train(config: &RunConfig) -> Result<TrainOutcome> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let mut env = make_env(&config.env_name, &config.env_options())?;
    let desc = env.descriptor().clone();
    let threshold = desc.success_threshold;
    let mut streams = RngStreams::from_seed(config.seed);
    let mut agent = Agent::build(config, &desc, &mut streams.init)?;

    let curve_path = config.out_dir.join("curve.csv");
    let mut writer = CurveWriter::create(&curve_path)?;
    let mut records: Vec<EpisodeRecord> = Vec::with_capacity(config.episodes);
    let mut solved_at = None;

    for _ in 0..config.episodes {
        let episode = match agent.train(env.as_mut(), 1, &mut streams, &mut writer) {
            Ok(mut r) => r.remove(0),
            Err(e) => {
                writer.flush()?;
                log::error!("training aborted after {} episodes: {e}", records.len());
                return Err(e);
            }
        };
        records.push(episode);
        let n = records.len();
        let window = n.min(SUCCESS_WINDOW);
        let rolling = records[n - window..].iter().map(|r| r.undiscounted_return).sum::<f64>() / window as f64;
        if n.is_multiple_of(10) {
            log::info!(
                "episode {n}: rolling {window}-episode mean {rolling:.4}, epsilon {:.4}",
                records[n - 1].epsilon
            );
        }
        if solved_at.is_none() && n >= SUCCESS_WINDOW && threshold.is_some_and(|t| rolling >= t) {
            solved_at = Some(n - 1);
            log::info!("solved at episode {n}: rolling mean {rolling:.4} >= {:.4}", threshold.unwrap_or_default());
            if config.stop_on_success {
                break;
            }
        }
    }
    writer.flush()?;
    debug_assert_eq!(
        solved_at,
        threshold.and_then(|t| first_success(&records, SUCCESS_WINDOW, t))
    );

    let checkpoint_path = config.out_dir.join("checkpoint.ckpt");
    Checkpoint {
        network: agent.online().clone(),
        config: config.entries(),
    }
    .save(&checkpoint_path)?;
    fs::write(config.out_dir.join("curve.svg"), render_svg(&records, SUCCESS_WINDOW, threshold))?;

    Ok(TrainOutcome {
        exit_code: if solved_at.is_some() { EXIT_SOLVED } else { EXIT_EXHAUSTED },
        records,
        threshold,
        solved_at,
        curve_path,
        checkpoint_path,
    })
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub returns: Vec<f64>,
    pub mean_return: f64,
}

/// Greedy rollouts of a saved network. `env_name` overrides the
/// environment recorded in the checkpoint.
pub fn run_eval(checkpoint: &Path, env_name: Option<&str>, episodes: usize, seed: u64) -> Result<EvalReport> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let mut config = RunConfig::default();
    for (k, v) in &ckpt.config {
        config.set(k, v)?;
    }
    if let Some(name) = env_name {
        config.env_name = name.to_string();
    }
    config.validate()?;
    let mut env = make_env(&config.env_name, &config.env_options())?;
    let agent = Agent::from_network(ckpt.network, &config, env.descriptor())?;
    let mut rng = stream_rng(seed, Stream::Env);
    let returns = agent.evaluate(env.as_mut(), episodes, &mut rng)?;
    let mean_return = if returns.is_empty() {
        f64::NAN
    } else {
        returns.iter().sum::<f64>() / returns.len() as f64
    };
    Ok(EvalReport { returns, mean_return })
}

/// Learned Q-values on every `(state, lattice action)` pair, in the
/// auxiliary MDP's state order, one row of three heads each.
pub fn fsq_q_table(agent: &FsqAgent, env: &LatticeMdp) -> Result<Vec<Vec<f64>>> {
    let mut table = Vec::with_capacity(env.n_states() * env.lattice().len());
    for s in 0..env.n_states() {
        for &a in env.lattice() {
            table.push(agent.q_values(&AuxiliaryState::new(vec![s as f64], vec![a]))?);
        }
    }
    Ok(table)
}

pub fn dqn_q_table(agent: &DqnAgent, env: &LatticeMdp) -> Result<Vec<Vec<f64>>> {
    (0..env.n_states()).map(|s| agent.q_values(&[s as f64])).collect()
}

/// Exact MDP the configured agent actually faces on the lattice, with the
/// states its episodes can start in.
pub fn lattice_oracle(config: &RunConfig, env: &LatticeMdp) -> Result<(FiniteMdp, Vec<usize>)> {
    let gamma = config.agent.gamma;
    match config.algo {
        Algo::Fsq => Ok((
            env.fsq_mdp(gamma, config.agent.execute_updated_action)?,
            env.fsq_start_states(),
        )),
        Algo::Dqn => {
            let set = cartesian_discretize(&env.descriptor().action_spec, config.dqn_levels, DEFAULT_ACTION_CAP)?;
            let actions: Vec<f64> = set.actions().iter().map(|a| a[0]).collect();
            Ok((env.direct_mdp(&actions, gamma)?, (0..env.n_states()).collect()))
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub episodes_trained: usize,
    /// Rows of the tables that episodes can reach; only these are compared.
    pub reachable: Vec<bool>,
    pub oracle_q: Vec<Vec<f64>>,
    pub learned_q: Vec<Vec<f64>>,
}

pub fn agent_q_table(agent: &Agent, env: &LatticeMdp) -> Result<Vec<Vec<f64>>> {
    match agent {
        Agent::Fsq(a) => fsq_q_table(a, env),
        Agent::Dqn(a) => dqn_q_table(a, env),
    }
}

/// Trains with one-hot encoding on `lattice_mdp`, checking every
/// `oracle_check_every` episodes whether the learned table is within
/// `oracle_tolerance * reward span` of value iteration's `Q*` on every
/// reachable state. Unreachable states are never trained, so they are
/// excluded (with execute_updated_action, e.g. holding `a = +1` at the
/// left edge).
pub fn run_oracle_check(config: &RunConfig) -> Result<OracleReport> {
    let config = oracle_config(config)?;
    let lattice = oracle_lattice(&config)?;
    let mut streams = RngStreams::from_seed(config.seed);
    let agent = Agent::build(&config, lattice.descriptor(), &mut streams.init)?;
    oracle_check_agent(&config, agent, &mut streams)
}

fn oracle_config(config: &RunConfig) -> Result<RunConfig> {
    if config.env_name != "lattice_mdp" {
        return Err(Error::validation("env", "oracle-check needs env=lattice_mdp"));
    }
    let mut config = config.clone();
    config.encoding = Encoding::OneHot;
    config.validate()?;
    Ok(config)
}

fn oracle_lattice(config: &RunConfig) -> Result<LatticeMdp> {
    LatticeMdp::new(
        config.lattice_states,
        config.delta_a,
        config.max_steps.unwrap_or(LatticeMdp::DEFAULT_T),
    )
}

/// [`run_oracle_check`] starting from an existing agent, which must use the
/// one-hot encoding of the configured lattice.
pub fn oracle_check_agent(config: &RunConfig, mut agent: Agent, streams: &mut RngStreams) -> Result<OracleReport> {
    let config = oracle_config(config)?;
    let lattice = oracle_lattice(&config)?;
    let (mdp, starts) = lattice_oracle(&config, &lattice)?;
    let reachable = reachable_states(&mdp, &starts);
    let oracle_q = value_iteration(&mdp, ORACLE_TOL)?.q;
    let tolerance = config.oracle_tolerance * mdp.reward_span();

    let mut env = lattice.clone();
    let mut trained = 0;
    let mut learned_q = agent_q_table(&agent, &lattice)?;
    let mut deviation = max_deviation_on(&learned_q, &oracle_q, &reachable);
    while deviation > tolerance && trained < config.episodes {
        let chunk = config.oracle_check_every.min(config.episodes - trained);
        agent.train(&mut env, chunk, streams, &mut crate::learner::NullSink)?;
        trained += chunk;
        learned_q = agent_q_table(&agent, &lattice)?;
        deviation = max_deviation_on(&learned_q, &oracle_q, &reachable);
        log::info!("oracle-check: {trained} episodes, max deviation {deviation:.5} (tolerance {tolerance})");
    }

    if fs::create_dir_all(&config.out_dir).is_ok() {
        write_q_csv(File::create(config.out_dir.join("oracle_q.csv"))?, &oracle_q)?;
        write_q_csv(File::create(config.out_dir.join("learned_q.csv"))?, &learned_q)?;
    }
    Ok(OracleReport {
        passed: deviation <= tolerance,
        max_deviation: deviation,
        tolerance,
        episodes_trained: trained,
        reachable,
        oracle_q,
        learned_q,
    })
}
