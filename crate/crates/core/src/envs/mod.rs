//! Episodic environments with continuous action boxes.

mod lattice;
mod mountain_car;
mod point_reacher;

pub use lattice::LatticeMdp;
pub use mountain_car::MountainCar;
pub use point_reacher::PointReacher;

use std::fmt;

use rand::RngCore;

use crate::domain::ActionSpaceSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EnvDescriptor {
    pub name: String,
    pub state_dim: usize,
    pub action_spec: ActionSpaceSpec,
    /// Episode length cap T; reaching it truncates without a terminal flag.
    pub max_steps: usize,
    pub state_low: Vec<f64>,
    pub state_high: Vec<f64>,
    /// Number of states when the state is a single integer index.
    pub discrete_states: Option<usize>,
    /// Rolling-100 mean return that counts as solved.
    pub success_threshold: Option<f64>,
}

impl fmt::Display for EnvDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spec = &self.action_spec;
        write!(
            f,
            "{:<14} state_dim={} action_dims={} action_box=[{:?}, {:?}] delta={:?} max_steps={}",
            self.name,
            self.state_dim,
            spec.dims(),
            spec.low(),
            spec.high(),
            spec.delta(),
            self.max_steps
        )?;
        match self.success_threshold {
            Some(t) => write!(f, " success_threshold={t:.4}"),
            None => write!(f, " success_threshold=none"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub state: Vec<f64>,
    pub reward: f64,
    /// True termination: the next state has no future.
    pub terminal: bool,
    /// The step cap was hit; the state still has a future.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Environment {
    fn descriptor(&self) -> &EnvDescriptor;

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Advances one step. Calling `step` after the episode ended, or before
    /// the first `reset`, is a protocol error.
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

/// Tracks the episode contract shared by all environments.
#[derive(Clone, Debug, Default)]
pub(crate) struct EpisodeClock {
    t: usize,
    active: bool,
}

impl EpisodeClock {
    pub(crate) fn start(&mut self) {
        self.t = 0;
        self.active = true;
    }

    pub(crate) fn tick(&mut self, max_steps: usize) -> Result<bool> {
        if !self.active {
            return Err(Error::Protocol("step called outside an active episode; call reset".into()));
        }
        self.t += 1;
        Ok(self.t >= max_steps)
    }

    pub(crate) fn finish(&mut self) {
        self.active = false;
    }
}

/// Clips `action` into the box, bumping `warnings` if anything moved.
pub(crate) fn clip_action(spec: &ActionSpaceSpec, action: &[f64], warnings: &mut u64) -> Result<Vec<f64>> {
    if action.len() != spec.dims() {
        return Err(Error::Shape {
            context: "environment action",
            expected: spec.dims(),
            got: action.len(),
        });
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("environment action"));
    }
    if !spec.contains(action) {
        *warnings += 1;
        log::debug!("action {action:?} outside box, clipped");
    }
    Ok(spec.clip(action))
}

/// Construction options for [`make_env`].
#[derive(Clone, Debug, PartialEq)]
pub struct EnvOptions {
    pub delta_a: f64,
    pub lattice_states: usize,
    pub max_steps: Option<usize>,
}

impl Default for EnvOptions {
    fn default() -> Self {
        Self {
            delta_a: 0.75,
            lattice_states: 3,
            max_steps: None,
        }
    }
}

impl EnvOptions {
    /// Defaults for `name`; the lattice needs `1/delta_a` integral, so it gets 1.0.
    pub fn for_env(name: &str) -> Self {
        let mut opts = Self::default();
        if name == "lattice_mdp" {
            opts.delta_a = 1.0;
        }
        opts
    }
}

pub const ENV_NAMES: [&str; 3] = ["point_reacher", "mountain_car", "lattice_mdp"];

pub fn make_env(name: &str, options: &EnvOptions) -> Result<Box<dyn Environment + Send>> {
    Ok(match name {
        "point_reacher" => Box::new(PointReacher::new(
            PointReacher::DEFAULT_H,
            options.max_steps.unwrap_or(PointReacher::DEFAULT_T),
            options.delta_a,
        )?),
        "mountain_car" => Box::new(MountainCar::new(
            options.max_steps.unwrap_or(MountainCar::DEFAULT_T),
            options.delta_a,
        )?),
        "lattice_mdp" => Box::new(LatticeMdp::new(
            options.lattice_states,
            options.delta_a,
            options.max_steps.unwrap_or(LatticeMdp::DEFAULT_T),
        )?),
        other => {
            return Err(Error::Env(format!(
                "unknown environment `{other}`; available: {}",
                ENV_NAMES.join(", ")
            )))
        }
    })
}
