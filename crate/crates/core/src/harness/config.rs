//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected; missing keys take their defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::domain::{AgentConfig, TargetIndexMode};
use crate::encoding::Encoding;
use crate::envs::{EnvOptions, ENV_NAMES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Fsq,
    Dqn,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Fsq => "fsq",
            Algo::Dqn => "dqn",
        }
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fsq" => Ok(Algo::Fsq),
            "dqn" => Ok(Algo::Dqn),
            other => Err(format!("unknown algorithm `{other}`, expected fsq or dqn")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env_name: String,
    pub algo: Algo,
    pub agent: AgentConfig,
    pub episodes: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub delta_a: f64,
    pub encoding: Encoding,
    pub lattice_states: usize,
    /// Episode cap; `None` uses the environment's default.
    pub max_steps: Option<usize>,
    /// Levels per coordinate for DQN's cartesian grid.
    pub dqn_levels: usize,
    pub stop_on_success: bool,
    /// Oracle-check tolerance as a fraction of the reward span.
    pub oracle_tolerance: f64,
    pub oracle_check_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env_name: "point_reacher".into(),
            algo: Algo::Fsq,
            agent: AgentConfig::default(),
            episodes: 500,
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            delta_a: 0.75,
            encoding: Encoding::Identity,
            lattice_states: 3,
            max_steps: None,
            dqn_levels: 3,
            stop_on_success: true,
            oracle_tolerance: 0.05,
            oracle_check_every: 100,
        }
    }
}

pub const KEYS: &[&str] = &[
    "env",
    "algo",
    "episodes",
    "seed",
    "out_dir",
    "memory_size",
    "target_update_interval",
    "batch_size",
    "learning_rate",
    "gamma",
    "eps_max",
    "eps_min",
    "eps_decay",
    "delta_a",
    "hidden_units",
    "use_per",
    "use_double_q",
    "target_index_mode",
    "execute_updated_action",
    "per_alpha",
    "per_beta0",
    "per_beta_steps",
    "per_epsilon",
    "per_importance_weights",
    "encoding",
    "lattice_states",
    "max_steps",
    "dqn_levels",
    "stop_on_success",
    "oracle_tolerance",
    "oracle_check_every",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::validation(key, format!("cannot parse `{value}`: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected key=value, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unknown key `{key}`"),
                });
            }
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let agent = &mut self.agent;
        match key {
            "env" => self.env_name = value.to_string(),
            "algo" => self.algo = parse(key, value)?,
            "episodes" => self.episodes = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "memory_size" => agent.memory_size = parse(key, value)?,
            "target_update_interval" => agent.target_update_interval = parse(key, value)?,
            "batch_size" => agent.batch_size = parse(key, value)?,
            "learning_rate" => agent.learning_rate = parse(key, value)?,
            "gamma" => agent.gamma = parse(key, value)?,
            "eps_max" => agent.eps_max = parse(key, value)?,
            "eps_min" => agent.eps_min = parse(key, value)?,
            "eps_decay" => agent.eps_decay = parse(key, value)?,
            "delta_a" => self.delta_a = parse(key, value)?,
            "hidden_units" => agent.hidden_units = parse(key, value)?,
            "use_per" => agent.use_per = parse(key, value)?,
            "use_double_q" => agent.use_double_q = parse(key, value)?,
            "target_index_mode" => agent.target_index_mode = parse::<TargetIndexMode>(key, value)?,
            "execute_updated_action" => agent.execute_updated_action = parse(key, value)?,
            "per_alpha" => agent.per_alpha = parse(key, value)?,
            "per_beta0" => agent.per_beta0 = parse(key, value)?,
            "per_beta_steps" => agent.per_beta_steps = parse(key, value)?,
            "per_epsilon" => agent.per_epsilon = parse(key, value)?,
            "per_importance_weights" => agent.per_importance_weights = parse(key, value)?,
            "encoding" => self.encoding = parse(key, value)?,
            "lattice_states" => self.lattice_states = parse(key, value)?,
            "max_steps" => self.max_steps = Some(parse(key, value)?),
            "dqn_levels" => self.dqn_levels = parse(key, value)?,
            "stop_on_success" => self.stop_on_success = parse(key, value)?,
            "oracle_tolerance" => self.oracle_tolerance = parse(key, value)?,
            "oracle_check_every" => self.oracle_check_every = parse(key, value)?,
            other => return Err(Error::validation(other, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if !ENV_NAMES.contains(&self.env_name.as_str()) {
            return Err(Error::validation(
                "env",
                format!("unknown environment `{}`; available: {}", self.env_name, ENV_NAMES.join(", ")),
            ));
        }
        if !(self.delta_a > 0.0 && self.delta_a.is_finite()) {
            return Err(Error::validation("delta_a", "must be positive"));
        }
        if self.dqn_levels < 2 {
            return Err(Error::validation("dqn_levels", "must be at least 2"));
        }
        if self.max_steps == Some(0) {
            return Err(Error::validation("max_steps", "must be positive"));
        }
        if self.oracle_tolerance.is_nan() || self.oracle_tolerance <= 0.0 {
            return Err(Error::validation("oracle_tolerance", "must be positive"));
        }
        if self.oracle_check_every == 0 {
            return Err(Error::validation("oracle_check_every", "must be positive"));
        }
        Ok(())
    }

    pub fn env_options(&self) -> EnvOptions {
        EnvOptions {
            delta_a: self.delta_a,
            lattice_states: self.lattice_states,
            max_steps: self.max_steps,
        }
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let a = &self.agent;
        let mut out: Vec<(&str, String)> = vec![
            ("env", self.env_name.clone()),
            ("algo", self.algo.as_str().into()),
            ("episodes", self.episodes.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("memory_size", a.memory_size.to_string()),
            ("target_update_interval", a.target_update_interval.to_string()),
            ("batch_size", a.batch_size.to_string()),
            ("learning_rate", a.learning_rate.to_string()),
            ("gamma", a.gamma.to_string()),
            ("eps_max", a.eps_max.to_string()),
            ("eps_min", a.eps_min.to_string()),
            ("eps_decay", a.eps_decay.to_string()),
            ("delta_a", self.delta_a.to_string()),
            ("hidden_units", a.hidden_units.to_string()),
            ("use_per", a.use_per.to_string()),
            ("use_double_q", a.use_double_q.to_string()),
            ("target_index_mode", a.target_index_mode.as_str().into()),
            ("execute_updated_action", a.execute_updated_action.to_string()),
            ("per_alpha", a.per_alpha.to_string()),
            ("per_beta0", a.per_beta0.to_string()),
            ("per_beta_steps", a.per_beta_steps.to_string()),
            ("per_epsilon", a.per_epsilon.to_string()),
            ("per_importance_weights", a.per_importance_weights.to_string()),
            ("encoding", self.encoding.as_str().into()),
            ("lattice_states", self.lattice_states.to_string()),
        ];
        if let Some(t) = self.max_steps {
            out.push(("max_steps", t.to_string()));
        }
        out.extend([
            ("dqn_levels", self.dqn_levels.to_string()),
            ("stop_on_success", self.stop_on_success.to_string()),
            ("oracle_tolerance", self.oracle_tolerance.to_string()),
            ("oracle_check_every", self.oracle_check_every.to_string()),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(text, "{k}={v}");
        }
        text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Reads a run configuration; alias of [`RunConfig::load`].
pub fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path)
}
