//! Finite Step Q-learning (FSQ).
//!
//! FSQ brings Q-learning to continuous action boxes by learning, for each
//! action coordinate, whether to lower it, hold it or raise it by a fixed
//! step. The Q-function takes the current action as part of its input and
//! has `3m` outputs for an `m`-dimensional action, against `k^m` for a
//! cartesian grid with `k` levels per coordinate.
//!
//! The crate contains the FSQ agent, a DQN baseline over discrete action
//! sets, a from-scratch MLP with Adam, uniform and prioritized replay,
//! small native environments, exact finite-MDP solvers used as oracles, and
//! the run harness behind the `fsq` binary.

pub mod approximator;
pub mod domain;
pub mod dqn;
pub mod encoding;
pub mod envs;
pub mod error;
pub mod fsq;
pub mod harness;
pub mod learner;
pub mod oracle;
pub mod replay;
pub mod seeding;

pub use domain::{
    direction_to_index, index_to_direction, integrate_action, ActionSpaceSpec, AgentConfig, AuxiliaryState,
    DirectionVector, EpisodeRecord, TargetIndexMode, Transition,
};
pub use error::{Error, Result};
pub use fsq::FsqAgent;
