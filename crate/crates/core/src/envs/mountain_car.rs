use rand::{Rng, RngCore};

use super::{clip_action, EnvDescriptor, Environment, EpisodeClock, StepResult};
use crate::domain::ActionSpaceSpec;
use crate::error::Result;

/// Continuous mountain car. State is `(position, velocity)`; the single
/// action is a throttle in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct MountainCar {
    descriptor: EnvDescriptor,
    position: f64,
    velocity: f64,
    clock: EpisodeClock,
    clip_warnings: u64,
}

impl MountainCar {
    pub const DEFAULT_T: usize = 999;
    pub const MIN_POSITION: f64 = -1.2;
    pub const MAX_POSITION: f64 = 0.6;
    pub const MAX_SPEED: f64 = 0.07;
    pub const GOAL_POSITION: f64 = 0.45;
    pub const POWER: f64 = 0.0015;
    pub const GRAVITY: f64 = 0.0025;
    pub const GOAL_REWARD: f64 = 100.0;

    pub fn new(max_steps: usize, delta_a: f64) -> Result<Self> {
        Ok(Self {
            descriptor: EnvDescriptor {
                name: "mountain_car".into(),
                state_dim: 2,
                action_spec: ActionSpaceSpec::uniform(1, -1.0, 1.0, delta_a)?,
                max_steps,
                state_low: vec![Self::MIN_POSITION, -Self::MAX_SPEED],
                state_high: vec![Self::MAX_POSITION, Self::MAX_SPEED],
                discrete_states: None,
                success_threshold: Some(90.0),
            },
            position: -0.5,
            velocity: 0.0,
            clock: EpisodeClock::default(),
            clip_warnings: 0,
        })
    }

    pub fn reset_to(&mut self, position: f64, velocity: f64) -> Vec<f64> {
        self.position = position.clamp(Self::MIN_POSITION, Self::MAX_POSITION);
        self.velocity = velocity.clamp(-Self::MAX_SPEED, Self::MAX_SPEED);
        self.clock.start();
        vec![self.position, self.velocity]
    }

    pub fn clip_warnings(&self) -> u64 {
        self.clip_warnings
    }
}

impl Environment for MountainCar {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let position = rng.gen_range(-0.6..=-0.4);
        self.reset_to(position, 0.0)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let truncated = self.clock.tick(self.descriptor.max_steps)?;
        let force = clip_action(&self.descriptor.action_spec, action, &mut self.clip_warnings)?[0];

        self.velocity += force * Self::POWER - Self::GRAVITY * (3.0 * self.position).cos();
        self.velocity = self.velocity.clamp(-Self::MAX_SPEED, Self::MAX_SPEED);
        self.position = (self.position + self.velocity).clamp(Self::MIN_POSITION, Self::MAX_POSITION);
        if self.position == Self::MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }

        let terminal = self.position >= Self::GOAL_POSITION;
        let mut reward = -0.1 * force * force;
        if terminal {
            reward += Self::GOAL_REWARD;
        }
        if terminal || truncated {
            self.clock.finish();
        }
        Ok(StepResult {
            state: vec![self.position, self.velocity],
            reward,
            terminal,
            truncated: truncated && !terminal,
        })
    }
}
