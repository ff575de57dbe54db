use rand::{Rng, RngCore};

use super::{clip_action, EnvDescriptor, Environment, EpisodeClock, StepResult};
use crate::domain::ActionSpaceSpec;
use crate::error::{Error, Result};

/// A point in `[-2, 2]^2` steered towards the origin by a velocity command
/// in `[-1, 1]^2`: `p' = clip(p + h * a)`, reward `-|p'|` per step, plus a
/// bonus of 10 and termination once `|p'| < 0.05`.
#[derive(Clone, Debug)]
pub struct PointReacher {
    descriptor: EnvDescriptor,
    h: f64,
    position: [f64; 2],
    clock: EpisodeClock,
    clip_warnings: u64,
}

impl PointReacher {
    pub const DEFAULT_H: f64 = 0.05;
    pub const DEFAULT_T: usize = 100;
    pub const ARENA: f64 = 2.0;
    pub const GOAL_RADIUS: f64 = 0.05;
    pub const GOAL_BONUS: f64 = 10.0;
    /// Grid resolution per axis for the mean optimal return.
    pub const QUADRATURE_GRID: usize = 200;

    pub fn new(h: f64, max_steps: usize, delta_a: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Env(format!("point_reacher step h={h} must be positive")));
        }
        if max_steps == 0 {
            return Err(Error::Env("point_reacher needs max_steps >= 1".into()));
        }
        let mut env = Self {
            descriptor: EnvDescriptor {
                name: "point_reacher".into(),
                state_dim: 2,
                action_spec: ActionSpaceSpec::uniform(2, -1.0, 1.0, delta_a)?,
                max_steps,
                state_low: vec![-Self::ARENA; 2],
                state_high: vec![Self::ARENA; 2],
                discrete_states: None,
                success_threshold: None,
            },
            h,
            position: [0.0; 2],
            clock: EpisodeClock::default(),
            clip_warnings: 0,
        };
        let optimal = env.mean_optimal_return(Self::QUADRATURE_GRID);
        env.descriptor.success_threshold = Some(optimal - 0.1 * optimal.abs());
        Ok(env)
    }

    pub fn clip_warnings(&self) -> u64 {
        self.clip_warnings
    }

    /// Starts an episode from a chosen position.
    pub fn reset_to(&mut self, position: [f64; 2]) -> Vec<f64> {
        self.position = position.map(|x| x.clamp(-Self::ARENA, Self::ARENA));
        self.clock.start();
        self.position.to_vec()
    }

    /// Undiscounted return of heading straight for the origin at the
    /// largest speed the action box allows in that direction,
    /// `h / |u|_inf` for unit direction `u`.
    pub fn straight_line_return(&self, start: [f64; 2]) -> f64 {
        let r0 = start[0].hypot(start[1]);
        if r0 == 0.0 {
            return Self::GOAL_BONUS;
        }
        let speed = self.h * r0 / start[0].abs().max(start[1].abs());
        let radius = Self::GOAL_RADIUS;
        let reach_step = if r0 < radius {
            1
        } else {
            ((r0 - radius) / speed).floor() as usize + 1
        };
        let distance_sum = |k: usize| {
            let k_f = k as f64;
            k_f * r0 - speed * k_f * (k_f + 1.0) / 2.0
        };
        let max_steps = self.descriptor.max_steps;
        if reach_step > max_steps {
            return -distance_sum(max_steps);
        }
        // The last step may overshoot; the path stops at the origin.
        let overshoot = (reach_step as f64 * speed - r0).max(0.0);
        Self::GOAL_BONUS - (distance_sum(reach_step) + overshoot)
    }

    /// Mean of [`Self::straight_line_return`] over uniform starts, by the
    /// midpoint rule on a `grid x grid` lattice over the arena.
    pub fn mean_optimal_return(&self, grid: usize) -> f64 {
        let cell = 2.0 * Self::ARENA / grid as f64;
        let mut total = 0.0;
        for i in 0..grid {
            let x = -Self::ARENA + (i as f64 + 0.5) * cell;
            for j in 0..grid {
                let y = -Self::ARENA + (j as f64 + 0.5) * cell;
                total += self.straight_line_return([x, y]);
            }
        }
        total / (grid * grid) as f64
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

impl Environment for PointReacher {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let p = [
            rng.gen_range(-Self::ARENA..=Self::ARENA),
            rng.gen_range(-Self::ARENA..=Self::ARENA),
        ];
        self.reset_to(p)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let truncated = self.clock.tick(self.descriptor.max_steps)?;
        let a = clip_action(&self.descriptor.action_spec, action, &mut self.clip_warnings)?;
        for (p, a) in self.position.iter_mut().zip(&a) {
            *p = (*p + self.h * a).clamp(-Self::ARENA, Self::ARENA);
        }
        let distance = self.position[0].hypot(self.position[1]);
        let terminal = distance < Self::GOAL_RADIUS;
        let reward = if terminal { Self::GOAL_BONUS - distance } else { -distance };
        if terminal || truncated {
            self.clock.finish();
        }
        Ok(StepResult {
            state: self.position.to_vec(),
            reward,
            terminal,
            truncated: truncated && !terminal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env() -> PointReacher {
        PointReacher::new(0.05, 100, 0.75).unwrap()
    }

    /// Drives the environment itself along the straight line at full speed.
    fn simulate_straight_line(env: &mut PointReacher, start: [f64; 2]) -> f64 {
        let mut p = env.reset_to(start);
        let mut total = 0.0;
        loop {
            let norm_inf = p[0].abs().max(p[1].abs());
            let action = if norm_inf == 0.0 {
                vec![0.0, 0.0]
            } else {
                let dist = p[0].hypot(p[1]);
                let speed = env.h() * dist / norm_inf;
                let scale = (dist / speed).min(1.0);
                vec![-p[0] / norm_inf * scale, -p[1] / norm_inf * scale]
            };
            let out = env.step(&action).unwrap();
            total += out.reward;
            if out.done() {
                return total;
            }
            p = out.state;
        }
    }

    #[test]
    fn start_at_goal_terminates_immediately() {
        let mut e = env();
        e.reset_to([0.0, 0.0]);
        let out = e.step(&[0.3, -0.2]).unwrap();
        assert!(out.terminal);
        let dist = out.state[0].hypot(out.state[1]);
        assert!((out.reward - (10.0 - dist)).abs() < 1e-15);
    }

    #[test]
    fn one_euler_step() {
        let mut e = env();
        e.reset_to([1.0, 0.0]);
        let out = e.step(&[-1.0, 0.0]).unwrap();
        assert!((out.state[0] - 0.95).abs() < 1e-15);
        assert_eq!(out.state[1], 0.0);
        assert!((out.reward + 0.95).abs() < 1e-15);
        assert!(!out.done());
    }

    #[test]
    fn out_of_box_actions_are_clipped_and_counted() {
        let mut e = env();
        e.reset_to([1.0, 1.0]);
        let out = e.step(&[-3.0, 0.0]).unwrap();
        assert!((out.state[0] - 0.95).abs() < 1e-15);
        assert_eq!(e.clip_warnings(), 1);
    }

    #[test]
    fn closed_form_matches_simulated_path() {
        let mut sim = env();
        let reference = env();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut starts = vec![[0.0, 0.0], [0.01, 0.02], [2.0, 2.0], [-2.0, 0.3], [0.0, -1.7], [0.05, 0.0]];
        for _ in 0..500 {
            starts.push([rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)]);
        }
        for start in starts {
            let simulated = simulate_straight_line(&mut sim, start);
            let closed = reference.straight_line_return(start);
            assert!((simulated - closed).abs() < 1e-9, "{start:?}: {simulated} vs {closed}");
        }
    }

    #[test]
    fn truncated_paths_use_the_step_cap() {
        let mut sim = PointReacher::new(0.05, 10, 0.75).unwrap();
        let reference = PointReacher::new(0.05, 10, 0.75).unwrap();
        let start = [1.5, -0.5];
        let simulated = simulate_straight_line(&mut sim, start);
        assert!((simulated - reference.straight_line_return(start)).abs() < 1e-9);
        assert!(simulated < 0.0);
    }

    #[test]
    fn mean_optimal_return_converges_in_grid() {
        let e = env();
        let coarse = e.mean_optimal_return(100);
        let fine = e.mean_optimal_return(400);
        assert!((coarse - fine).abs() < 0.01, "{coarse} vs {fine}");
        let threshold = e.descriptor().success_threshold.unwrap();
        assert!(threshold < fine);
    }
}
