//! Gaussian-policy gradient descent on a noisy Ackley landscape.
//!
//! Each step draws a group of samples around the current mean, scores them
//! with `-ackley(s) + noise`, standardizes the rewards within the group,
//! forms the REINFORCE gradient and takes an Adam step on the mean.

mod ackley;
mod adam;
mod policy;

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use self::ackley::ackley;
pub use self::adam::{adam_step, AdamConfig, AdamState};
pub use self::policy::{noisy_rewards, policy_gradient, reinforce_loss, sample_group, GaussianPolicy, SampleGroup};
use crate::advantage::{group_advantages, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type Vec2 = [f64; 2];

/// Child index of a run stream used for policy sampling.
pub const SAMPLING_STREAM: u64 = 0;
/// Child index of a run stream used for reward noise.
pub const REWARD_NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub steps: usize,
    pub group_size: usize,
    pub policy_std: f64,
    pub sigma_noise: f64,
    pub adam: AdamConfig,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            group_size: 16,
            policy_std: 0.24,
            sigma_noise: 0.0,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerRun {
    pub config: ToyConfig,
    pub stream: RngStream,
    /// Policy means, `steps + 1` entries starting at the start point.
    pub trajectory: Vec<Vec2>,
    /// Clean reward `-ackley(mean)` at every trajectory point.
    pub step_rewards: Vec<f64>,
    pub final_adam: AdamState,
}

impl OptimizerRun {
    pub fn start(&self) -> Vec2 {
        self.trajectory[0]
    }

    pub fn final_mean(&self) -> Vec2 {
        *self.trajectory.last().expect("trajectory is never empty")
    }

    pub fn final_distance(&self) -> f64 {
        let [x, y] = self.final_mean();
        x.hypot(y)
    }

    pub fn final_reward(&self) -> f64 {
        *self.step_rewards.last().expect("rewards are never empty")
    }

    /// Highest clean reward and the first step reaching it.
    pub fn best(&self) -> (f64, usize) {
        best_with_index(&self.step_rewards)
    }
}

pub(crate) fn best_with_index(curve: &[f64]) -> (f64, usize) {
    curve.iter().enumerate().fold(
        (f64::NEG_INFINITY, 0),
        |(best, at), (i, &r)| {
            if r > best {
                (r, i)
            } else {
                (best, at)
            }
        },
    )
}

/// Runs the optimizer from `start`.
///
/// Step `t` draws its samples from `stream.child(SAMPLING_STREAM).child(t)` and
/// its reward noise from `stream.child(REWARD_NOISE_STREAM).child(t)`, so runs
/// that differ only in `sigma_noise` see identical sampling noise.
pub fn run_optimization(start: Vec2, config: &ToyConfig, stream: RngStream) -> Result<OptimizerRun> {
    if config.steps == 0 {
        return Err(Error::param("steps", 0, "must be at least 1"));
    }
    if config.group_size == 0 {
        return Err(Error::EmptyGroup);
    }
    let mut policy = GaussianPolicy::new(start, config.policy_std)?;
    let mut adam = AdamState::new(config.adam);
    let sampling = stream.child(SAMPLING_STREAM);
    let noise = stream.child(REWARD_NOISE_STREAM);

    let mut trajectory = Vec::with_capacity(config.steps + 1);
    let mut step_rewards = Vec::with_capacity(config.steps + 1);
    trajectory.push(start);
    step_rewards.push(-ackley(start));

    for t in 0..config.steps as u64 {
        let group = sample_group(&policy, config.group_size, &sampling.child(t))?;
        let group = noisy_rewards(group, config.sigma_noise, &noise.child(t))?;
        let rewards = group.rewards.as_deref().expect("rewards were just filled");
        let adv = group_advantages(rewards, DEFAULT_EPSILON)?;
        let grad = policy_gradient(&adv.advantages, &group.epsilons, policy.std())?;
        let (next, mean) = adam.step(grad, policy.mean());
        adam = next;
        policy = policy.with_mean(mean);
        trajectory.push(mean);
        step_rewards.push(-ackley(mean));
    }

    Ok(OptimizerRun {
        config: *config,
        stream,
        trajectory,
        step_rewards,
        final_adam: adam,
    })
}

/// `count` points on the circle of `radius` around the origin, with
/// independent uniform angles.
pub fn circle_starts(radius: f64, count: usize, rng: &RngStream) -> Result<Vec<Vec2>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", radius, "must be positive and finite"));
    }
    if count == 0 {
        return Err(Error::param("count", 0, "must be at least 1"));
    }
    let mut gen = rng.rng();
    Ok((0..count)
        .map(|_| {
            let theta = gen.random::<f64>() * TAU;
            [radius * theta.cos(), radius * theta.sin()]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_bookkeeping() {
        let cfg = ToyConfig {
            steps: 1,
            ..ToyConfig::default()
        };
        let run = run_optimization([3.0, 3.0], &cfg, RngStream::new(1, 0)).unwrap();
        assert_eq!(run.trajectory.len(), 2);
        assert_eq!(run.step_rewards.len(), 2);
        assert_eq!(run.start(), [3.0, 3.0]);
        assert_eq!(run.final_adam.step_count, 1);
    }

    #[test]
    fn rejects_zero_steps() {
        let cfg = ToyConfig {
            steps: 0,
            ..ToyConfig::default()
        };
        assert!(run_optimization([0.0, 0.0], &cfg, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn circle_points_have_exact_radius() {
        let pts = circle_starts(10.0, 100, &RngStream::new(5, 0)).unwrap();
        for [x, y] in &pts {
            assert!((x.hypot(*y) - 10.0).abs() < 1e-12);
        }
        let three = circle_starts(10.0, 3, &RngStream::new(5, 1)).unwrap();
        assert!(three[0] != three[1] && three[1] != three[2] && three[0] != three[2]);
        assert!(circle_starts(0.0, 3, &RngStream::new(5, 1)).is_err());
        assert!(circle_starts(-1.0, 3, &RngStream::new(5, 1)).is_err());
    }

    #[test]
    fn best_prefers_first_maximum() {
        assert_eq!(best_with_index(&[-3.0, -1.0, -2.0, -1.0]), (-1.0, 1));
    }
}
