//! Group-relative advantages.
//!
//! Each rollout's reward is standardized against its own group:
//!
//! ```text
//! A_i = (r_i - mean(r)) / (std(r) + eps)
//! ```
//!
//! with the population standard deviation. Complementing every reward
//! (`r -> 1 - r`, what a whole-matrix flip does to pass fractions) maps the
//! mean to `1 - mean` and leaves the deviation alone, so it negates every
//! advantage and reverses the policy-gradient direction.

use crate::error::{Error, Result};

/// Stabilizer added to the group standard deviation.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAdvantages {
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub group_mean: f64,
    /// Population standard deviation (divides by `G`).
    pub group_std: f64,
    pub epsilon: f64,
}

pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<GroupAdvantages> {
    if rewards.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", epsilon, "must be positive and finite"));
    }
    let n = rewards.len() as f64;
    // a constant group must give exact zeros; summing 1/3 sixteen times does not
    // reproduce 1/3
    let constant = rewards.iter().all(|&r| r == rewards[0]);
    let mean = if constant {
        rewards[0]
    } else {
        rewards.iter().sum::<f64>() / n
    };
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = std + epsilon;
    let advantages = rewards.iter().map(|r| (r - mean) / scale).collect();
    Ok(GroupAdvantages {
        rewards: rewards.to_vec(),
        advantages,
        group_mean: mean,
        group_std: std,
        epsilon,
    })
}

/// `r_i -> 1 - r_i` for rewards in `[0, 1]`.
pub fn complement_rewards(rewards: &[f64]) -> Result<Vec<f64>> {
    rewards
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(1.0 - value)
            } else {
                Err(Error::RewardOutOfRange { index, value })
            }
        })
        .collect()
}
