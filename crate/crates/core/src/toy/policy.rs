//! Fixed-width Gaussian policy and its REINFORCE gradient.
//!
//! Samples are drawn from the current mean treated as a constant
//! (`s_i = mean + std * eps_i`); the mean only enters through the
//! log-density. With `L = -(1/G) Σ A_i log N(s_i; mean, std² I)` and
//! `∂ log N / ∂mean = (s_i - mean) / std² = eps_i / std`, the gradient is
//! `-(1/(G std)) Σ A_i eps_i`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::ackley::ackley;
use super::Vec2;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPolicy {
    mean: Vec2,
    std: f64,
}

impl GaussianPolicy {
    pub fn new(mean: Vec2, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::param("policy_std", std, "must be positive and finite"));
        }
        Ok(Self { mean, std })
    }

    pub fn mean(&self) -> Vec2 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    /// Same policy with a new mean; the width never changes.
    pub fn with_mean(&self, mean: Vec2) -> Self {
        Self { mean, std: self.std }
    }

    /// `log N(point; mean, std² I)`.
    pub fn log_density(&self, point: Vec2) -> f64 {
        let var = self.std * self.std;
        (0..2)
            .map(|d| {
                let diff = point[d] - self.mean[d];
                -diff * diff / (2.0 * var) - self.std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGroup {
    pub epsilons: Vec<Vec2>,
    pub samples: Vec<Vec2>,
    /// `None` until [`noisy_rewards`] fills it.
    pub rewards: Option<Vec<f64>>,
}

impl SampleGroup {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn sample_group(policy: &GaussianPolicy, group_size: usize, rng: &RngStream) -> Result<SampleGroup> {
    if group_size == 0 {
        return Err(Error::EmptyGroup);
    }
    let mut gen = rng.rng();
    let mean = policy.mean();
    let std = policy.std();
    let epsilons: Vec<Vec2> = (0..group_size)
        .map(|_| [gen.sample(StandardNormal), gen.sample(StandardNormal)])
        .collect();
    let samples = epsilons
        .iter()
        .map(|e| [mean[0] + std * e[0], mean[1] + std * e[1]])
        .collect();
    Ok(SampleGroup {
        epsilons,
        samples,
        rewards: None,
    })
}

/// Fills `r_i = -ackley(s_i) + η_i` with `η_i ~ N(0, sigma_noise²)`.
/// A zero `sigma_noise` draws nothing and yields the clean rewards.
pub fn noisy_rewards(mut group: SampleGroup, sigma_noise: f64, rng: &RngStream) -> Result<SampleGroup> {
    if !(sigma_noise >= 0.0 && sigma_noise.is_finite()) {
        return Err(Error::param(
            "sigma_noise",
            sigma_noise,
            "must be finite and non-negative",
        ));
    }
    let clean = group.samples.iter().map(|&s| -ackley(s));
    let rewards = if sigma_noise == 0.0 {
        clean.collect()
    } else {
        let mut gen = rng.rng();
        clean
            .map(|r| r + sigma_noise * gen.sample::<f64, _>(StandardNormal))
            .collect()
    };
    group.rewards = Some(rewards);
    Ok(group)
}

/// `-(1/(G std)) Σ A_i eps_i`, the gradient of the REINFORCE loss with the
/// advantages held constant.
pub fn policy_gradient(advantages: &[f64], epsilons: &[Vec2], std: f64) -> Result<Vec2> {
    if advantages.len() != epsilons.len() {
        return Err(Error::LengthMismatch {
            left_name: "advantages",
            left: advantages.len(),
            right_name: "epsilons",
            right: epsilons.len(),
        });
    }
    if advantages.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if std.is_nan() || std <= 0.0 {
        return Err(Error::param("policy_std", std, "must be positive"));
    }
    let mut sum = [0.0; 2];
    for (a, e) in advantages.iter().zip(epsilons) {
        sum[0] += a * e[0];
        sum[1] += a * e[1];
    }
    let scale = -1.0 / (advantages.len() as f64 * std);
    Ok([scale * sum[0], scale * sum[1]])
}

/// `-(1/G) Σ A_i log π(s_i | mean)`.
pub fn reinforce_loss(policy: &GaussianPolicy, samples: &[Vec2], advantages: &[f64]) -> f64 {
    let g = samples.len() as f64;
    -samples
        .iter()
        .zip(advantages)
        .map(|(&s, a)| a * policy.log_density(s))
        .sum::<f64>()
        / g
}
