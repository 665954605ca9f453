use serde::{Deserialize, Serialize};

use super::Vec2;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }
}

/// Moment estimates for a two-parameter Adam optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec2,
    pub second_moment: Vec2,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            first_moment: [0.0; 2],
            second_moment: [0.0; 2],
            step_count: 0,
            config,
        }
    }

    /// One bias-corrected Adam update. Returns the next state and the updated
    /// parameters; `self` is left untouched.
    pub fn step(&self, gradient: Vec2, params: Vec2) -> (AdamState, Vec2) {
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps_hat,
        } = self.config;
        let t = self.step_count + 1;
        let bias1 = 1.0 - beta1.powf(t as f64);
        let bias2 = 1.0 - beta2.powf(t as f64);

        let mut next = *self;
        next.step_count = t;
        let mut updated = params;
        for d in 0..2 {
            let g = gradient[d];
            next.first_moment[d] = beta1 * self.first_moment[d] + (1.0 - beta1) * g;
            next.second_moment[d] = beta2 * self.second_moment[d] + (1.0 - beta2) * g * g;
            let m_hat = next.first_moment[d] / bias1;
            let v_hat = next.second_moment[d] / bias2;
            updated[d] -= learning_rate * m_hat / (v_hat.sqrt() + eps_hat);
        }
        (next, updated)
    }
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new(AdamConfig::default())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, gradient: Vec2, params: Vec2) -> (AdamState, Vec2) {
    state.step(gradient, params)
}
