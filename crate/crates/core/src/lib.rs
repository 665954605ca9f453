//! Reward-noise laboratory for group-relative policy optimization.
//!
//! The crate models a verifier's per-prompt judgement as a rollout-by-test
//! [`RewardMatrix`](reward::RewardMatrix), corrupts it with structured noise,
//! turns pass fractions into group-relative advantages and scores the noisy
//! verifier against ground truth. Two small optimizers exercise the whole
//! pipeline:
//!
//! * [`toy`]: a Gaussian policy trained by vanilla policy gradient and Adam
//!   on the Ackley function with Gaussian reward noise.
//! * [`synthetic`]: a softmax policy over candidate solutions trained on
//!   noisy unit-test matrices.
//!
//! [`experiment`] wires everything into reproducible runs with TOML configs
//! and CSV outputs; the `noisy-grpo` binary is a thin front end to it.
//!
//! ```
//! use noisy_grpo::advantage::group_advantages;
//! use noisy_grpo::reward::{apply_noise, rollout_rewards, NoiseMode, NoiseSpec, RewardMatrix};
//!
//! let clean = RewardMatrix::from_rows(&[[1, 1, 1], [1, 0, 0], [0, 0, 0]])?;
//! let spec = NoiseSpec::symmetric(NoiseMode::Matrix, 1.0, 42);
//! let noisy = apply_noise(&clean, &spec, &noisy_grpo::reward::resample_epoch_noise(&spec, 0))?;
//!
//! let before = group_advantages(&rollout_rewards(&clean), 1e-8)?;
//! let after = group_advantages(&rollout_rewards(&noisy), 1e-8)?;
//! for (a, b) in before.advantages.iter().zip(&after.advantages) {
//!     assert!((a + b).abs() < 1e-12);
//! }
//! # Ok::<(), noisy_grpo::Error>(())
//! ```

pub mod advantage;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod reward;
pub mod rng;
pub mod synthetic;
pub mod toy;

pub use error::{Error, Result};

// the guide's code listings run as doctests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/reward-noise.md")]
    mod reward_noise {}
    #[doc = include_str!("../../../book/src/advantages.md")]
    mod advantages {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/streams.md")]
    mod streams {}
    #[doc = include_str!("../../../book/src/ackley.md")]
    mod ackley {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
