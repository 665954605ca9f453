//! A bandit-sized stand-in for RLVR on code: a softmax policy picks one of `K`
//! candidate solutions per rollout, each candidate has a fixed pass/fail
//! vector over `T` tests, and training uses noisy reward matrices with
//! group-relative advantages.
//!
//! Evaluation always uses the clean pass vectors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advantage::{group_advantages, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::reward::{apply_noise, resample_epoch_noise, rollout_rewards, NoiseMode, NoiseSpec, RewardMatrix};
use crate::rng::RngStream;
use crate::toy::best_with_index;

/// Candidate solutions and their ground-truth test outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pass_vectors: RewardMatrix,
    optimal_set: Vec<usize>,
}

impl SyntheticTask {
    /// One row per candidate. Needs at least two candidates and at least one
    /// that passes every test.
    pub fn new<R: AsRef<[u8]>>(pass_vectors: &[R]) -> Result<Self> {
        let pass_vectors = RewardMatrix::from_rows(pass_vectors)?;
        Self::from_matrix(pass_vectors)
    }

    pub fn from_matrix(pass_vectors: RewardMatrix) -> Result<Self> {
        if pass_vectors.rows() < 2 {
            return Err(Error::param("candidates", pass_vectors.rows(), "need at least 2"));
        }
        let optimal_set: Vec<usize> = pass_vectors
            .row_iter()
            .enumerate()
            .filter(|(_, row)| row.iter().all(|&c| c))
            .map(|(k, _)| k)
            .collect();
        if optimal_set.is_empty() {
            return Err(Error::param(
                "pass_vectors",
                "no all-pass row",
                "need an all-pass candidate",
            ));
        }
        Ok(Self {
            pass_vectors,
            optimal_set,
        })
    }

    pub fn candidates(&self) -> usize {
        self.pass_vectors.rows()
    }

    pub fn tests(&self) -> usize {
        self.pass_vectors.cols()
    }

    pub fn pass_vectors(&self) -> &RewardMatrix {
        &self.pass_vectors
    }

    pub fn optimal_set(&self) -> &[usize] {
        &self.optimal_set
    }

    /// Clean pass fraction of every candidate.
    pub fn pass_fractions(&self) -> Vec<f64> {
        rollout_rewards(&self.pass_vectors)
    }

    /// The clean `G x T` matrix for a group of chosen candidates.
    pub fn group_matrix(&self, choices: &[usize]) -> Result<RewardMatrix> {
        let t = self.tests();
        let mut cells = Vec::with_capacity(choices.len() * t);
        for &k in choices {
            if k >= self.candidates() {
                return Err(Error::param("choice", k, "candidate index out of range"));
            }
            cells.extend_from_slice(self.pass_vectors.row(k));
        }
        RewardMatrix::from_cells(choices.len(), t, cells)
    }
}

impl Default for SyntheticTask {
    /// Eight candidates over three tests with pass counts 3,2,2,1,1,1,0,0.
    fn default() -> Self {
        Self::new(&[
            [1, 1, 1],
            [1, 1, 0],
            [1, 0, 1],
            [1, 0, 0],
            [0, 1, 0],
            [0, 0, 1],
            [0, 0, 0],
            [0, 0, 0],
        ])
        .expect("default task is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    pub logits: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn uniform(candidates: usize) -> Self {
        Self {
            logits: vec![0.0; candidates],
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn choose(probs: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        probs.len() - 1
    }

    /// Clean expected pass fraction under the policy.
    pub fn expected_reward(&self, task: &SyntheticTask) -> f64 {
        self.probabilities()
            .iter()
            .zip(task.pass_fractions())
            .map(|(p, r)| p * r)
            .sum()
    }

    /// Gradient step on the surrogate loss.
    pub fn apply_group(&mut self, choices: &[usize], advantages: &[f64], learning_rate: f64) -> Result<()> {
        let grad = softmax_policy_gradient(&self.logits, choices, advantages)?;
        for (l, g) in self.logits.iter_mut().zip(grad) {
            *l -= learning_rate * g;
        }
        Ok(())
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `L = -(1/G) Σ A_i log π(c_i)`.
pub fn surrogate_loss(logits: &[f64], choices: &[usize], advantages: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let g = choices.len() as f64;
    -choices
        .iter()
        .zip(advantages)
        .map(|(&k, a)| a * (logits[k] - log_z))
        .sum::<f64>()
        / g
}

/// Gradient of [`surrogate_loss`] with respect to the logits:
/// `-(1/G) Σ A_i (onehot(c_i) - π)`.
pub fn softmax_policy_gradient(logits: &[f64], choices: &[usize], advantages: &[f64]) -> Result<Vec<f64>> {
    if choices.len() != advantages.len() {
        return Err(Error::LengthMismatch {
            left_name: "choices",
            left: choices.len(),
            right_name: "advantages",
            right: advantages.len(),
        });
    }
    if choices.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let probs = softmax(logits);
    let g = choices.len() as f64;
    let adv_sum: f64 = advantages.iter().sum();
    let mut grad: Vec<f64> = probs.iter().map(|p| adv_sum * p / g).collect();
    for (&k, a) in choices.iter().zip(advantages) {
        if k >= logits.len() {
            return Err(Error::param("choice", k, "candidate index out of range"));
        }
        grad[k] -= a / g;
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingParams {
    pub group_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            group_size: 16,
            steps: 500,
            learning_rate: 0.1,
        }
    }
}

impl TrainingParams {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::param("group_size", self.group_size, "must be at least 2"));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", self.steps, "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", self.learning_rate, "must be positive"));
        }
        Ok(())
    }
}

/// Per-run outcome: `best`/`final` are read off the clean reward curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub best_reward: f64,
    pub final_reward: f64,
    pub steps_to_best: usize,
    /// Clean expected reward before the first update and after every update
    /// (`steps + 1` entries).
    pub reward_curve: Vec<f64>,
    pub final_logits: Vec<f64>,
}

impl TrainingSummary {
    pub fn initial_reward(&self) -> f64 {
        self.reward_curve[0]
    }
}

/// Trains a uniform softmax policy on `task`.
///
/// Step `t` samples its `G` choices from `RngStream::new(seed, 0).child(t)` and
/// corrupts the group's matrix with `resample_epoch_noise(spec, t)`.
pub fn train_synthetic(
    task: &SyntheticTask,
    spec: &NoiseSpec,
    params: &TrainingParams,
    seed: u64,
) -> Result<TrainingSummary> {
    train_from(task, SoftmaxPolicy::uniform(task.candidates()), spec, params, seed)
}

/// As [`train_synthetic`], from an arbitrary starting policy.
pub fn train_from(
    task: &SyntheticTask,
    mut policy: SoftmaxPolicy,
    spec: &NoiseSpec,
    params: &TrainingParams,
    seed: u64,
) -> Result<TrainingSummary> {
    spec.validate()?;
    params.validate()?;
    if policy.logits.len() != task.candidates() {
        return Err(Error::LengthMismatch {
            left_name: "logits",
            left: policy.logits.len(),
            right_name: "candidates",
            right: task.candidates(),
        });
    }
    let sampling = RngStream::new(seed, 0);
    let mut curve = Vec::with_capacity(params.steps + 1);
    curve.push(policy.expected_reward(task));

    for t in 0..params.steps as u64 {
        let probs = policy.probabilities();
        let mut gen = sampling.child(t).rng();
        let choices: Vec<usize> = (0..params.group_size)
            .map(|_| SoftmaxPolicy::choose(&probs, gen.random()))
            .collect();
        let clean = task.group_matrix(&choices)?;
        let noisy = apply_noise(&clean, spec, &resample_epoch_noise(spec, t))?;
        let adv = group_advantages(&rollout_rewards(&noisy), DEFAULT_EPSILON)?;
        policy.apply_group(&choices, &adv.advantages, params.learning_rate)?;
        curve.push(policy.expected_reward(task));
    }

    let (best_reward, steps_to_best) = best_with_index(&curve);
    Ok(TrainingSummary {
        best_reward,
        final_reward: *curve.last().expect("curve is never empty"),
        steps_to_best,
        reward_curve: curve,
        final_logits: policy.logits,
    })
}

/// One noise setting of a sweep; the seed is assigned per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCell {
    pub mode: NoiseMode,
    pub rate_p: f64,
    pub fpr: f64,
    pub fnr: f64,
}

impl NoiseCell {
    pub fn symmetric(mode: NoiseMode, rate_p: f64) -> Self {
        let NoiseSpec { fpr, fnr, .. } = NoiseSpec::symmetric(mode, rate_p, 0);
        Self { mode, rate_p, fpr, fnr }
    }

    pub fn asymmetric(fpr: f64, fnr: f64) -> Self {
        Self {
            mode: NoiseMode::AsymmetricCell,
            rate_p: 0.0,
            fpr,
            fnr,
        }
    }

    pub fn spec(&self, seed: u64) -> NoiseSpec {
        NoiseSpec {
            mode: self.mode,
            rate_p: self.rate_p,
            fpr: self.fpr,
            fnr: self.fnr,
            seed,
        }
    }

    /// Every (mode, p) pair, in mode-major order.
    pub fn grid(modes: &[NoiseMode], rates: &[f64]) -> Vec<NoiseCell> {
        modes
            .iter()
            .flat_map(|&m| rates.iter().map(move |&p| NoiseCell::symmetric(m, p)))
            .collect()
    }
}

/// Mean and sample standard deviation (`n - 1`; zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: NoiseCell,
    pub runs: Vec<TrainingSummary>,
    pub best: MeanStd,
    pub final_reward: MeanStd,
    pub steps_to_best: MeanStd,
    pub initial: MeanStd,
}

/// Seeds of replicate `replicate` in sweep cell `cell`: `(training, noise)`.
pub fn sweep_seeds(master_seed: u64, cell: usize, replicate: usize) -> (u64, u64) {
    let run = RngStream::new(master_seed, cell as u64).child(replicate as u64);
    (run.child(0).derive_seed(), run.child(1).derive_seed())
}

/// Runs every `(cell, replicate)` pair and aggregates across replicates.
/// Runs execute in parallel; the result only depends on the arguments.
pub fn noise_sweep(
    task: &SyntheticTask,
    cells: &[NoiseCell],
    replicates: usize,
    params: &TrainingParams,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    if cells.is_empty() {
        return Err(Error::param("cells", 0, "sweep grid is empty"));
    }
    if replicates == 0 {
        return Err(Error::param("replicates", 0, "must be at least 1"));
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..replicates).map(move |r| (c, r)))
        .collect();
    let results: Vec<TrainingSummary> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (train_seed, noise_seed) = sweep_seeds(master_seed, c, r);
            train_synthetic(task, &cells[c].spec(noise_seed), params, train_seed)
        })
        .collect::<Result<_>>()?;

    Ok(cells
        .iter()
        .zip(results.chunks(replicates))
        .map(|(cell, runs)| {
            let stat = |f: fn(&TrainingSummary) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
            SweepRow {
                cell: *cell,
                best: stat(|s| s.best_reward),
                final_reward: stat(|s| s.final_reward),
                steps_to_best: stat(|s| s.steps_to_best as f64),
                initial: stat(|s| s.initial_reward()),
                runs: runs.to_vec(),
            }
        })
        .collect())
}
