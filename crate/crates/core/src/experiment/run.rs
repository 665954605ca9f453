use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;

use super::config::{
    AckleyParams, ExperimentConfig, KindParams, MetricsDemoParams, NoiseStatsParams, SweepParams, MANIFEST_TABLE,
};
use super::output::{confusion_fields, fmt_float, fmt_opt, Table, CONFUSION_COLUMNS};
use super::ExperimentError;
use crate::metrics::{batch_confusion, confusion_metrics, ConfusionReport};
use crate::reward::{apply_noise, resample_epoch_noise, RewardMatrix};
use crate::rng::RngStream;
use crate::synthetic::{noise_sweep, sweep_seeds, NoiseCell, TrainingParams};
use crate::toy::{circle_starts, run_optimization, OptimizerRun};

// top-level stream ids under the master seed
const TRUTH_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Files produced by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub manifest: PathBuf,
    pub summary: PathBuf,
    pub extra: Vec<PathBuf>,
}

/// Runs `config` and writes its artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts, ExperimentError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let manifest = write_manifest(config)?;
    let (summary, extra) = match &config.params {
        KindParams::NoiseStats(p) => write_noise_stats(dir, p, config.seed)?,
        KindParams::Ackley(p) => write_ackley(dir, p, config.seed)?,
        KindParams::SyntheticSweep(p) => write_sweep(dir, p, config.seed)?,
        KindParams::MetricsDemo(p) => write_metrics_demo(dir, p, config.seed)?,
    };
    Ok(RunArtifacts {
        output_dir: dir.clone(),
        manifest,
        summary,
        extra,
    })
}

/// Writes `manifest.toml`: the resolved config and a provenance table.
pub fn write_manifest(config: &ExperimentConfig) -> Result<PathBuf, ExperimentError> {
    let path = config.output_dir.join("manifest.toml");
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = format!(
        "{}\n[{MANIFEST_TABLE}]\ncrate_version = \"{}\"\ncreated_unix = {created}\n",
        config.to_toml(),
        env!("CARGO_PKG_VERSION"),
    );
    fs::write(&path, text).map_err(|e| ExperimentError::io(&path, e))?;
    Ok(path)
}

fn random_truth(rows: usize, cols: usize, pass_rate: f64, stream: &RngStream) -> crate::Result<RewardMatrix> {
    let mut gen = stream.rng();
    let cells = (0..rows * cols).map(|_| gen.random::<f64>() < pass_rate).collect();
    RewardMatrix::from_cells(rows, cols, cells)
}

/// Aggregated flip statistics of one noise setting.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStatsRow {
    pub cell: NoiseCell,
    pub trials: usize,
    pub report: ConfusionReport,
}

/// Corrupts `trials` random ground-truth matrices per noise cell and counts
/// the resulting confusion. Every cell sees the same truth matrices.
pub fn noise_stats(params: &NoiseStatsParams, seed: u64) -> Result<Vec<NoiseStatsRow>, ExperimentError> {
    let truth = RngStream::new(seed, TRUTH_STREAM);
    let noise = RngStream::new(seed, NOISE_STREAM);
    let rows = params
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(c, cell)| {
            let spec = cell.spec(noise.child(c as u64).derive_seed());
            let mut total = ConfusionReport::from_counts(0, 0, 0, 0);
            for trial in 0..params.trials as u64 {
                let clean = random_truth(
                    params.rollouts,
                    params.tests,
                    params.truth_pass_rate,
                    &truth.child(trial),
                )?;
                let noisy = apply_noise(&clean, &spec, &resample_epoch_noise(&spec, trial))?;
                total = total.merge(&confusion_metrics(&noisy, &clean)?);
            }
            Ok(NoiseStatsRow {
                cell,
                trials: params.trials,
                report: total,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(rows)
}

fn write_noise_stats(
    dir: &Path,
    params: &NoiseStatsParams,
    seed: u64,
) -> Result<(PathBuf, Vec<PathBuf>), ExperimentError> {
    let rows = noise_stats(params, seed)?;
    let mut header = vec!["mode", "rate_p", "fpr", "fnr", "trials", "cells"];
    header.extend(CONFUSION_COLUMNS);
    header.extend(["measured_fpr", "measured_fnr"]);
    let mut table = Table::create(&dir.join("summary.csv"), &header)?;
    for row in &rows {
        let mut fields = vec![
            row.cell.mode.to_string(),
            fmt_float(row.cell.rate_p),
            fmt_float(row.cell.fpr),
            fmt_float(row.cell.fnr),
            row.trials.to_string(),
            row.report.total().to_string(),
        ];
        fields.extend(confusion_fields(&row.report));
        fields.push(fmt_opt(row.report.false_positive_rate()));
        fields.push(fmt_opt(row.report.false_negative_rate()));
        table.row(&fields)?;
    }
    Ok((table.finish()?, Vec::new()))
}

/// One optimizer run of the Ackley grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AckleyRecord {
    pub replicate: usize,
    /// Start index across replicates: `replicate * starts + j`.
    pub start_index: usize,
    pub sigma_noise: f64,
    pub run: OptimizerRun,
}

/// Runs every `(replicate, start, noise level)` combination.
///
/// Replicate `r` draws its start points from `RngStream(seed, r).child(0)`;
/// start `j` runs on `RngStream(seed, r).child(1).child(j)` at every noise
/// level, so noise levels are compared on identical sampling noise.
pub fn ackley_grid(params: &AckleyParams, seed: u64) -> Result<Vec<AckleyRecord>, ExperimentError> {
    let mut jobs = Vec::new();
    for r in 0..params.replicates {
        let replicate = RngStream::new(seed, r as u64);
        let starts = circle_starts(params.radius, params.starts, &replicate.child(0))?;
        for (j, start) in starts.into_iter().enumerate() {
            for &sigma_noise in &params.noise_levels {
                jobs.push((r, j, start, sigma_noise, replicate.child(1).child(j as u64)));
            }
        }
    }
    let records = jobs
        .into_par_iter()
        .map(|(r, j, start, sigma_noise, stream)| {
            let run = run_optimization(start, &params.toy_config(sigma_noise), stream)?;
            Ok(AckleyRecord {
                replicate: r,
                start_index: r * params.starts + j,
                sigma_noise,
                run,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(records)
}

fn write_ackley(dir: &Path, params: &AckleyParams, seed: u64) -> Result<(PathBuf, Vec<PathBuf>), ExperimentError> {
    let records = ackley_grid(params, seed)?;
    let mut extra = Vec::with_capacity(records.len());
    let mut summary = Table::create(
        &dir.join("summary.csv"),
        &[
            "replicate",
            "start",
            "start_x",
            "start_y",
            "sigma_noise",
            "final_x",
            "final_y",
            "final_distance",
            "final_clean_reward",
            "best_clean_reward",
            "steps_to_best",
        ],
    )?;
    for rec in &records {
        let name = format!("trajectory_{}_{}.csv", rec.start_index, rec.sigma_noise);
        let mut traj = Table::create(&dir.join(name), &["step", "mu_x", "mu_y", "mean_clean_reward"])?;
        for (step, (mu, reward)) in rec.run.trajectory.iter().zip(&rec.run.step_rewards).enumerate() {
            traj.row(&[step.to_string(), fmt_float(mu[0]), fmt_float(mu[1]), fmt_float(*reward)])?;
        }
        extra.push(traj.finish()?);

        let start = rec.run.start();
        let end = rec.run.final_mean();
        let (best, best_step) = rec.run.best();
        summary.row(&[
            rec.replicate.to_string(),
            rec.start_index.to_string(),
            fmt_float(start[0]),
            fmt_float(start[1]),
            fmt_float(rec.sigma_noise),
            fmt_float(end[0]),
            fmt_float(end[1]),
            fmt_float(rec.run.final_distance()),
            fmt_float(rec.run.final_reward()),
            fmt_float(best),
            best_step.to_string(),
        ])?;
    }
    Ok((summary.finish()?, extra))
}

fn write_sweep(dir: &Path, params: &SweepParams, seed: u64) -> Result<(PathBuf, Vec<PathBuf>), ExperimentError> {
    let task = params.task()?;
    let training = TrainingParams {
        group_size: params.group_size,
        steps: params.steps,
        learning_rate: params.learning_rate,
    };
    let rows = noise_sweep(&task, &params.cells(), params.replicates, &training, seed)?;

    let mut summary = Table::create(
        &dir.join("summary.csv"),
        &[
            "mode",
            "rate_p",
            "fpr",
            "fnr",
            "replicates",
            "initial_mean",
            "best_mean",
            "best_std",
            "final_mean",
            "final_std",
            "steps_to_best_mean",
            "steps_to_best_std",
        ],
    )?;
    let mut runs = Table::create(
        &dir.join("runs.csv"),
        &[
            "cell",
            "mode",
            "rate_p",
            "fpr",
            "fnr",
            "replicate",
            "train_seed",
            "noise_seed",
            "initial",
            "best",
            "final",
            "steps_to_best",
        ],
    )?;
    let mut curves = Table::create(&dir.join("curves.csv"), &["cell", "replicate", "step", "clean_reward"])?;

    for (c, row) in rows.iter().enumerate() {
        let cell = [
            row.cell.mode.to_string(),
            fmt_float(row.cell.rate_p),
            fmt_float(row.cell.fpr),
            fmt_float(row.cell.fnr),
        ];
        let mut fields = cell.to_vec();
        fields.extend([
            row.runs.len().to_string(),
            fmt_float(row.initial.mean),
            fmt_float(row.best.mean),
            fmt_float(row.best.std),
            fmt_float(row.final_reward.mean),
            fmt_float(row.final_reward.std),
            fmt_float(row.steps_to_best.mean),
            fmt_float(row.steps_to_best.std),
        ]);
        summary.row(&fields)?;

        for (r, run) in row.runs.iter().enumerate() {
            let (train_seed, noise_seed) = sweep_seeds(seed, c, r);
            let mut fields = vec![c.to_string()];
            fields.extend(cell.iter().cloned());
            fields.extend([
                r.to_string(),
                train_seed.to_string(),
                noise_seed.to_string(),
                fmt_float(run.initial_reward()),
                fmt_float(run.best_reward),
                fmt_float(run.final_reward),
                run.steps_to_best.to_string(),
            ]);
            runs.row(&fields)?;
            for (step, reward) in run.reward_curve.iter().enumerate() {
                curves.row(&[c.to_string(), r.to_string(), step.to_string(), fmt_float(*reward)])?;
            }
        }
    }
    Ok((summary.finish()?, vec![runs.finish()?, curves.finish()?]))
}

/// Per-batch confusion reports of a noisy verifier on random ground truth.
pub fn metrics_demo(params: &MetricsDemoParams, seed: u64) -> Result<Vec<ConfusionReport>, ExperimentError> {
    let truth = RngStream::new(seed, TRUTH_STREAM);
    let spec = params.cell().spec(RngStream::new(seed, NOISE_STREAM).derive_seed());
    let reports = (0..params.batches as u64)
        .map(|b| {
            let clean = random_truth(params.rollouts, params.tests, params.truth_pass_rate, &truth.child(b))?;
            let noisy = apply_noise(&clean, &spec, &resample_epoch_noise(&spec, b))?;
            confusion_metrics(&noisy, &clean)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(reports)
}

/// Exponential smoothing that skips undefined values; `None` until the first
/// defined value arrives.
fn smooth(values: impl Iterator<Item = Option<f64>>, factor: f64) -> Vec<Option<f64>> {
    let mut state: Option<f64> = None;
    values
        .map(|v| {
            if let Some(x) = v {
                state = Some(state.map_or(x, |s| factor * s + (1.0 - factor) * x));
            }
            state
        })
        .collect()
}

fn write_metrics_demo(
    dir: &Path,
    params: &MetricsDemoParams,
    seed: u64,
) -> Result<(PathBuf, Vec<PathBuf>), ExperimentError> {
    let reports = metrics_demo(params, seed)?;

    let mut header = vec!["batch"];
    header.extend(CONFUSION_COLUMNS);
    let mut confusion = Table::create(&dir.join("confusion.csv"), &header)?;
    for (b, r) in reports.iter().enumerate() {
        let mut fields = vec![b.to_string()];
        fields.extend(confusion_fields(r));
        confusion.row(&fields)?;
    }

    let series: [fn(&ConfusionReport) -> Option<f64>; 4] = [|r| r.accuracy, |r| r.precision, |r| r.recall, |r| r.f1];
    let smoothed: Vec<Vec<Option<f64>>> = series
        .iter()
        .map(|f| smooth(reports.iter().map(f), params.smoothing))
        .collect();
    let mut smooth_table = Table::create(
        &dir.join("smoothed.csv"),
        &["batch", "accuracy", "precision", "recall", "f1"],
    )?;
    for b in 0..reports.len() {
        let mut fields = vec![b.to_string()];
        fields.extend(smoothed.iter().map(|s| fmt_opt(s[b])));
        smooth_table.row(&fields)?;
    }

    let micro = batch_confusion(&reports)?;
    let mut summary = Table::create(&dir.join("summary.csv"), &CONFUSION_COLUMNS)?;
    summary.row(&confusion_fields(&micro))?;
    Ok((summary.finish()?, vec![confusion.finish()?, smooth_table.finish()?]))
}
