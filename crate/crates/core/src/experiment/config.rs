//! Experiment configuration documents.
//!
//! A config is a TOML document with top-level `kind`, `seed` and
//! `output_dir`, plus one section named after the kind (`[noise_stats]`,
//! `[ackley]`, `[synthetic_sweep]` or `[metrics_demo]`). Unknown keys are
//! rejected. A run manifest is the same document with every default filled
//! in plus a `[manifest]` table, which the parser ignores, so a manifest can be
//! fed back in as a config.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Table;

use crate::reward::NoiseMode;
use crate::synthetic::{NoiseCell, SyntheticTask};
use crate::toy::{AdamConfig, ToyConfig};

/// Key of the provenance table in a manifest.
pub const MANIFEST_TABLE: &str = "manifest";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NoiseStats,
    Ackley,
    SyntheticSweep,
    MetricsDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::NoiseStats,
        ExperimentKind::Ackley,
        ExperimentKind::SyntheticSweep,
        ExperimentKind::MetricsDemo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::NoiseStats => "noise-stats",
            ExperimentKind::Ackley => "ackley",
            ExperimentKind::SyntheticSweep => "synthetic-sweep",
            ExperimentKind::MetricsDemo => "metrics-demo",
        }
    }

    /// Name of the kind's parameter section.
    pub fn section(&self) -> &'static str {
        match self {
            ExperimentKind::NoiseStats => "noise_stats",
            ExperimentKind::Ackley => "ackley",
            ExperimentKind::SyntheticSweep => "synthetic_sweep",
            ExperimentKind::MetricsDemo => "metrics_demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{field} = {value} is out of range: {reason}")]
    Range {
        field: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

fn range(field: impl Into<String>, value: impl ToString, reason: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        field: field.into(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn check_prob(field: &str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(range(field, value, "must lie in [0, 1]"))
    }
}

fn check_positive_count(field: &str, value: usize) -> Result<(), ConfigError> {
    if value >= 1 {
        Ok(())
    } else {
        Err(range(field, value, "must be at least 1"))
    }
}

fn check_positive(field: &str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(range(field, value, "must be positive and finite"))
    }
}

/// Parameters of the `noise-stats` experiment: measured flip statistics of
/// each noise setting over random ground-truth matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseStatsParams {
    pub modes: Vec<NoiseMode>,
    /// Rates swept for the symmetric modes.
    pub rate_p: Vec<f64>,
    /// Used by `asymmetric-cell` only.
    pub fpr: f64,
    pub fnr: f64,
    pub rollouts: usize,
    pub tests: usize,
    pub trials: usize,
    pub truth_pass_rate: f64,
}

impl Default for NoiseStatsParams {
    fn default() -> Self {
        Self {
            modes: vec![NoiseMode::Cell],
            rate_p: vec![0.1],
            fpr: 0.0,
            fnr: 0.0,
            rollouts: 16,
            tests: 3,
            trials: 10_000,
            truth_pass_rate: 0.5,
        }
    }
}

impl NoiseStatsParams {
    fn validate(&self) -> Result<(), ConfigError> {
        validate_noise_grid("noise_stats", &self.modes, &self.rate_p)?;
        check_prob("noise_stats.fpr", self.fpr)?;
        check_prob("noise_stats.fnr", self.fnr)?;
        check_prob("noise_stats.truth_pass_rate", self.truth_pass_rate)?;
        check_positive_count("noise_stats.rollouts", self.rollouts)?;
        check_positive_count("noise_stats.tests", self.tests)?;
        check_positive_count("noise_stats.trials", self.trials)
    }

    /// Symmetric modes crossed with `rate_p`, plus one `(fpr, fnr)` cell if
    /// `asymmetric-cell` is listed.
    pub fn cells(&self) -> Vec<NoiseCell> {
        expand_cells(&self.modes, &self.rate_p, &[[self.fpr, self.fnr]])
    }
}

fn validate_noise_grid(section: &str, modes: &[NoiseMode], rates: &[f64]) -> Result<(), ConfigError> {
    if modes.is_empty() {
        return Err(range(format!("{section}.modes"), "[]", "must list at least one mode"));
    }
    let symmetric = modes.iter().any(|m| *m != NoiseMode::AsymmetricCell);
    if symmetric && rates.is_empty() {
        return Err(range(format!("{section}.rate_p"), "[]", "must list at least one rate"));
    }
    for (i, &p) in rates.iter().enumerate() {
        check_prob(&format!("{section}.rate_p[{i}]"), p)?;
    }
    Ok(())
}

fn expand_cells(modes: &[NoiseMode], rates: &[f64], asymmetric: &[[f64; 2]]) -> Vec<NoiseCell> {
    let mut cells = Vec::new();
    for &mode in modes {
        if mode == NoiseMode::AsymmetricCell {
            cells.extend(asymmetric.iter().map(|&[fpr, fnr]| NoiseCell::asymmetric(fpr, fnr)));
        } else {
            cells.extend(rates.iter().map(|&p| NoiseCell::symmetric(mode, p)));
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AckleyParams {
    pub radius: f64,
    pub starts: usize,
    /// Independent repetitions, each with its own start points.
    pub replicates: usize,
    pub noise_levels: Vec<f64>,
    pub steps: usize,
    pub group_size: usize,
    pub policy_std: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for AckleyParams {
    fn default() -> Self {
        let toy = ToyConfig::default();
        Self {
            radius: 10.0,
            starts: 3,
            replicates: 1,
            noise_levels: vec![0.0, 2.0, 10.0],
            steps: toy.steps,
            group_size: toy.group_size,
            policy_std: toy.policy_std,
            learning_rate: toy.adam.learning_rate,
            beta1: toy.adam.beta1,
            beta2: toy.adam.beta2,
            eps_hat: toy.adam.eps_hat,
        }
    }
}

impl AckleyParams {
    fn validate(&self) -> Result<(), ConfigError> {
        check_positive("ackley.radius", self.radius)?;
        check_positive_count("ackley.starts", self.starts)?;
        check_positive_count("ackley.replicates", self.replicates)?;
        check_positive_count("ackley.steps", self.steps)?;
        check_positive_count("ackley.group_size", self.group_size)?;
        check_positive("ackley.policy_std", self.policy_std)?;
        check_positive("ackley.learning_rate", self.learning_rate)?;
        check_positive("ackley.eps_hat", self.eps_hat)?;
        for (name, b) in [("ackley.beta1", self.beta1), ("ackley.beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(range(name, b, "must lie in [0, 1)"));
            }
        }
        if self.noise_levels.is_empty() {
            return Err(range("ackley.noise_levels", "[]", "must list at least one level"));
        }
        for (i, &s) in self.noise_levels.iter().enumerate() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(range(
                    format!("ackley.noise_levels[{i}]"),
                    s,
                    "must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }

    pub fn toy_config(&self, sigma_noise: f64) -> ToyConfig {
        ToyConfig {
            steps: self.steps,
            group_size: self.group_size,
            policy_std: self.policy_std,
            sigma_noise,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                eps_hat: self.eps_hat,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub modes: Vec<NoiseMode>,
    pub rate_p: Vec<f64>,
    /// `[fpr, fnr]` pairs run when `asymmetric-cell` is listed in `modes`.
    pub asymmetric: Vec<[f64; 2]>,
    pub replicates: usize,
    pub group_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// One row of 0/1 test outcomes per candidate solution.
    pub pass_vectors: Vec<Vec<u8>>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            modes: vec![NoiseMode::Matrix],
            rate_p: vec![0.0, 0.05, 0.1, 0.3, 0.5],
            asymmetric: vec![[0.3, 0.0], [0.0, 0.3]],
            replicates: 3,
            group_size: 16,
            steps: 500,
            learning_rate: 0.1,
            pass_vectors: SyntheticTask::default().pass_vectors().to_rows(),
        }
    }
}

impl SweepParams {
    fn validate(&self) -> Result<(), ConfigError> {
        validate_noise_grid("synthetic_sweep", &self.modes, &self.rate_p)?;
        if self.modes.contains(&NoiseMode::AsymmetricCell) && self.asymmetric.is_empty() {
            return Err(range(
                "synthetic_sweep.asymmetric",
                "[]",
                "asymmetric-cell needs at least one [fpr, fnr] pair",
            ));
        }
        for (i, [fpr, fnr]) in self.asymmetric.iter().enumerate() {
            check_prob(&format!("synthetic_sweep.asymmetric[{i}].fpr"), *fpr)?;
            check_prob(&format!("synthetic_sweep.asymmetric[{i}].fnr"), *fnr)?;
        }
        check_positive_count("synthetic_sweep.replicates", self.replicates)?;
        if self.group_size < 2 {
            return Err(range(
                "synthetic_sweep.group_size",
                self.group_size,
                "must be at least 2",
            ));
        }
        check_positive_count("synthetic_sweep.steps", self.steps)?;
        check_positive("synthetic_sweep.learning_rate", self.learning_rate)?;
        self.task()
            .map(|_| ())
            .map_err(|e| ConfigError::Invalid(format!("synthetic_sweep.pass_vectors: {e}")))
    }

    pub fn task(&self) -> crate::Result<SyntheticTask> {
        SyntheticTask::new(&self.pass_vectors)
    }

    pub fn cells(&self) -> Vec<NoiseCell> {
        expand_cells(&self.modes, &self.rate_p, &self.asymmetric)
    }
}

/// Parameters of `metrics-demo`: per-batch verifier confusion statistics for
/// one noise setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsDemoParams {
    pub mode: NoiseMode,
    pub rate_p: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub batches: usize,
    pub rollouts: usize,
    pub tests: usize,
    pub truth_pass_rate: f64,
    /// Exponential smoothing factor for the smoothed series (weight of the
    /// previous value).
    pub smoothing: f64,
}

impl Default for MetricsDemoParams {
    fn default() -> Self {
        Self {
            mode: NoiseMode::AsymmetricCell,
            rate_p: 0.0,
            fpr: 0.2,
            fnr: 0.05,
            batches: 100,
            rollouts: 16,
            tests: 3,
            truth_pass_rate: 0.5,
            smoothing: 0.9,
        }
    }
}

impl MetricsDemoParams {
    fn validate(&self) -> Result<(), ConfigError> {
        check_prob("metrics_demo.rate_p", self.rate_p)?;
        check_prob("metrics_demo.fpr", self.fpr)?;
        check_prob("metrics_demo.fnr", self.fnr)?;
        check_prob("metrics_demo.truth_pass_rate", self.truth_pass_rate)?;
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(range("metrics_demo.smoothing", self.smoothing, "must lie in [0, 1)"));
        }
        check_positive_count("metrics_demo.batches", self.batches)?;
        check_positive_count("metrics_demo.rollouts", self.rollouts)?;
        check_positive_count("metrics_demo.tests", self.tests)
    }

    pub fn cell(&self) -> NoiseCell {
        NoiseCell {
            mode: self.mode,
            rate_p: self.rate_p,
            fpr: self.fpr,
            fnr: self.fnr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KindParams {
    NoiseStats(NoiseStatsParams),
    Ackley(AckleyParams),
    SyntheticSweep(SweepParams),
    MetricsDemo(MetricsDemoParams),
}

impl KindParams {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            KindParams::NoiseStats(_) => ExperimentKind::NoiseStats,
            KindParams::Ackley(_) => ExperimentKind::Ackley,
            KindParams::SyntheticSweep(_) => ExperimentKind::SyntheticSweep,
            KindParams::MetricsDemo(_) => ExperimentKind::MetricsDemo,
        }
    }

    pub fn defaults(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::NoiseStats => KindParams::NoiseStats(Default::default()),
            ExperimentKind::Ackley => KindParams::Ackley(Default::default()),
            ExperimentKind::SyntheticSweep => KindParams::SyntheticSweep(Default::default()),
            ExperimentKind::MetricsDemo => KindParams::MetricsDemo(Default::default()),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match self {
            KindParams::NoiseStats(p) => p.validate(),
            KindParams::Ackley(p) => p.validate(),
            KindParams::SyntheticSweep(p) => p.validate(),
            KindParams::MetricsDemo(p) => p.validate(),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: KindParams,
}

impl ExperimentConfig {
    pub fn new(seed: u64, output_dir: impl Into<PathBuf>, params: KindParams) -> Self {
        Self {
            seed,
            output_dir: output_dir.into(),
            params,
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.params.kind()
    }

    /// The resolved config as a TOML document; feeding it back to
    /// [`parse_config`] yields an equal config.
    pub fn to_toml(&self) -> String {
        let mut doc = Document {
            kind: self.kind(),
            seed: Some(self.seed),
            output_dir: Some(self.output_dir.clone()),
            noise_stats: None,
            ackley: None,
            synthetic_sweep: None,
            metrics_demo: None,
        };
        match &self.params {
            KindParams::NoiseStats(p) => doc.noise_stats = Some(p.clone()),
            KindParams::Ackley(p) => doc.ackley = Some(p.clone()),
            KindParams::SyntheticSweep(p) => doc.synthetic_sweep = Some(p.clone()),
            KindParams::MetricsDemo(p) => doc.metrics_demo = Some(p.clone()),
        }
        toml::to_string(&doc).expect("config values are representable in TOML")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    kind: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_stats: Option<NoiseStatsParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ackley: Option<AckleyParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic_sweep: Option<SweepParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics_demo: Option<MetricsDemoParams>,
}

/// Parses and validates a config (or manifest) document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    parse_table(table)
}

/// Like [`parse_config`], from an already parsed table.
pub fn parse_table(mut table: Table) -> Result<ExperimentConfig, ConfigError> {
    table.remove(MANIFEST_TABLE);
    let doc: Document =
        Document::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let kind = doc.kind;
    let seed = doc
        .seed
        .ok_or_else(|| ConfigError::Invalid("missing required key `seed`".into()))?;
    if seed > i64::MAX as u64 {
        return Err(range("seed", seed, "must fit in a signed 64-bit integer"));
    }
    let output_dir = doc
        .output_dir
        .unwrap_or_else(|| PathBuf::from("out").join(kind.as_str()));

    let present = [
        (ExperimentKind::NoiseStats, doc.noise_stats.is_some()),
        (ExperimentKind::Ackley, doc.ackley.is_some()),
        (ExperimentKind::SyntheticSweep, doc.synthetic_sweep.is_some()),
        (ExperimentKind::MetricsDemo, doc.metrics_demo.is_some()),
    ];
    if let Some((other, _)) = present.iter().find(|(k, there)| *there && *k != kind) {
        return Err(ConfigError::Invalid(format!(
            "section [{}] does not apply to kind `{kind}`",
            other.section()
        )));
    }

    let params = match kind {
        ExperimentKind::NoiseStats => KindParams::NoiseStats(doc.noise_stats.unwrap_or_default()),
        ExperimentKind::Ackley => KindParams::Ackley(doc.ackley.unwrap_or_default()),
        ExperimentKind::SyntheticSweep => KindParams::SyntheticSweep(doc.synthetic_sweep.unwrap_or_default()),
        ExperimentKind::MetricsDemo => KindParams::MetricsDemo(doc.metrics_demo.unwrap_or_default()),
    };
    params.validate()?;
    Ok(ExperimentConfig {
        seed,
        output_dir,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ackley_config_fills_defaults() {
        let cfg = parse_config("kind = \"ackley\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.kind(), ExperimentKind::Ackley);
        assert_eq!(cfg.params, KindParams::Ackley(AckleyParams::default()));
        assert_eq!(cfg.output_dir, PathBuf::from("out/ackley"));
        let echoed = cfg.to_toml();
        assert!(echoed.contains("policy_std = 0.24"));
        assert!(echoed.contains("noise_levels = [0.0, 2.0, 10.0]"));
    }

    #[test]
    fn out_of_range_rate_names_rate_p() {
        let err = parse_config("kind = \"noise-stats\"\nseed = 1\n[noise_stats]\nrate_p = [1.5]\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Range { .. }));
        assert!(msg.contains("rate_p") && msg.contains("1.5"), "{msg}");

        let err = parse_config("kind = \"metrics-demo\"\nseed = 1\n[metrics_demo]\nrate_p = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("metrics_demo.rate_p"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("kind = \"ackley\"\nseed = 1\n[ackley]\nstepz = 3\n").unwrap_err();
        assert!(err.to_string().contains("stepz"), "{err}");
        assert!(parse_config("kind = \"ackley\"\nseed = 1\ncolour = 2\n").is_err());
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_config("kind = \"ackley\"\nseed = \n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn foreign_section_is_rejected() {
        let err = parse_config("kind = \"ackley\"\nseed = 1\n[metrics_demo]\nbatches = 3\n").unwrap_err();
        assert!(err.to_string().contains("metrics_demo"));
    }

    #[test]
    fn missing_seed_is_an_error() {
        assert!(parse_config("kind = \"ackley\"\n").is_err());
        assert!(parse_config("kind = \"tetris\"\nseed = 1\n").is_err());
    }

    #[test]
    fn round_trip_every_kind() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::new(99, "somewhere/else", KindParams::defaults(kind));
            let back = parse_config(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg, "{kind}");
        }
    }

    #[test]
    fn manifest_table_is_ignored() {
        let cfg = ExperimentConfig::new(5, "o", KindParams::defaults(ExperimentKind::MetricsDemo));
        let text = format!("{}\n[manifest]\ncreated_unix = 17\n", cfg.to_toml());
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_cells_expand_asymmetric_pairs() {
        let p = SweepParams {
            modes: vec![NoiseMode::Row, NoiseMode::AsymmetricCell],
            rate_p: vec![0.0, 0.2],
            ..SweepParams::default()
        };
        let cells = p.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[2], NoiseCell::asymmetric(0.3, 0.0));
    }

    #[test]
    fn invalid_pass_vectors() {
        let err =
            parse_config("kind = \"synthetic-sweep\"\nseed = 1\n[synthetic_sweep]\npass_vectors = [[1, 0], [0, 1]]\n")
                .unwrap_err();
        assert!(err.to_string().contains("pass_vectors"));
    }
}
