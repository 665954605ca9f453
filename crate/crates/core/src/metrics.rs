//! Confusion statistics of a (noisy) verifier against ground truth.
//!
//! The positive class is "pass". Ratios whose denominator is zero are `None`
//! and serialize as `null`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionReport {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Share of true fails the verifier marked as passing.
    pub fn false_positive_rate(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    /// Share of true passes the verifier marked as failing.
    pub fn false_negative_rate(&self) -> Option<f64> {
        ratio(self.fn_, self.fn_ + self.tp)
    }

    /// Adds raw counts and re-derives every ratio.
    pub fn merge(&self, other: &ConfusionReport) -> ConfusionReport {
        Self::from_counts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn_ + other.fn_,
        )
    }
}

/// Counts every cell of `predicted` against `truth`.
pub fn confusion_metrics(predicted: &RewardMatrix, truth: &RewardMatrix) -> Result<ConfusionReport> {
    if predicted.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            left_rows: predicted.rows(),
            left_cols: predicted.cols(),
            right_rows: truth.rows(),
            right_cols: truth.cols(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.cells().iter().zip(truth.cells()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(ConfusionReport::from_counts(tp, fp, tn, fn_))
}

/// Micro-average: sums counts across reports, never averages ratios.
pub fn batch_confusion(reports: &[ConfusionReport]) -> Result<ConfusionReport> {
    let (first, rest) = reports.split_first().ok_or(Error::EmptyReports)?;
    Ok(rest.iter().fold(*first, |acc, r| acc.merge(r)))
}
