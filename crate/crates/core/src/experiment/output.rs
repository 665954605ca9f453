//! CSV helpers. Floats are written with 17 significant digits so every value
//! reads back bit-exactly; undefined ratios are written as `null`.

use std::fs::File;
use std::path::{Path, PathBuf};

use super::ExperimentError;
use crate::metrics::ConfusionReport;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_string(), fmt_float)
}

pub const CONFUSION_COLUMNS: [&str; 8] = ["tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "f1"];

pub fn confusion_fields(r: &ConfusionReport) -> [String; 8] {
    [
        r.tp.to_string(),
        r.fp.to_string(),
        r.tn.to_string(),
        r.fn_.to_string(),
        fmt_opt(r.accuracy),
        fmt_opt(r.precision),
        fmt_opt(r.recall),
        fmt_opt(r.f1),
    ]
}

/// A CSV file with a fixed header.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
    width: usize,
}

impl Table {
    pub fn create<S: AsRef<str>>(path: &Path, header: &[S]) -> Result<Self, ExperimentError> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| ExperimentError::csv(path, e))?;
        writer
            .write_record(header.iter().map(AsRef::as_ref))
            .map_err(|e| ExperimentError::csv(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            width: header.len(),
        })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<(), ExperimentError> {
        debug_assert_eq!(fields.len(), self.width, "row width differs from header");
        self.writer
            .write_record(fields.iter().map(AsRef::as_ref))
            .map_err(|e| ExperimentError::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, ExperimentError> {
        self.writer.flush().map_err(|e| ExperimentError::io(&self.path, e))?;
        Ok(self.path)
    }
}
