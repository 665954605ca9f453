//! Rollout-by-test reward matrices and structured noise injection.
//!
//! A prompt's rollout group is scored as a `G x T` binary matrix: row `i` is
//! rollout `i`, column `j` is unit test `j`, and a `1` means the rollout passed
//! that test. A rollout's reward is the fraction of tests it passes.
//!
//! Noise is injected by complementing entries. The granularity of the flip is
//! the [`NoiseMode`]: single cells, whole rows (a rollout misjudged outright),
//! whole columns (a faulty test applied to every rollout) or the whole matrix.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::rng::RngStream;

/// A `G x T` grid of pass/fail outcomes, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RewardMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl RewardMatrix {
    /// Builds a matrix from `0`/`1` rows. All rows must have the same,
    /// non-zero length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.is_empty() || cols == 0 {
            return Err(Error::EmptyMatrix { rows: rows.len(), cols });
        }
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::RaggedMatrix {
                    row: i,
                    expected: cols,
                    found: row.len(),
                });
            }
            for (j, &value) in row.iter().enumerate() {
                match value {
                    0 => cells.push(false),
                    1 => cells.push(true),
                    _ => return Err(Error::NonBinaryEntry { row: i, col: j, value }),
                }
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            cells,
        })
    }

    /// Builds a matrix from row-major booleans.
    pub fn from_cells(rows: usize, cols: usize, cells: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if cells.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left_name: "cells",
                left: cells.len(),
                right_name: "rows*cols",
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn filled(rows: usize, cols: usize, value: bool) -> Result<Self> {
        Self::from_cells(rows, cols, vec![value; rows * cols])
    }

    /// Number of rollouts `G`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of tests `T`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[bool]> {
        self.cells.chunks_exact(self.cols)
    }

    /// Row-major view of all cells.
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.row_iter()
            .map(|r| r.iter().map(|&c| u8::from(c)).collect())
            .collect()
    }
}

impl fmt::Display for RewardMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.row_iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            for &c in row {
                f.write_str(if c { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

/// Granularity of a noise flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Every cell flipped independently with probability `p`.
    Cell,
    /// Every row (rollout) selected with probability `p` and fully complemented.
    Row,
    /// Every column (test) selected with probability `p` and complemented
    /// across all rollouts.
    Column,
    /// One draw: the whole matrix complemented with probability `p`.
    Matrix,
    /// Cells flipped with value-dependent rates: a fail becomes a pass with
    /// probability `fpr`, a pass becomes a fail with probability `fnr`.
    AsymmetricCell,
}

impl NoiseMode {
    pub const ALL: [NoiseMode; 5] = [
        NoiseMode::Cell,
        NoiseMode::Row,
        NoiseMode::Column,
        NoiseMode::Matrix,
        NoiseMode::AsymmetricCell,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseMode::Cell => "cell",
            NoiseMode::Row => "row",
            NoiseMode::Column => "column",
            NoiseMode::Matrix => "matrix",
            NoiseMode::AsymmetricCell => "asymmetric-cell",
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("mode", s, "expected cell, row, column, matrix or asymmetric-cell"))
    }
}

/// How a [`RewardMatrix`] gets corrupted.
///
/// `rate_p` drives the four symmetric modes; `fpr`/`fnr` only drive
/// [`NoiseMode::AsymmetricCell`]. The unused fields are ignored but still
/// validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub rate_p: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn symmetric(mode: NoiseMode, rate_p: f64, seed: u64) -> Self {
        Self {
            mode,
            rate_p,
            fpr: 0.0,
            fnr: 0.0,
            seed,
        }
    }

    pub fn asymmetric(fpr: f64, fnr: f64, seed: u64) -> Self {
        Self {
            mode: NoiseMode::AsymmetricCell,
            rate_p: 0.0,
            fpr,
            fnr,
            seed,
        }
    }

    pub fn noiseless(seed: u64) -> Self {
        Self::symmetric(NoiseMode::Cell, 0.0, seed)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("rate_p", self.rate_p)?;
        check_probability("fpr", self.fpr)?;
        check_probability("fnr", self.fnr)
    }

    /// The false-positive and false-negative rates this spec induces on a
    /// single cell.
    pub fn cell_error_rates(&self) -> (f64, f64) {
        match self.mode {
            NoiseMode::AsymmetricCell => (self.fpr, self.fnr),
            _ => (self.rate_p, self.rate_p),
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Returns a corrupted copy of `matrix`.
///
/// Draw order is fixed so a given `(spec, rng)` always yields the same output:
/// row-major for cell modes, one draw per row or column for the structured
/// modes, a single draw for [`NoiseMode::Matrix`].
pub fn apply_noise(matrix: &RewardMatrix, spec: &NoiseSpec, rng: &RngStream) -> Result<RewardMatrix> {
    spec.validate()?;
    let mut gen = rng.rng();
    let (rows, cols) = matrix.shape();
    let p = spec.rate_p;
    let mut cells = matrix.cells.clone();

    match spec.mode {
        NoiseMode::Cell => {
            for c in cells.iter_mut() {
                if bernoulli(&mut gen, p) {
                    *c = !*c;
                }
            }
        }
        NoiseMode::Row => {
            for row in cells.chunks_exact_mut(cols) {
                if bernoulli(&mut gen, p) {
                    row.iter_mut().for_each(|c| *c = !*c);
                }
            }
        }
        NoiseMode::Column => {
            let flipped: Vec<bool> = (0..cols).map(|_| bernoulli(&mut gen, p)).collect();
            for row in cells.chunks_exact_mut(cols) {
                for (c, &flip) in row.iter_mut().zip(&flipped) {
                    *c ^= flip;
                }
            }
        }
        NoiseMode::Matrix => {
            if bernoulli(&mut gen, p) {
                cells.iter_mut().for_each(|c| *c = !*c);
            }
        }
        NoiseMode::AsymmetricCell => {
            for c in cells.iter_mut() {
                let rate = if *c { spec.fnr } else { spec.fpr };
                if bernoulli(&mut gen, rate) {
                    *c = !*c;
                }
            }
        }
    }

    RewardMatrix::from_cells(rows, cols, cells)
}

// One uniform per decision, shared by every mode, so AsymmetricCell with
// fpr == fnr == p replays Cell mode draw for draw.
fn bernoulli<R: Rng>(gen: &mut R, p: f64) -> bool {
    gen.random::<f64>() < p
}

/// Per-rollout reward: the fraction of tests passed in each row.
pub fn rollout_rewards(matrix: &RewardMatrix) -> Vec<f64> {
    let t = matrix.cols() as f64;
    matrix
        .row_iter()
        .map(|row| row.iter().filter(|&&c| c).count() as f64 / t)
        .collect()
}

/// The noise stream for one epoch (or training step). Each epoch gets its own
/// substream of `spec.seed`, so corruption is resampled independently per
/// epoch yet replayable.
pub fn resample_epoch_noise(spec: &NoiseSpec, epoch: u64) -> RngStream {
    RngStream::new(spec.seed, epoch)
}
