//! Multi-channel sample matrix with its sampling rate and channel labels.

use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// τ×N matrix of amplitudes (rows are time instants, columns are channels).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    samples: DMatrix<f64>,
    sample_rate: f64,
    labels: Vec<String>,
}

impl SignalRecord {
    /// Validates shape, labels and finiteness. Requires at least one row;
    /// operations that need τ ≥ 2 check it themselves.
    pub fn new(samples: DMatrix<f64>, sample_rate: f64, labels: Vec<String>) -> Result<Self> {
        if samples.ncols() == 0 {
            return Err(Error::validation("record has no channels"));
        }
        if samples.nrows() == 0 {
            return Err(Error::Degenerate("record has no samples".into()));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::validation(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if labels.len() != samples.ncols() {
            return Err(Error::validation(format!(
                "{} labels for {} channels",
                labels.len(),
                samples.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::validation(format!("duplicate channel label {label:?}")));
            }
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % samples.nrows(), pos / samples.nrows());
            return Err(Error::validation(format!(
                "non-finite sample at row {row}, channel {:?}",
                labels[col]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            labels,
        })
    }

    /// Builds a record from row-major rows.
    pub fn from_rows(rows: &[Vec<f64>], sample_rate: f64, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::validation(format!(
                "row {i} has {} values, expected {n}",
                r.len()
            )));
        }
        let samples = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
        Self::new(samples, sample_rate, labels)
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.samples.column(index).iter().copied().collect()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.num_samples() {
            return Err(Error::validation(format!(
                "row range {start}..{end} outside record of {} samples",
                self.num_samples()
            )));
        }
        let samples = self.samples.rows(start, end - start).into_owned();
        Ok(Self {
            samples,
            sample_rate: self.sample_rate,
            labels: self.labels.clone(),
        })
    }

    /// Trims to the time span `[start_s, end_s)` in seconds, clamped to the record.
    pub fn trim_seconds(&self, start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s >= 0.0 && end_s > start_s) {
            return Err(Error::validation(format!("invalid span {start_s}:{end_s} seconds")));
        }
        let start = (start_s * self.sample_rate).round() as usize;
        let end = ((end_s * self.sample_rate).round() as usize).min(self.num_samples());
        self.slice_rows(start, end)
    }

    /// Columns in the given order.
    pub fn select_indices(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.num_channels()) {
            return Err(Error::validation(format!("channel index {bad} out of range")));
        }
        let samples = self.samples.select_columns(indices);
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Self::new(samples, self.sample_rate, labels)
    }
}
