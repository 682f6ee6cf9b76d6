//! Sparse recovery of unmeasured channels.
//!
//! Measurements are a row subset of the identity applied to the channel
//! vector; the KLT coefficients are estimated by basis pursuit denoising over
//! the dictionary `A = Φ·Ψ` and mapped back through `Ψ`.

mod bpdn;
mod oracle;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::resolve_labels;
use crate::klt::KltModel;
use crate::record::SignalRecord;

pub use bpdn::{bpdn_solve, BpdnSolver};
pub use oracle::{l0_oracle, ORACLE_MAX_COLUMNS, ORACLE_MAX_SUPPORT};

/// Which channels are physically recorded. Induces Φ = I_N restricted to the
/// measured rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    measured: Vec<usize>,
    total_channels: usize,
}

impl MeasurementPlan {
    pub fn new(measured: Vec<usize>, total_channels: usize) -> Result<Self> {
        if measured.is_empty() || measured.len() > total_channels {
            return Err(Error::validation(format!(
                "plan must measure between 1 and {total_channels} channels, got {}",
                measured.len()
            )));
        }
        if measured.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("measured indices must be strictly increasing"));
        }
        if let Some(&bad) = measured.iter().find(|&&i| i >= total_channels) {
            return Err(Error::validation(format!(
                "measured index {bad} out of range for {total_channels} channels"
            )));
        }
        Ok(Self {
            measured,
            total_channels,
        })
    }

    /// Resolves labels against `labels`; indices are sorted into channel order.
    pub fn from_labels(labels: &[String], measured: &[String]) -> Result<Self> {
        let mut indices = resolve_labels(labels, measured)?;
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return Err(Error::validation("measured channel listed twice"));
        }
        Self::new(indices, labels.len())
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn total_channels(&self) -> usize {
        self.total_channels
    }

    pub fn num_measured(&self) -> usize {
        self.measured.len()
    }

    pub fn unmeasured(&self) -> Vec<usize> {
        (0..self.total_channels)
            .filter(|i| self.measured.binary_search(i).is_err())
            .collect()
    }

    pub fn measurement_matrix(&self) -> DMatrix<f64> {
        let mut phi = DMatrix::zeros(self.measured.len(), self.total_channels);
        for (row, &col) in self.measured.iter().enumerate() {
            phi[(row, col)] = 1.0;
        }
        phi
    }

    /// The measured entries of `x`, in plan order.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.measured.iter().map(|&i| x[i]).collect()
    }
}

pub fn build_measurement_matrix(plan: &MeasurementPlan) -> DMatrix<f64> {
    plan.measurement_matrix()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum EpsilonPolicy {
    /// ε in signal units.
    Absolute(f64),
    /// ε as a fraction of the (de-meaned) measurement norm.
    Relative(f64),
}

impl EpsilonPolicy {
    pub fn value(&self) -> f64 {
        match *self {
            EpsilonPolicy::Absolute(v) | EpsilonPolicy::Relative(v) => v,
        }
    }

    pub fn resolve(&self, measurement_norm: f64) -> f64 {
        match *self {
            EpsilonPolicy::Absolute(v) => v,
            EpsilonPolicy::Relative(v) => v * measurement_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub epsilon: EpsilonPolicy,
    pub solver_tol: f64,
    pub max_iters: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            epsilon: EpsilonPolicy::Relative(1e-3),
            solver_tol: 1e-6,
            max_iters: 20_000,
        }
    }
}

impl RecoveryConfig {
    pub fn exact() -> Self {
        Self {
            epsilon: EpsilonPolicy::Absolute(0.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon.value();
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::validation(format!("epsilon must be nonnegative, got {eps}")));
        }
        if !(self.solver_tol.is_finite() && self.solver_tol > 0.0) {
            return Err(Error::validation(format!(
                "solver tolerance must be positive, got {}",
                self.solver_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::validation("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Everything needed to reconstruct instants for one (model, plan) pair.
#[derive(Debug, Clone)]
pub struct Reconstructor<'a> {
    model: &'a KltModel,
    plan: MeasurementPlan,
    solver: BpdnSolver,
    measured_means: DVector<f64>,
    config: RecoveryConfig,
}

impl<'a> Reconstructor<'a> {
    pub fn new(model: &'a KltModel, plan: MeasurementPlan, config: RecoveryConfig) -> Result<Self> {
        config.validate()?;
        if plan.total_channels() != model.num_channels() {
            return Err(Error::validation(format!(
                "plan covers {} channels, model has {}",
                plan.total_channels(),
                model.num_channels()
            )));
        }
        let a = plan.measurement_matrix() * model.basis();
        let solver = BpdnSolver::new(a)?;
        let means = model.effective_means();
        let measured_means = DVector::from_iterator(plan.num_measured(), plan.measured().iter().map(|&i| means[i]));
        Ok(Self {
            model,
            plan,
            solver,
            measured_means,
            config,
        })
    }

    pub fn plan(&self) -> &MeasurementPlan {
        &self.plan
    }

    pub fn instant(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.plan.num_measured() {
            return Err(Error::validation(format!(
                "measurement has {} entries, plan measures {}",
                y.len(),
                self.plan.num_measured()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("measurement has non-finite entries"));
        }
        let f = DVector::from_column_slice(y) - &self.measured_means;
        let epsilon = self.config.epsilon.resolve(f.norm());
        let coef = self.solver.solve(f.as_slice(), epsilon, &self.config)?;
        self.model.inverse_transform(&coef.values)
    }
}

pub fn reconstruct_instant(
    model: &KltModel,
    plan: &MeasurementPlan,
    y: &[f64],
    config: &RecoveryConfig,
) -> Result<Vec<f64>> {
    Reconstructor::new(model, plan.clone(), *config)?.instant(y)
}

/// Reconstructs every row of a T×M measurement matrix. Instants are solved
/// in parallel on the current rayon pool; the first failing instant (lowest
/// index) is reported and no partial output is returned.
pub fn reconstruct_record(
    model: &KltModel,
    plan: &MeasurementPlan,
    measured_samples: &DMatrix<f64>,
    sample_rate: f64,
    config: &RecoveryConfig,
) -> Result<SignalRecord> {
    let (t, m) = measured_samples.shape();
    if t == 0 {
        return Err(Error::Degenerate("no instants to reconstruct".into()));
    }
    if m != plan.num_measured() {
        return Err(Error::validation(format!(
            "measurement rows have {m} values, plan measures {}",
            plan.num_measured()
        )));
    }
    let rec = Reconstructor::new(model, plan.clone(), *config)?;
    let rows: Vec<Result<Vec<f64>>> = (0..t)
        .into_par_iter()
        .map(|i| {
            let y: Vec<f64> = measured_samples.row(i).iter().copied().collect();
            rec.instant(&y).map_err(|e| Error::AtInstant {
                index: i,
                source: Box::new(e),
            })
        })
        .collect();
    let n = model.num_channels();
    let mut samples = DMatrix::zeros(t, n);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (j, v) in row.into_iter().enumerate() {
            samples[(i, j)] = v;
        }
    }
    SignalRecord::new(samples, sample_rate, model.labels().to_vec())
}
