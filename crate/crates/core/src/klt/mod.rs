//! Karhunen-Loève basis estimation.
//!
//! Training data is cut into non-overlapping windows; each window's
//! covariance is diagonalized, the eigenvector matrices are sign-aligned to
//! the first window and averaged element-wise. The averaged matrix is used
//! as-is (it is not re-orthonormalized), so the forward transform goes
//! through an explicit inverse.

mod eigen;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::SignalRecord;

pub use eigen::{eig_symmetric, SymmetricEigen};

/// Sample covariance `(1/(τ−1))·AᵀA`, with `A` optionally de-meaned.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    values: DMatrix<f64>,
    centered: bool,
}

impl CovarianceMatrix {
    /// Wraps an existing matrix, checking symmetry and positive semidefiniteness.
    pub fn from_matrix(values: DMatrix<f64>, centered: bool) -> Result<Self> {
        let eig = eig_symmetric(&values)?;
        let floor = -1e-10 * values.trace().abs();
        if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
            if min < floor {
                return Err(Error::validation(format!(
                    "covariance is not positive semidefinite (eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(Self { values, centered })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }

    pub fn eig(&self) -> Result<SymmetricEigen> {
        eig_symmetric(&self.values)
    }
}

pub fn channel_means(samples: &DMatrix<f64>) -> DVector<f64> {
    let rows = samples.nrows() as f64;
    DVector::from_iterator(samples.ncols(), samples.column_iter().map(|c| c.sum() / rows))
}

fn covariance_of(samples: &DMatrix<f64>, centered: bool) -> Result<CovarianceMatrix> {
    let rows = samples.nrows();
    if rows < 2 {
        return Err(Error::Degenerate(format!(
            "covariance needs at least 2 samples, got {rows}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite sample"));
    }
    let mut a = samples.clone();
    if centered {
        let means = channel_means(samples);
        for (mut col, mean) in a.column_iter_mut().zip(means.iter()) {
            col.add_scalar_mut(-mean);
        }
    }
    let mut values = a.tr_mul(&a) / (rows - 1) as f64;
    // AᵀA is symmetric in exact arithmetic; mirror the upper triangle
    values.fill_lower_triangle_with_upper_triangle();
    Ok(CovarianceMatrix { values, centered })
}

pub fn compute_covariance(record: &SignalRecord, centered: bool) -> Result<CovarianceMatrix> {
    covariance_of(record.samples(), centered)
}

/// Flips each column of `candidate` whose inner product with the same-index
/// column of `reference` is negative.
pub fn align_basis(reference: &DMatrix<f64>, candidate: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if reference.shape() != candidate.shape() {
        return Err(Error::validation(format!(
            "basis shapes differ: {:?} vs {:?}",
            reference.shape(),
            candidate.shape()
        )));
    }
    let mut aligned = candidate.clone();
    for (mut col, ref_col) in aligned.column_iter_mut().zip(reference.column_iter()) {
        if col.dot(&ref_col) < 0.0 {
            col.neg_mut();
        }
    }
    Ok(aligned)
}

/// Learned dictionary: averaged eigenvector matrix Ψ plus what is needed to
/// map channel vectors in and out of it.
#[derive(Debug, Clone)]
pub struct KltModel {
    basis: DMatrix<f64>,
    basis_inverse: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    channel_means: DVector<f64>,
    labels: Vec<String>,
    window_len: usize,
    windows_used: usize,
    centered: bool,
    source: Option<String>,
}

impl PartialEq for KltModel {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
            && self.eigenvalues == other.eigenvalues
            && self.channel_means == other.channel_means
            && self.labels == other.labels
            && self.window_len == other.window_len
            && self.windows_used == other.windows_used
            && self.centered == other.centered
            && self.source == other.source
    }
}

/// Smallest-to-largest singular value ratio below which Ψ counts as singular.
const INVERTIBILITY_TOL: f64 = 1e-10;

impl KltModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        basis: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        channel_means: DVector<f64>,
        labels: Vec<String>,
        window_len: usize,
        windows_used: usize,
        centered: bool,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::validation("model has no channels"));
        }
        if basis.shape() != (n, n) || eigenvalues.len() != n || channel_means.len() != n {
            return Err(Error::validation(format!(
                "model dimensions disagree: basis {:?}, {} eigenvalues, {} means, {n} labels",
                basis.shape(),
                eigenvalues.len(),
                channel_means.len()
            )));
        }
        if window_len == 0 || windows_used == 0 {
            return Err(Error::validation("window_len and windows_used must be positive"));
        }
        if basis
            .iter()
            .chain(eigenvalues.iter())
            .chain(channel_means.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::validation("model has non-finite entries"));
        }
        let largest = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
        for w in eigenvalues.as_slice().windows(2) {
            if w[1] > w[0] {
                return Err(Error::validation("eigenvalues must be nonincreasing"));
            }
        }
        if eigenvalues.iter().any(|&l| l < -1e-10 * largest) {
            return Err(Error::validation("eigenvalues must be nonnegative"));
        }

        let sv = basis.singular_values();
        let (smin, smax) = sv
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if !(smin > INVERTIBILITY_TOL * smax) {
            return Err(Error::Numerical(format!(
                "basis is numerically singular (singular values {smin:.3e}..{smax:.3e})"
            )));
        }
        let basis_inverse = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("basis is not invertible".into()))?;

        Ok(Self {
            basis,
            basis_inverse,
            eigenvalues,
            channel_means,
            labels,
            window_len,
            windows_used,
            centered,
            source: None,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.basis_inverse
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn channel_means(&self) -> &DVector<f64> {
        &self.channel_means
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_channels(&self) -> usize {
        self.labels.len()
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn windows_used(&self) -> usize {
        self.windows_used
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_channels() {
            return Err(Error::validation(format!(
                "vector has {len} entries, model has {} channels",
                self.num_channels()
            )));
        }
        Ok(())
    }

    /// Channel vector to KLT coefficients: `Ψ⁻¹·(x − µ)` (µ = 0 when uncentered).
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite input"));
        }
        let mut v = DVector::from_column_slice(x);
        if self.centered {
            v -= &self.channel_means;
        }
        Ok((&self.basis_inverse * v).as_slice().to_vec())
    }

    /// KLT coefficients back to channels: `Ψ·X + µ` (µ = 0 when uncentered).
    pub fn inverse_transform(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coefficients.len())?;
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite input"));
        }
        let mut v = &self.basis * DVector::from_column_slice(coefficients);
        if self.centered {
            v += &self.channel_means;
        }
        Ok(v.as_slice().to_vec())
    }

    /// Means that apply to measurements (zero for an uncentered model).
    pub fn effective_means(&self) -> DVector<f64> {
        if self.centered {
            self.channel_means.clone()
        } else {
            DVector::zeros(self.num_channels())
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            version: MODEL_FORMAT_VERSION,
            labels: self.labels.clone(),
            window_len: self.window_len,
            windows_used: self.windows_used,
            centered: self.centered,
            means: self.channel_means.as_slice().to_vec(),
            eigenvalues: self.eigenvalues.as_slice().to_vec(),
            basis: self.basis.row_iter().map(|r| r.iter().copied().collect()).collect(),
            source: self.source.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.version
            )));
        }
        let n = doc.labels.len();
        if doc.basis.len() != n || doc.basis.iter().any(|r| r.len() != n) {
            return Err(Error::validation(format!("basis must be {n}x{n}")));
        }
        let basis = DMatrix::from_fn(n, n, |r, c| doc.basis[r][c]);
        let model = Self::new(
            basis,
            DVector::from_vec(doc.eigenvalues),
            DVector::from_vec(doc.means),
            doc.labels,
            doc.window_len,
            doc.windows_used,
            doc.centered,
        )?;
        Ok(match doc.source {
            Some(s) => model.with_source(s),
            None => model,
        })
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    labels: Vec<String>,
    window_len: usize,
    windows_used: usize,
    centered: bool,
    means: Vec<f64>,
    eigenvalues: Vec<f64>,
    basis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

/// Learns the averaged KLT basis from `⌊τ/window_len⌋` non-overlapping windows.
/// Samples past the last full window are ignored.
pub fn build_klt(record: &SignalRecord, window_len: usize, centered: bool) -> Result<KltModel> {
    let tau = record.num_samples();
    if window_len < 2 {
        return Err(Error::Degenerate(format!(
            "window length must be at least 2, got {window_len}"
        )));
    }
    if tau < window_len {
        return Err(Error::Degenerate(format!(
            "record has {tau} samples, shorter than one window of {window_len}"
        )));
    }
    let windows = tau / window_len;
    let samples = record.samples();

    let decompositions: Vec<SymmetricEigen> = (0..windows)
        .into_par_iter()
        .map(|w| {
            let block = samples.rows(w * window_len, window_len).into_owned();
            let cov = covariance_of(&block, centered)?;
            if cov.trace() == 0.0 {
                return Err(Error::Numerical(format!(
                    "window {w} has zero variance in every channel"
                )));
            }
            cov.eig()
        })
        .collect::<Result<_>>()?;

    let n = record.num_channels();
    let reference = &decompositions[0].eigenvectors;
    let mut basis_sum = DMatrix::<f64>::zeros(n, n);
    let mut eig_sum = DVector::<f64>::zeros(n);
    for d in &decompositions {
        basis_sum += align_basis(reference, &d.eigenvectors)?;
        eig_sum += &d.eigenvalues;
    }
    let basis = if windows == 1 {
        decompositions[0].eigenvectors.clone()
    } else {
        basis_sum / windows as f64
    };
    let mut eigenvalues = eig_sum / windows as f64;
    // the mean of sorted vectors is sorted; clamp rounding-level negatives
    for l in eigenvalues.iter_mut() {
        if *l < 0.0 {
            *l = 0.0;
        }
    }

    KltModel::new(
        basis,
        eigenvalues,
        channel_means(samples),
        record.labels().to_vec(),
        window_len,
        windows,
        centered,
    )
    .map_err(|e| match e {
        Error::Numerical(msg) if windows > 1 => Error::Numerical(format!(
            "{msg}; the mean of {windows} aligned window bases cancels a direction, \
             try a different window length"
        )),
        other => other,
    })
}
