use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::montage::CENTRAL_20;
use crate::record::SignalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceBand {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
}

/// Latent band-limited sources mixed linearly onto channels, plus white noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    labels: Vec<String>,
    mixing: DMatrix<f64>,
    sources: Vec<SourceBand>,
    noise_std: f64,
    sample_rate: f64,
}

impl SyntheticModel {
    pub fn new(
        labels: Vec<String>,
        mixing: DMatrix<f64>,
        sources: Vec<SourceBand>,
        noise_std: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        let (n, k) = mixing.shape();
        if labels.len() != n {
            return Err(Error::validation(format!(
                "{} labels for a mixing matrix with {n} rows",
                labels.len()
            )));
        }
        if sources.len() != k {
            return Err(Error::validation(format!(
                "{} source bands for a mixing matrix with {k} columns",
                sources.len()
            )));
        }
        if k == 0 || k > n {
            return Err(Error::validation(format!("need 1 ≤ K ≤ N, got K={k}, N={n}")));
        }
        if mixing.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("mixing matrix has non-finite entries"));
        }
        let sv = mixing.singular_values();
        let smax = sv.max();
        if sv.min() <= 1e-10 * smax.max(f64::MIN_POSITIVE) {
            return Err(Error::validation("mixing matrix is rank deficient"));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::validation(format!("noise_std must be ≥ 0, got {noise_std}")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::validation(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        for s in &sources {
            if !(s.bandwidth_hz > 0.0 && s.center_hz >= 0.0 && s.center_hz <= sample_rate / 2.0) {
                return Err(Error::validation(format!(
                    "source band {} ± {} Hz is invalid at fs={sample_rate}",
                    s.center_hz,
                    s.bandwidth_hz / 2.0
                )));
            }
        }
        Ok(Self {
            labels,
            mixing,
            sources,
            noise_std,
            sample_rate,
        })
    }

    /// Twenty central channels, four sources at 2/6/10/20 Hz whose weights
    /// decay with distance along the channel list, 5% noise, 160 Hz.
    pub fn default20() -> Self {
        let n = CENTRAL_20.len();
        let centers = [2.0, 6.0, 10.0, 20.0];
        let widths = [2.0, 2.0, 2.0, 4.0];
        let k = centers.len();
        let mut mixing = DMatrix::from_fn(n, k, |i, j| {
            let peak = (j as f64 + 0.5) * n as f64 / k as f64;
            (-(i as f64 - peak).abs() / 5.0).exp()
        });
        let mean_var = mixing.iter().map(|w| w * w).sum::<f64>() / n as f64;
        mixing /= mean_var.sqrt();
        let sources = centers
            .iter()
            .zip(widths)
            .map(|(&center_hz, bandwidth_hz)| SourceBand {
                center_hz,
                bandwidth_hz,
            })
            .collect();
        let labels = CENTRAL_20.iter().map(|s| s.to_string()).collect();
        Self::new(labels, mixing, sources, 0.05, 160.0).expect("default preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default20" => Ok(Self::default20()),
            _ => Err(Error::validation(format!(
                "unknown synthetic preset {name:?} (expected default20)"
            ))),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_channels(&self) -> usize {
        self.labels.len()
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    pub fn sources(&self) -> &[SourceBand] {
        &self.sources
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }
}

/// White Gaussian noise masked to `band` in the frequency domain, scaled to
/// unit variance.
fn band_limited(rng: &mut ChaCha8Rng, len: usize, fs: f64, band: SourceBand) -> Result<Vec<f64>> {
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let lo = band.center_hz - band.bandwidth_hz / 2.0;
    let hi = band.center_hz + band.bandwidth_hz / 2.0;
    for (k, v) in buf.iter_mut().enumerate() {
        let f = k.min(len - k) as f64 * fs / len as f64;
        if f < lo || f > hi {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / len as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64;
    if !(var > 0.0) {
        return Err(Error::Degenerate(format!(
            "no frequency bins fall in {lo}–{hi} Hz for {len} samples at {fs} Hz"
        )));
    }
    let scale = var.sqrt();
    Ok(x.into_iter().map(|v| v / scale).collect())
}

/// Deterministic in `seed`: sources are drawn in order, then the noise
/// matrix row by row.
pub fn synth_correlated(model: &SyntheticModel, duration_s: f64, seed: u64) -> Result<SignalRecord> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::validation(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let len = (duration_s * model.sample_rate).round() as usize;
    if len < 2 {
        return Err(Error::validation(format!(
            "duration {duration_s} s at {} Hz gives fewer than 2 samples",
            model.sample_rate
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = model.sources.len();
    let mut sources = DMatrix::zeros(len, k);
    for (j, band) in model.sources.iter().enumerate() {
        let s = band_limited(&mut rng, len, model.sample_rate, *band)?;
        sources.set_column(j, &nalgebra::DVector::from_vec(s));
    }
    let mut samples = &sources * model.mixing.transpose();
    if model.noise_std > 0.0 {
        let noise = Normal::new(0.0, model.noise_std).expect("validated noise_std");
        for i in 0..len {
            for j in 0..model.n_channels() {
                samples[(i, j)] += noise.sample(&mut rng);
            }
        }
    }
    SignalRecord::new(samples, model.sample_rate, model.labels.clone())
}
