//! Averaged 512-point magnitude spectra and the fractional spectral measure
//! (FSM): the share of 0–40 Hz spectral magnitude that falls in a band.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::resolve_labels;
use crate::record::SignalRecord;

pub const DFT_LEN: usize = 512;
pub const SEGMENT_HOP: usize = DFT_LEN / 2;
pub const ONE_SIDED_BINS: usize = DFT_LEN / 2 + 1;
/// Upper edge of the FSM reference band.
pub const FSM_MAX_HZ: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub name: String,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl BandDefinition {
    pub fn new(name: impl Into<String>, lo_hz: f64, hi_hz: f64) -> Result<Self> {
        let band = Self {
            name: name.into(),
            lo_hz,
            hi_hz,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo_hz >= 0.0 && self.hi_hz > self.lo_hz && self.hi_hz <= FSM_MAX_HZ) {
            return Err(Error::validation(format!(
                "band {:?} [{}, {}) must lie within [0, {FSM_MAX_HZ}] Hz",
                self.name, self.lo_hz, self.hi_hz
            )));
        }
        Ok(())
    }

    fn contains(&self, hz: f64) -> bool {
        let top = self.hi_hz == FSM_MAX_HZ;
        hz >= self.lo_hz && (hz < self.hi_hz || (top && hz <= self.hi_hz))
    }
}

/// delta [0,4), theta [4,8), alpha [8,13), beta [13,30), gamma [30,40].
pub fn default_bands() -> Vec<BandDefinition> {
    [
        ("delta", 0.0, 4.0),
        ("theta", 4.0, 8.0),
        ("alpha", 8.0, 13.0),
        ("beta", 13.0, 30.0),
        ("gamma", 30.0, 40.0),
    ]
    .into_iter()
    .map(|(name, lo_hz, hi_hz)| BandDefinition {
        name: name.to_string(),
        lo_hz,
        hi_hz,
    })
    .collect()
}

/// Symmetric Hamming window, `0.54 − 0.46·cos(2πk/(n−1))`.
pub fn hamming_window(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => {
            let denom = (n - 1) as f64;
            (0..n)
                .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
                .collect()
        }
    }
}

fn fft_512() -> &'static Arc<dyn Fft<f64>> {
    static PLAN: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    PLAN.get_or_init(|| FftPlanner::new().plan_fft_forward(DFT_LEN))
}

fn hamming_512() -> &'static [f64] {
    static WINDOW: OnceLock<Vec<f64>> = OnceLock::new();
    WINDOW.get_or_init(|| hamming_window(DFT_LEN))
}

/// Forward DFT, `X[k] = Σₙ x[n]·e^{−2πikn/512}`.
pub fn dft_512(frame: &[f64; DFT_LEN]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_512().process(&mut buf);
    buf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedSpectrum {
    /// One-sided bins 0..=256.
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub segments: usize,
}

/// Segments start every 256 samples until one reaches the end of the signal;
/// the last (or only) segment is zero-padded to 512. Each segment is
/// Hamming-windowed and transformed; bin magnitudes are averaged.
pub fn averaged_spectrum(signal: &[f64], sample_rate: f64) -> Result<AveragedSpectrum> {
    if signal.is_empty() {
        return Err(Error::validation("cannot take the spectrum of an empty signal"));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::validation(format!("invalid sample rate {sample_rate}")));
    }
    let window = hamming_512();
    let mut sums = vec![0.0; ONE_SIDED_BINS];
    let mut frame = [0.0; DFT_LEN];
    let mut segments = 0;
    let offsets = (0..signal.len())
        .step_by(SEGMENT_HOP)
        .take_while(|&o| o == 0 || o + DFT_LEN - SEGMENT_HOP < signal.len());
    for offset in offsets {
        let chunk = &signal[offset..signal.len().min(offset + DFT_LEN)];
        frame.fill(0.0);
        for (k, &x) in chunk.iter().enumerate() {
            frame[k] = x * window[k];
        }
        let spectrum = dft_512(&frame);
        for (sum, c) in sums.iter_mut().zip(&spectrum[..ONE_SIDED_BINS]) {
            *sum += c.norm();
        }
        segments += 1;
    }
    let count = segments as f64;
    Ok(AveragedSpectrum {
        magnitudes: sums.into_iter().map(|s| s / count).collect(),
        bin_hz: sample_rate / DFT_LEN as f64,
        segments,
    })
}

/// Band magnitude over 0–40 Hz magnitude.
pub fn fsm(spectrum: &AveragedSpectrum, band: &BandDefinition) -> Result<f64> {
    band.validate()?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &mag) in spectrum.magnitudes.iter().enumerate() {
        let hz = k as f64 * spectrum.bin_hz;
        if hz > FSM_MAX_HZ {
            break;
        }
        den += mag;
        if band.contains(hz) {
            num += mag;
        }
    }
    if den <= 0.0 {
        return Err(Error::UndefinedSpectrum(
            "no spectral magnitude between 0 and 40 Hz".into(),
        ));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFsm {
    pub band: String,
    pub original: f64,
    pub reconstructed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFsm {
    pub label: String,
    pub bands: Vec<BandFsm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub band: String,
    /// Mean of `100·|O − R|/O` over channels with nonzero original FSM;
    /// `None` when every channel was excluded.
    pub avg_error_percent: Option<f64>,
    /// Channels left out because their original FSM was zero.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub channels: Vec<ChannelFsm>,
    pub bands: Vec<BandSummary>,
}

impl SpectralReport {
    pub fn band(&self, name: &str) -> Option<&BandSummary> {
        self.bands.iter().find(|b| b.band.eq_ignore_ascii_case(name))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Channel rows with `(O) (R)` pairs per band and an average-error footer.
    pub fn to_table(&self) -> String {
        const CELL: usize = 15;
        let label_width = self
            .channels
            .iter()
            .map(|c| c.label.len())
            .chain(std::iter::once("Avg error".len()))
            .max()
            .unwrap_or(9);
        let mut out = String::new();

        let _ = write!(out, "{:<label_width$}", "Chnl");
        for b in &self.bands {
            let _ = write!(out, " | {:^CELL$}", capitalize(&b.band));
        }
        out.push('\n');
        let _ = write!(out, "{:<label_width$}", "");
        for _ in &self.bands {
            let _ = write!(out, " | {:^CELL$}", "(O)     (R)");
        }
        out.push('\n');
        let rule = label_width + self.bands.len() * (CELL + 3);
        out.push_str(&"-".repeat(rule));
        out.push('\n');

        for ch in &self.channels {
            let _ = write!(out, "{:<label_width$}", ch.label);
            for b in &ch.bands {
                let cell = format!("{:.3}   {:.3}", b.original, b.reconstructed);
                let _ = write!(out, " | {cell:^CELL$}");
            }
            out.push('\n');
        }
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        let _ = write!(out, "{:<label_width$}", "Avg error");
        for b in &self.bands {
            let cell = match b.avg_error_percent {
                Some(e) => format!("{e:.1}%"),
                None => "n/a".to_string(),
            };
            let _ = write!(out, " | {cell:^CELL$}");
        }
        out.push('\n');
        out
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn band_fsms(signal: &[f64], sample_rate: f64, bands: &[BandDefinition]) -> Result<Vec<f64>> {
    let spectrum = averaged_spectrum(signal, sample_rate)?;
    bands.iter().map(|b| fsm(&spectrum, b)).collect()
}

/// Per-channel, per-band FSM of both records and the average relative error
/// per band.
pub fn compare_spectra(
    original: &SignalRecord,
    reconstructed: &SignalRecord,
    channels: &[String],
    bands: &[BandDefinition],
) -> Result<SpectralReport> {
    if original.sample_rate() != reconstructed.sample_rate() {
        return Err(Error::validation(format!(
            "sample rates differ: {} vs {}",
            original.sample_rate(),
            reconstructed.sample_rate()
        )));
    }
    if original.num_samples() != reconstructed.num_samples() {
        return Err(Error::validation(format!(
            "record lengths differ: {} vs {}",
            original.num_samples(),
            reconstructed.num_samples()
        )));
    }
    for b in bands {
        b.validate()?;
    }
    let orig_idx = resolve_labels(original.labels(), channels)?;
    let recon_idx = resolve_labels(reconstructed.labels(), channels)?;
    let fs = original.sample_rate();

    let rows: Vec<ChannelFsm> = orig_idx
        .par_iter()
        .zip(recon_idx.par_iter())
        .map(|(&o, &r)| {
            let fo = band_fsms(&original.channel(o), fs, bands)?;
            let fr = band_fsms(&reconstructed.channel(r), fs, bands)?;
            Ok(ChannelFsm {
                label: original.labels()[o].clone(),
                bands: bands
                    .iter()
                    .zip(fo.into_iter().zip(fr))
                    .map(|(b, (original, reconstructed))| BandFsm {
                        band: b.name.clone(),
                        original,
                        reconstructed,
                    })
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    let summaries = bands
        .iter()
        .enumerate()
        .map(|(bi, b)| {
            let mut sum = 0.0;
            let mut used = 0;
            let mut excluded = 0;
            for ch in &rows {
                let cell = &ch.bands[bi];
                if cell.original == 0.0 {
                    excluded += 1;
                    continue;
                }
                sum += 100.0 * (cell.original - cell.reconstructed).abs() / cell.original;
                used += 1;
            }
            if excluded > 0 {
                log::warn!("band {}: {excluded} channel(s) with zero original FSM excluded", b.name);
            }
            BandSummary {
                band: b.name.clone(),
                avg_error_percent: (used > 0).then(|| sum / used as f64),
                excluded,
            }
        })
        .collect();

    Ok(SpectralReport {
        channels: rows,
        bands: summaries,
    })
}
