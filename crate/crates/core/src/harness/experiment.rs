use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::montage::{CENTRAL_20, CENTRAL_LINE_7, TEN_TWENTY_IN_CENTRAL};
use crate::ingest::{fetch_physionet, load_record, normalize_label, select_channels, write_csv, Fetcher};
use crate::klt::{build_klt, KltModel};
use crate::record::SignalRecord;
use crate::recovery::{reconstruct_record, MeasurementPlan, RecoveryConfig};
use crate::spectral::{compare_spectra, default_bands, BandDefinition, SpectralReport};

use super::synth::{synth_correlated, SyntheticModel};

pub const CACHE_DIR_ENV: &str = "EEGCS_CACHE_DIR";

/// `$EEGCS_CACHE_DIR`, else `./physionet-cache`.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("physionet-cache"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Training record drawn with `seed`, test record with `seed + 1`.
    Synthetic {
        preset: String,
        seed: u64,
        #[serde(default = "default_train_s")]
        train_duration_s: f64,
        #[serde(default = "default_test_s")]
        test_duration_s: f64,
    },
    Physionet {
        subject: u32,
        train_record: u32,
        test_record: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cache_dir: Option<PathBuf>,
    },
    /// EDF or CSV files; `sample_rate` applies to CSV only.
    Files {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "default_rate")]
        sample_rate: f64,
    },
}

fn default_train_s() -> f64 {
    60.0
}
fn default_test_s() -> f64 {
    10.0
}
fn default_rate() -> f64 {
    160.0
}
fn default_window() -> usize {
    1000
}
fn default_span() -> (f64, f64) {
    (0.0, 10.0)
}
fn default_centered() -> bool {
    true
}

impl DataSource {
    fn describe(&self, role: &str) -> String {
        match self {
            DataSource::Synthetic { preset, seed, .. } => {
                let s = if role == "train" { *seed } else { seed.wrapping_add(1) };
                format!("synthetic:{preset}:seed={s}")
            }
            DataSource::Physionet {
                subject,
                train_record,
                test_record,
                ..
            } => {
                let r = if role == "train" { train_record } else { test_record };
                format!("physionet:eegmmidb:S{subject:03}R{r:02}")
            }
            DataSource::Files { train, test, .. } => {
                let p = if role == "train" { train } else { test };
                format!("file:{}", p.display())
            }
        }
    }

    fn load(&self, role: &str) -> Result<SignalRecord> {
        match self {
            DataSource::Synthetic {
                preset,
                seed,
                train_duration_s,
                test_duration_s,
            } => {
                let model = SyntheticModel::preset(preset)?;
                if role == "train" {
                    synth_correlated(&model, *train_duration_s, *seed)
                } else {
                    synth_correlated(&model, *test_duration_s, seed.wrapping_add(1))
                }
            }
            DataSource::Physionet {
                subject,
                train_record,
                test_record,
                cache_dir,
            } => {
                let r = if role == "train" { *train_record } else { *test_record };
                let dir = cache_dir.clone().unwrap_or_else(default_cache_dir);
                let path = fetch_physionet(*subject, r, &dir)?;
                load_record(&path, default_rate())
            }
            DataSource::Files {
                train,
                test,
                sample_rate,
            } => load_record(if role == "train" { train } else { test }, *sample_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub channel_subset: Vec<String>,
    #[serde(default = "default_window")]
    pub window_len: usize,
    pub measured_labels: Vec<String>,
    #[serde(default = "default_span")]
    pub test_span_s: (f64, f64),
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default = "default_bands")]
    pub bands: Vec<BandDefinition>,
    /// Subtract training channel means before the transform.
    #[serde(default = "default_centered")]
    pub centered: bool,
}

fn labels(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Picks entries of `list` by 1-based position.
fn by_position(list: &[&str], positions: &[usize]) -> Vec<String> {
    positions.iter().map(|&p| list[p - 1].to_string()).collect()
}

/// (subject, train record, test record, measured positions within central-20)
const CENTRAL_20_SUBJECTS: [(u32, u32, u32, [usize; 10]); 6] = [
    (1, 3, 7, [1, 4, 5, 6, 9, 11, 12, 15, 19, 20]),
    (8, 4, 8, [1, 2, 6, 8, 9, 10, 13, 14, 16, 17]),
    (41, 5, 9, [4, 6, 7, 8, 11, 12, 15, 17, 19, 20]),
    (61, 6, 10, [2, 6, 8, 9, 10, 14, 15, 17, 18, 19]),
    (77, 3, 14, [1, 5, 7, 8, 9, 11, 13, 14, 17, 20]),
    (104, 4, 13, [2, 6, 7, 8, 10, 11, 15, 16, 17, 20]),
];

pub const PRESET_NAMES: [&str; 8] = ["default20", "s1", "s8", "s41", "s61", "s77", "s104", "s64-1020"];

impl ExperimentSpec {
    /// Synthetic 20-channel run measuring every other channel.
    pub fn default20(seed: u64) -> Self {
        let measured = (0..CENTRAL_20.len())
            .step_by(2)
            .map(|i| CENTRAL_20[i].to_string())
            .collect();
        Self {
            source: DataSource::Synthetic {
                preset: "default20".into(),
                seed,
                train_duration_s: default_train_s(),
                test_duration_s: default_test_s(),
            },
            channel_subset: labels(&CENTRAL_20),
            window_len: default_window(),
            measured_labels: measured,
            test_span_s: default_span(),
            recovery: RecoveryConfig::default(),
            bands: default_bands(),
            centered: true,
        }
    }

    /// Seven channels on the central line, measuring the three 10-20 sites.
    pub fn ten_twenty(subject: u32, train_record: u32, test_record: u32, recovery: RecoveryConfig) -> Self {
        Self {
            source: DataSource::Physionet {
                subject,
                train_record,
                test_record,
                cache_dir: None,
            },
            channel_subset: labels(&CENTRAL_LINE_7),
            window_len: default_window(),
            measured_labels: labels(&TEN_TWENTY_IN_CENTRAL),
            test_span_s: default_span(),
            recovery,
            bands: default_bands(),
            centered: true,
        }
    }

    /// `default20`, the six subjects of the central-20 comparison (`s1` …
    /// `s104`) and `s64-1020`.
    pub fn preset(name: &str) -> Result<Self> {
        if name == "default20" {
            return Ok(Self::default20(42));
        }
        if name == "s64-1020" {
            return Ok(Self::ten_twenty(64, 12, 12, RecoveryConfig::default()));
        }
        let subject: Option<u32> = name.strip_prefix('s').and_then(|s| s.parse().ok());
        let row = CENTRAL_20_SUBJECTS.iter().find(|r| Some(r.0) == subject).ok_or_else(|| {
            Error::validation(format!(
                "unknown experiment preset {name:?} (expected one of {})",
                PRESET_NAMES.join(", ")
            ))
        })?;
        Ok(Self {
            source: DataSource::Physionet {
                subject: row.0,
                train_record: row.1,
                test_record: row.2,
                cache_dir: None,
            },
            channel_subset: labels(&CENTRAL_20),
            window_len: default_window(),
            measured_labels: by_position(&CENTRAL_20, &row.3),
            test_span_s: default_span(),
            recovery: RecoveryConfig::default(),
            bands: default_bands(),
            centered: true,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let subset: Vec<String> = self.channel_subset.iter().map(|l| normalize_label(l)).collect();
        for (i, l) in subset.iter().enumerate() {
            if subset[..i].contains(l) {
                return Err(Error::validation(format!(
                    "channel {:?} listed twice in channel_subset",
                    self.channel_subset[i]
                )));
            }
        }
        let mut seen = Vec::new();
        for m in &self.measured_labels {
            let key = normalize_label(m);
            if !subset.contains(&key) {
                return Err(Error::validation(format!(
                    "measured channel {m:?} is not in channel_subset"
                )));
            }
            if seen.contains(&key) {
                return Err(Error::validation(format!("measured channel {m:?} listed twice")));
            }
            seen.push(key);
        }
        let m = self.measured_labels.len();
        if m == 0 || m >= subset.len() {
            return Err(Error::validation(format!(
                "need 1 ≤ measured < {} channels, got {m}",
                subset.len()
            )));
        }
        if self.window_len < 2 {
            return Err(Error::validation("window_len must be at least 2"));
        }
        let (a, b) = self.test_span_s;
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::validation(format!("invalid test span {a}:{b}")));
        }
        self.recovery.validate()?;
        if self.bands.is_empty() {
            return Err(Error::validation("no bands given"));
        }
        for band in &self.bands {
            band.validate()?;
        }
        Ok(())
    }

    /// Channels that are reconstructed rather than measured, in subset order.
    pub fn unmeasured_labels(&self) -> Vec<String> {
        let measured: Vec<String> = self.measured_labels.iter().map(|l| normalize_label(l)).collect();
        self.channel_subset
            .iter()
            .filter(|l| !measured.contains(&normalize_label(l)))
            .cloned()
            .collect()
    }

    pub fn training_record(&self) -> Result<SignalRecord> {
        select_channels(&self.source.load("train")?, &self.channel_subset)
    }

    /// Test record restricted to the channel subset and the test span.
    pub fn test_record(&self) -> Result<SignalRecord> {
        let full = select_channels(&self.source.load("test")?, &self.channel_subset)?;
        full.trim_seconds(self.test_span_s.0, self.test_span_s.1)
    }
}

pub fn run_training(spec: &ExperimentSpec) -> Result<KltModel> {
    spec.validate()?;
    let record = spec.training_record()?;
    let model = build_klt(&record, spec.window_len, spec.centered)?;
    log::info!(
        "trained {}×{} basis from {} windows of {}",
        model.num_channels(),
        model.num_channels(),
        model.windows_used(),
        spec.window_len
    );
    Ok(model.with_source(spec.source.describe("train")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub report: SpectralReport,
    pub original: SignalRecord,
    pub reconstructed: SignalRecord,
}

/// Reconstructs `original` from its `measured` channels and compares spectra
/// on the remaining channels.
pub fn evaluate(
    model: &KltModel,
    original: &SignalRecord,
    measured: &[String],
    recovery: &RecoveryConfig,
    bands: &[BandDefinition],
) -> Result<TestOutcome> {
    let aligned = select_channels(original, model.labels())?;
    let plan = MeasurementPlan::from_labels(model.labels(), measured)?;
    let measured_samples = aligned.select_indices(plan.measured())?.samples().clone();
    let reconstructed = reconstruct_record(model, &plan, &measured_samples, aligned.sample_rate(), recovery)?;
    let compared: Vec<String> = plan.unmeasured().iter().map(|&i| model.labels()[i].clone()).collect();
    let report = compare_spectra(&aligned, &reconstructed, &compared, bands)?;
    Ok(TestOutcome {
        report,
        original: aligned,
        reconstructed,
    })
}

pub fn run_test(spec: &ExperimentSpec, model: &KltModel) -> Result<TestOutcome> {
    spec.validate()?;
    let original = spec.test_record()?;
    log::info!(
        "reconstructing {} instants from {} of {} channels",
        original.num_samples(),
        spec.measured_labels.len(),
        model.num_channels()
    );
    evaluate(model, &original, &spec.measured_labels, &spec.recovery, &spec.bands)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub model: KltModel,
    pub outcome: TestOutcome,
    pub report_path: PathBuf,
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TABLE: &str = "report.txt";
pub const RECONSTRUCTED_CSV: &str = "reconstructed.csv";
pub const MODEL_JSON: &str = "model.json";
pub const SPEC_JSON: &str = "spec.json";

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Trains, tests and writes the spec, model, report (JSON and table) and
/// reconstructed record into `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunOutput> {
    let model = run_training(spec)?;
    let outcome = run_test(spec, &model)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write(&out_dir.join(SPEC_JSON), &spec.to_json()?)?;
    write(&out_dir.join(MODEL_JSON), &model.to_json()?)?;
    write(&out_dir.join(RECONSTRUCTED_CSV), &write_csv(&outcome.reconstructed))?;
    write(&out_dir.join(REPORT_TABLE), &outcome.report.to_table())?;
    let report_path = out_dir.join(REPORT_JSON);
    write(&report_path, &outcome.report.to_json()?)?;
    Ok(RunOutput {
        model,
        outcome,
        report_path,
    })
}

/// Central-line experiment: learn C5…C6, measure C3/Cz/C4, report on the
/// other four.
pub fn run_1020_experiment(
    subject: u32,
    train_record: u32,
    test_record: u32,
    recovery: RecoveryConfig,
    cache_dir: Option<&Path>,
) -> Result<SpectralReport> {
    let mut spec = ExperimentSpec::ten_twenty(subject, train_record, test_record, recovery);
    if let DataSource::Physionet { cache_dir: c, .. } = &mut spec.source {
        *c = cache_dir.map(Path::to_path_buf);
    }
    let model = run_training(&spec)?;
    Ok(run_test(&spec, &model)?.report)
}

/// Fetches without loading, for warming a cache.
pub fn prefetch(spec: &ExperimentSpec, fetcher: &Fetcher) -> Result<Vec<PathBuf>> {
    match &spec.source {
        DataSource::Physionet {
            subject,
            train_record,
            test_record,
            cache_dir,
        } => {
            let dir = cache_dir.clone().unwrap_or_else(default_cache_dir);
            let mut paths = vec![fetcher.fetch(*subject, *train_record, &dir)?];
            if test_record != train_record {
                paths.push(fetcher.fetch(*subject, *test_record, &dir)?);
            }
            Ok(paths)
        }
        _ => Ok(Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::SourceBand;
    use nalgebra::DMatrix;

    #[test]
    fn presets_are_valid() {
        for name in PRESET_NAMES {
            let spec = ExperimentSpec::preset(name).unwrap();
            spec.validate().unwrap();
        }
        assert!(ExperimentSpec::preset("s2").is_err());
    }

    #[test]
    fn table_positions_map_to_labels() {
        let s1 = ExperimentSpec::preset("s1").unwrap();
        assert_eq!(
            s1.measured_labels,
            vec!["Fc5", "Fcz", "Fc2", "Fc4", "C3", "Cz", "C2", "Cp5", "Cp2", "Cp4"]
        );
        assert_eq!(s1.unmeasured_labels().len(), 10);
        let s77 = ExperimentSpec::preset("s77").unwrap();
        assert!(matches!(
            s77.source,
            DataSource::Physionet {
                train_record: 3,
                test_record: 14,
                ..
            }
        ));
    }

    #[test]
    fn default20_measures_alternate_channels() {
        let spec = ExperimentSpec::default20(1);
        assert_eq!(spec.measured_labels.len(), 10);
        assert_eq!(spec.measured_labels[0], "Fc5");
        assert_eq!(spec.measured_labels[1], "Fc1");
        assert_eq!(spec.unmeasured_labels()[0], "Fc3");
    }

    #[test]
    fn validation_rules() {
        let mut spec = ExperimentSpec::default20(1);
        spec.measured_labels.push("Oz".into());
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default20(1);
        spec.measured_labels = spec.channel_subset.clone();
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default20(1);
        spec.measured_labels.clear();
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default20(1);
        spec.test_span_s = (5.0, 5.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let spec = ExperimentSpec::preset("s8").unwrap();
        assert_eq!(ExperimentSpec::from_json(&spec.to_json().unwrap()).unwrap(), spec);
        let minimal = r#"{
            "source": {"kind": "synthetic", "preset": "default20", "seed": 3},
            "channel_subset": ["Fc5", "Fc3", "Fc1"],
            "measured_labels": ["Fc5"]
        }"#;
        let spec = ExperimentSpec::from_json(minimal).unwrap();
        assert_eq!(spec.window_len, 1000);
        assert_eq!(spec.test_span_s, (0.0, 10.0));
        assert_eq!(spec.recovery, RecoveryConfig::default());
        assert_eq!(spec.bands.len(), 5);
    }

    #[test]
    fn training_window_too_long() {
        let mut spec = ExperimentSpec::default20(1);
        if let DataSource::Synthetic { train_duration_s, .. } = &mut spec.source {
            *train_duration_s = 5.0;
        }
        assert!(matches!(run_training(&spec), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ten_second_span_gives_1600_instants() {
        let spec = ExperimentSpec::default20(5);
        assert_eq!(spec.test_record().unwrap().num_samples(), 1600);
    }

    #[test]
    fn full_measurement_gives_zero_error() {
        let model = SyntheticModel::new(
            vec!["a".into(), "b".into(), "c".into()],
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]),
            vec![
                SourceBand {
                    center_hz: 3.0,
                    bandwidth_hz: 2.0,
                },
                SourceBand {
                    center_hz: 10.0,
                    bandwidth_hz: 2.0,
                },
            ],
            0.1,
            160.0,
        )
        .unwrap();
        let train = synth_correlated(&model, 20.0, 1).unwrap();
        let test = synth_correlated(&model, 5.0, 2).unwrap();
        let klt = build_klt(&train, 1000, true).unwrap();
        let all = klt.labels().to_vec();
        let outcome = evaluate(&klt, &test, &all, &RecoveryConfig::exact(), &default_bands()).unwrap();
        assert!(outcome.report.channels.is_empty());
        let report = compare_spectra(&test, &test, &all, &default_bands()).unwrap();
        for b in &report.bands {
            assert_eq!(b.avg_error_percent, Some(0.0));
        }
    }
}
