//! Loading records from CSV and EDF, fetching PhysioNet EEG files, and
//! electrode montage metadata.

mod csv;
mod edf;
mod fetch;
pub mod montage;

use std::path::Path;

use crate::error::{Error, Result};
use crate::record::SignalRecord;

pub use self::csv::{format_sample, parse_csv, write_csv};
pub use self::edf::{parse_edf, write_edf, EdfHeader, EdfSignalHeader, EDF_ANNOTATION_LABEL};
pub use self::fetch::{fetch_physionet, physionet_file_name, Fetcher, PHYSIONET_EEGMMIDB_URL};
pub use self::montage::Montage;

/// Case-folded label with surrounding whitespace and trailing periods removed
/// (PhysioNet stores e.g. `"Fc5."` and `"Cz.."`).
pub fn normalize_label(label: &str) -> String {
    label
        .trim()
        .trim_end_matches(|c: char| c == '.' || c.is_whitespace())
        .to_lowercase()
}

/// Indices of `wanted` within `available`, in `wanted` order, matching on
/// normalized labels.
pub fn resolve_labels(available: &[String], wanted: &[String]) -> Result<Vec<usize>> {
    let normalized: Vec<String> = available.iter().map(|l| normalize_label(l)).collect();
    wanted
        .iter()
        .map(|w| {
            let key = normalize_label(w);
            normalized.iter().position(|l| *l == key).ok_or_else(|| {
                let near: Vec<&str> = available
                    .iter()
                    .zip(&normalized)
                    .filter(|(_, n)| strsim::levenshtein(n, &key) <= 2)
                    .map(|(a, _)| a.as_str())
                    .collect();
                if near.is_empty() {
                    Error::validation(format!("channel {w:?} not found"))
                } else {
                    Error::validation(format!("channel {w:?} not found (did you mean {}?)", near.join(", ")))
                }
            })
        })
        .collect()
}

/// Columns for `labels`, in that order, relabelled with the requested names.
pub fn select_channels(record: &SignalRecord, labels: &[String]) -> Result<SignalRecord> {
    let indices = resolve_labels(record.labels(), labels)?;
    let picked = record.select_indices(&indices)?;
    SignalRecord::new(picked.samples().clone(), picked.sample_rate(), labels.to_vec())
}

/// Loads an EDF file (by `.edf` extension) or a CSV file with the given rate.
pub fn load_record(path: &Path, csv_sample_rate: f64) -> Result<SignalRecord> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let is_edf = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("edf"));
    if is_edf {
        Ok(parse_edf(&bytes)?.1)
    } else {
        parse_csv(&bytes, csv_sample_rate)
    }
}

/// Splits a comma-separated label list, dropping empty entries.
pub fn parse_label_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}
