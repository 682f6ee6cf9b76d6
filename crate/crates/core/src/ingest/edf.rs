//! 16-bit EDF reader and writer.
//!
//! Supported subset: contiguous records, one sampling rate across all
//! non-annotation signals. `EDF Annotations` channels are skipped.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::record::SignalRecord;

pub const EDF_ANNOTATION_LABEL: &str = "EDF Annotations";
const FIXED_HEADER_LEN: usize = 256;
const SIGNAL_HEADER_LEN: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EdfSignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dim: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: f64,
    pub digital_max: f64,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl EdfSignalHeader {
    pub fn is_annotation(&self) -> bool {
        self.label.trim() == EDF_ANNOTATION_LABEL
    }

    fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + (digital as f64 - self.digital_min) * self.gain()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub reserved: String,
    /// `-1` in the file means unknown; the parser infers it from the length.
    pub num_data_records: i64,
    pub record_duration_s: f64,
    pub num_signals: usize,
    pub signals: Vec<EdfSignalHeader>,
}

impl EdfHeader {
    fn record_bytes(&self) -> usize {
        self.signals.iter().map(|s| s.samples_per_record * 2).sum()
    }
}

struct Fields<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Fields<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a str> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::parse(
                1,
                None,
                format!(
                    "truncated header reading {what}: expected at least {end} bytes, file has {}",
                    self.bytes.len()
                ),
            ));
        }
        let raw = &self.bytes[self.pos..end];
        self.pos = end;
        std::str::from_utf8(raw)
            .map(str::trim)
            .map_err(|_| Error::parse(1, None, format!("{what} is not ASCII")))
    }

    fn number<T: std::str::FromStr>(&mut self, len: usize, what: &str) -> Result<T> {
        let s = self.take(len, what)?;
        s.parse()
            .map_err(|_| Error::parse(1, None, format!("{what}: not a number: {s:?}")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<EdfHeader> {
    let mut f = Fields { bytes, pos: 0 };
    let version = f.take(8, "version")?.to_string();
    if version != "0" {
        return Err(Error::Unsupported(format!("EDF version field {version:?}")));
    }
    let patient_id = f.take(80, "patient id")?.to_string();
    let recording_id = f.take(80, "recording id")?.to_string();
    let start_date = f.take(8, "start date")?.to_string();
    let start_time = f.take(8, "start time")?.to_string();
    let header_bytes: usize = f.number(8, "header length")?;
    let reserved = f.take(44, "reserved")?.to_string();
    let num_data_records: i64 = f.number(8, "number of data records")?;
    let record_duration_s: f64 = f.number(8, "record duration")?;
    let num_signals: usize = f.number(4, "number of signals")?;
    if num_signals == 0 {
        return Err(Error::validation("EDF declares zero signals"));
    }
    if header_bytes != FIXED_HEADER_LEN + num_signals * SIGNAL_HEADER_LEN {
        return Err(Error::parse(
            1,
            None,
            format!(
                "header length {header_bytes} does not match {num_signals} signals (expected {})",
                FIXED_HEADER_LEN + num_signals * SIGNAL_HEADER_LEN
            ),
        ));
    }

    let ns = num_signals;
    let mut column = |len: usize, what: &str| -> Result<Vec<String>> {
        (0..ns).map(|_| f.take(len, what).map(String::from)).collect()
    };
    let labels = column(16, "label")?;
    let transducers = column(80, "transducer")?;
    let dims = column(8, "physical dimension")?;
    let pmin = column(8, "physical minimum")?;
    let pmax = column(8, "physical maximum")?;
    let dmin = column(8, "digital minimum")?;
    let dmax = column(8, "digital maximum")?;
    let prefilter = column(80, "prefiltering")?;
    let spr = column(8, "samples per record")?;
    column(32, "signal reserved")?;

    let num = |s: &str, what: &str, i: usize| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::parse(1, None, format!("signal {i} {what}: not a number: {s:?}")))
    };
    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let sig = EdfSignalHeader {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dim: dims[i].clone(),
            physical_min: num(&pmin[i], "physical minimum", i)?,
            physical_max: num(&pmax[i], "physical maximum", i)?,
            digital_min: num(&dmin[i], "digital minimum", i)?,
            digital_max: num(&dmax[i], "digital maximum", i)?,
            prefiltering: prefilter[i].clone(),
            samples_per_record: spr[i]
                .parse()
                .map_err(|_| Error::parse(1, None, format!("signal {i} samples per record: {:?}", spr[i])))?,
        };
        if sig.digital_max <= sig.digital_min {
            return Err(Error::validation(format!(
                "signal {:?} has empty digital range [{}, {}]",
                sig.label, sig.digital_min, sig.digital_max
            )));
        }
        if sig.physical_max == sig.physical_min {
            return Err(Error::validation(format!(
                "signal {:?} has zero physical range",
                sig.label
            )));
        }
        if sig.samples_per_record == 0 {
            return Err(Error::validation(format!(
                "signal {:?} has zero samples per record",
                sig.label
            )));
        }
        signals.push(sig);
    }

    Ok(EdfHeader {
        version,
        patient_id,
        recording_id,
        start_date,
        start_time,
        header_bytes,
        reserved,
        num_data_records,
        record_duration_s,
        num_signals,
        signals,
    })
}

/// Parses header and samples. Physical values use the per-signal affine map
/// `pmin + (d − dmin)·(pmax − pmin)/(dmax − dmin)`.
pub fn parse_edf(bytes: &[u8]) -> Result<(EdfHeader, SignalRecord)> {
    let mut header = parse_header(bytes)?;
    let record_bytes = header.record_bytes();
    let data = &bytes[header.header_bytes..];

    let records = if header.num_data_records < 0 {
        let inferred = data.len() / record_bytes;
        header.num_data_records = inferred as i64;
        inferred
    } else {
        header.num_data_records as usize
    };
    let expected = header.header_bytes + records * record_bytes;
    if bytes.len() < expected {
        return Err(Error::parse(
            1,
            None,
            format!(
                "truncated file: expected {expected} bytes for {records} data records, found {}",
                bytes.len()
            ),
        ));
    }
    if !(header.record_duration_s > 0.0) {
        return Err(Error::Unsupported(format!(
            "record duration {} s",
            header.record_duration_s
        )));
    }

    let kept: Vec<usize> = (0..header.signals.len())
        .filter(|&i| !header.signals[i].is_annotation())
        .collect();
    if kept.is_empty() {
        return Err(Error::validation("EDF has no data signals"));
    }
    let spr = header.signals[kept[0]].samples_per_record;
    if let Some(&odd) = kept.iter().find(|&&i| header.signals[i].samples_per_record != spr) {
        return Err(Error::Unsupported(format!(
            "mixed sampling rates: {:?} has {} samples per record, {:?} has {spr}",
            header.signals[odd].label, header.signals[odd].samples_per_record, header.signals[kept[0]].label
        )));
    }

    // byte offset of each signal inside a data record
    let mut offsets = Vec::with_capacity(header.signals.len());
    let mut acc = 0;
    for s in &header.signals {
        offsets.push(acc);
        acc += s.samples_per_record * 2;
    }

    let total = records * spr;
    let mut samples = DMatrix::zeros(total, kept.len());
    for r in 0..records {
        let rec = &data[r * record_bytes..(r + 1) * record_bytes];
        for (col, &sig) in kept.iter().enumerate() {
            let h = &header.signals[sig];
            let base = offsets[sig];
            for k in 0..spr {
                let d = i16::from_le_bytes([rec[base + 2 * k], rec[base + 2 * k + 1]]);
                samples[(r * spr + k, col)] = h.to_physical(d);
            }
        }
    }
    let sample_rate = spr as f64 / header.record_duration_s;
    let labels = kept.iter().map(|&i| header.signals[i].label.clone()).collect();
    let record = SignalRecord::new(samples, sample_rate, labels)?;
    Ok((header, record))
}

fn field(out: &mut Vec<u8>, value: &str, len: usize) {
    let mut bytes: Vec<u8> = value.bytes().take(len).collect();
    bytes.resize(len, b' ');
    out.extend_from_slice(&bytes);
}

fn number_field(out: &mut Vec<u8>, value: f64, len: usize) {
    let mut s = format!("{value}");
    if s.len() > len {
        s = format!("{value:.*}", len.saturating_sub(3));
        s.truncate(len);
    }
    field(out, &s, len);
}

/// Serializes a header and per-signal digital samples (each
/// `num_data_records × samples_per_record` long) to EDF bytes.
pub fn write_edf(header: &EdfHeader, digital: &[Vec<i16>]) -> Result<Vec<u8>> {
    if digital.len() != header.signals.len() {
        return Err(Error::validation(format!(
            "{} sample vectors for {} signals",
            digital.len(),
            header.signals.len()
        )));
    }
    let records = usize::try_from(header.num_data_records)
        .map_err(|_| Error::validation("number of data records must be known to write"))?;
    for (s, d) in header.signals.iter().zip(digital) {
        if d.len() != records * s.samples_per_record {
            return Err(Error::validation(format!(
                "signal {:?}: {} samples, expected {}",
                s.label,
                d.len(),
                records * s.samples_per_record
            )));
        }
    }
    let ns = header.signals.len();
    let mut out = Vec::with_capacity(FIXED_HEADER_LEN + ns * SIGNAL_HEADER_LEN + records * header.record_bytes());
    field(&mut out, "0", 8);
    field(&mut out, &header.patient_id, 80);
    field(&mut out, &header.recording_id, 80);
    field(&mut out, &header.start_date, 8);
    field(&mut out, &header.start_time, 8);
    field(&mut out, &(FIXED_HEADER_LEN + ns * SIGNAL_HEADER_LEN).to_string(), 8);
    field(&mut out, &header.reserved, 44);
    field(&mut out, &records.to_string(), 8);
    number_field(&mut out, header.record_duration_s, 8);
    field(&mut out, &ns.to_string(), 4);
    let sigs = &header.signals;
    sigs.iter().for_each(|s| field(&mut out, &s.label, 16));
    sigs.iter().for_each(|s| field(&mut out, &s.transducer, 80));
    sigs.iter().for_each(|s| field(&mut out, &s.physical_dim, 8));
    sigs.iter().for_each(|s| number_field(&mut out, s.physical_min, 8));
    sigs.iter().for_each(|s| number_field(&mut out, s.physical_max, 8));
    sigs.iter().for_each(|s| number_field(&mut out, s.digital_min, 8));
    sigs.iter().for_each(|s| number_field(&mut out, s.digital_max, 8));
    sigs.iter().for_each(|s| field(&mut out, &s.prefiltering, 80));
    sigs.iter()
        .for_each(|s| field(&mut out, &s.samples_per_record.to_string(), 8));
    sigs.iter().for_each(|_| field(&mut out, "", 32));
    for r in 0..records {
        for (s, d) in sigs.iter().zip(digital) {
            let spr = s.samples_per_record;
            for v in &d[r * spr..(r + 1) * spr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}
