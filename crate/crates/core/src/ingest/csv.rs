use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::record::SignalRecord;

/// Header line of labels, then one comma-separated row of decimals per instant.
/// Line and column numbers in errors are 1-based.
pub fn parse_csv(bytes: &[u8], sample_rate: f64) -> Result<SignalRecord> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(1, None, format!("invalid UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(1, None, "missing header line"));
    };
    let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let n = labels.len();

    let mut values = Vec::new();
    let mut rows = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(Error::parse(
                line_no,
                None,
                format!("expected {n} values, found {}", cells.len()),
            ));
        }
        for (col, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, Some(col + 1), format!("not a number: {:?}", cell.trim())))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Degenerate("CSV has a header but no data rows".into()));
    }
    SignalRecord::new(DMatrix::from_row_slice(rows, n, &values), sample_rate, labels)
}

/// 17 significant digits, enough to reproduce any `f64` exactly.
pub fn format_sample(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(record: &SignalRecord) -> String {
    let mut out = record.labels().join(",");
    out.push('\n');
    for row in record.samples().row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_sample(*v));
        }
        out.push('\n');
    }
    out
}
