//! Reduced-channel EEG acquisition: learn a KLT dictionary from full-montage
//! training data, recover unmeasured channels from a subset by basis-pursuit
//! denoising, and score the result by band-wise fractional spectral measure.

// NaN-rejecting `!(x > 0.0)` checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod klt;
pub mod record;
pub mod recovery;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use record::SignalRecord;
