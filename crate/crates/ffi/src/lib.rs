//! C ABI for the `eegcs` library.
//!
//! Every fallible function returns an [`EegcsStatus`]. On failure the
//! message is available from [`eegcs_last_error_message`] on the same thread.
//! Sample matrices are row-major: one row per time instant.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eegcs::klt::{build_klt, KltModel};
use eegcs::recovery::{reconstruct_record, EpsilonPolicy, MeasurementPlan, RecoveryConfig};
use eegcs::spectral::{band_fsms, default_bands};
use eegcs::{Error, SignalRecord};
use nalgebra::DMatrix;

/// Number of values written by [`eegcs_fsm_bands`]: delta, theta, alpha,
/// beta, gamma.
pub const EEGCS_NUM_BANDS: usize = 5;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EegcsStatus {
    Ok = 0,
    Validation = 1,
    Degenerate = 2,
    Parse = 3,
    Unsupported = 4,
    Numerical = 5,
    NonConvergence = 6,
    Infeasible = 7,
    UndefinedSpectrum = 8,
    Network = 9,
    Io = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

impl From<&Error> for EegcsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Validation(_) => Self::Validation,
            Error::Degenerate(_) => Self::Degenerate,
            Error::Parse { .. } | Error::Json(_) => Self::Parse,
            Error::Unsupported(_) => Self::Unsupported,
            Error::Numerical(_) => Self::Numerical,
            Error::NonConvergence { .. } => Self::NonConvergence,
            Error::Infeasible(_) => Self::Infeasible,
            Error::UndefinedSpectrum(_) => Self::UndefinedSpectrum,
            Error::Network(_) => Self::Network,
            Error::Io { .. } => Self::Io,
            Error::AtInstant { source, .. } => Self::from(source.as_ref()),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EegcsEpsilonMode {
    /// ε = value · ‖y‖₂ per instant.
    Relative = 0,
    /// ε = value.
    Absolute = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EegcsRecoveryConfig {
    pub epsilon_mode: EegcsEpsilonMode,
    pub epsilon: f64,
    pub solver_tol: f64,
    pub max_iters: usize,
}

impl From<EegcsRecoveryConfig> for RecoveryConfig {
    fn from(c: EegcsRecoveryConfig) -> Self {
        RecoveryConfig {
            epsilon: match c.epsilon_mode {
                EegcsEpsilonMode::Relative => EpsilonPolicy::Relative(c.epsilon),
                EegcsEpsilonMode::Absolute => EpsilonPolicy::Absolute(c.epsilon),
            },
            solver_tol: c.solver_tol,
            max_iters: c.max_iters,
        }
    }
}

/// Opaque learned dictionary.
pub struct EegcsModel {
    inner: KltModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(EegcsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EegcsStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EegcsStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EegcsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EegcsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            EegcsStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(EegcsStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn model_ref<'a>(model: *const EegcsModel) -> Result<&'a KltModel, Failure> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

fn checked_len(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure(EegcsStatus::Validation, format!("{a} × {b} overflows")))
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eegcs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Learns a model from `num_samples × num_channels` training samples.
/// `labels` may be null, giving labels `ch0`, `ch1`, ….
///
/// # Safety
/// `samples` must point to `num_samples * num_channels` doubles; `labels`,
/// if non-null, to `num_channels` NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn eegcs_model_train(
    samples: *const f64,
    num_samples: usize,
    num_channels: usize,
    labels: *const *const c_char,
    sample_rate: f64,
    window_len: usize,
    centered: bool,
    out: *mut *mut EegcsModel,
) -> EegcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = slice(samples, checked_len(num_samples, num_channels)?, "samples")?;
        let names: Vec<String> = if labels.is_null() {
            (0..num_channels).map(|i| format!("ch{i}")).collect()
        } else {
            slice(labels, num_channels, "labels")?
                .iter()
                .map(|&p| c_str(p, "label").map(String::from))
                .collect::<Result<_, _>>()?
        };
        let record = SignalRecord::new(
            DMatrix::from_row_slice(num_samples, num_channels, data),
            sample_rate,
            names,
        )?;
        let inner = build_klt(&record, window_len, centered)?;
        *out = Box::into_raw(Box::new(EegcsModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eegcs_model_from_json(json: *const c_char, out: *mut *mut EegcsModel) -> EegcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = KltModel::from_json(c_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(EegcsModel { inner }));
        Ok(())
    })
}

/// Writes a newly allocated JSON string to `out`; release it with
/// [`eegcs_string_free`].
///
/// # Safety
/// `model` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eegcs_model_to_json(model: *const EegcsModel, out: *mut *mut c_char) -> EegcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = model_ref(model)?.to_json()?;
        let c = CString::new(text).map_err(|e| Failure(EegcsStatus::Validation, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn eegcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of channels, or 0 for a null model.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn eegcs_model_num_channels(model: *const EegcsModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_channels())
}

/// # Safety
/// `model` must be null or come from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn eegcs_model_free(model: *mut EegcsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Default recovery settings: relative ε = 1e-3, tolerance 1e-6, 20000
/// iterations.
#[no_mangle]
pub extern "C" fn eegcs_recovery_config_default() -> EegcsRecoveryConfig {
    let d = RecoveryConfig::default();
    let (epsilon_mode, epsilon) = match d.epsilon {
        EpsilonPolicy::Relative(v) => (EegcsEpsilonMode::Relative, v),
        EpsilonPolicy::Absolute(v) => (EegcsEpsilonMode::Absolute, v),
    };
    EegcsRecoveryConfig {
        epsilon_mode,
        epsilon,
        solver_tol: d.solver_tol,
        max_iters: d.max_iters,
    }
}

/// Reconstructs all model channels from the channels at indices `measured`.
/// `samples` is `num_samples × num_measured`; `out` receives
/// `num_samples × eegcs_model_num_channels(model)` values. A null `config`
/// uses the defaults.
///
/// # Safety
/// Pointers must reference arrays of the stated sizes; `config` may be null.
#[no_mangle]
pub unsafe extern "C" fn eegcs_reconstruct(
    model: *const EegcsModel,
    measured: *const usize,
    num_measured: usize,
    samples: *const f64,
    num_samples: usize,
    config: *const EegcsRecoveryConfig,
    out: *mut f64,
) -> EegcsStatus {
    guard(|| {
        let model = model_ref(model)?;
        let indices = slice(measured, num_measured, "measured")?.to_vec();
        let data = slice(samples, checked_len(num_samples, num_measured)?, "samples")?;
        let n = model.num_channels();
        let out_len = checked_len(num_samples, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config: RecoveryConfig = config.as_ref().map_or_else(RecoveryConfig::default, |c| (*c).into());
        config.validate()?;
        let plan = MeasurementPlan::new(indices, n)?;
        let y = DMatrix::from_row_slice(num_samples, num_measured, data);
        let record = reconstruct_record(model, &plan, &y, 1.0, &config)?;
        let dest = std::slice::from_raw_parts_mut(out, out_len);
        for (i, row) in record.samples().row_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                dest[i * n + j] = *v;
            }
        }
        Ok(())
    })
}

/// Fractional spectral measure of `signal` in each default band, written to
/// `out[0..EEGCS_NUM_BANDS]`.
///
/// # Safety
/// `signal` must hold `len` doubles and `out` room for `EEGCS_NUM_BANDS`.
#[no_mangle]
pub unsafe extern "C" fn eegcs_fsm_bands(
    signal: *const f64,
    len: usize,
    sample_rate: f64,
    out: *mut f64,
) -> EegcsStatus {
    guard(|| {
        let x = slice(signal, len, "signal")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let values = band_fsms(x, sample_rate, &default_bands())?;
        std::slice::from_raw_parts_mut(out, EEGCS_NUM_BANDS).copy_from_slice(&values);
        Ok(())
    })
}
