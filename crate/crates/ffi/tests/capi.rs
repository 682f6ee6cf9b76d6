use std::ffi::{CStr, CString};
use std::ptr;

use eegcs_ffi::*;

fn last_error() -> String {
    let p = eegcs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

/// Two perfectly anti-correlated channels, row-major.
fn anti_correlated(n: usize) -> Vec<f64> {
    (0..n)
        .flat_map(|i| {
            let v = (i as f64 * 0.37).sin() + 0.3 * (i as f64 * 1.91).cos();
            [v, -v]
        })
        .collect()
}

fn train(samples: &[f64], rows: usize, cols: usize, window: usize) -> *mut EegcsModel {
    let mut model = ptr::null_mut();
    let status = unsafe {
        eegcs_model_train(
            samples.as_ptr(),
            rows,
            cols,
            ptr::null(),
            160.0,
            window,
            true,
            &mut model,
        )
    };
    assert_eq!(status, EegcsStatus::Ok, "{}", last_error());
    model
}

#[test]
fn train_reconstruct_and_free() {
    let data = anti_correlated(1000);
    let model = train(&data, 1000, 2, 1000);
    assert_eq!(unsafe { eegcs_model_num_channels(model) }, 2);

    let measured = [0usize];
    let y = [0.5, -1.25, 2.0];
    let mut out = [0.0; 6];
    let mut config = eegcs_recovery_config_default();
    config.epsilon_mode = EegcsEpsilonMode::Absolute;
    config.epsilon = 0.0;
    let status = unsafe { eegcs_reconstruct(model, measured.as_ptr(), 1, y.as_ptr(), 3, &config, out.as_mut_ptr()) };
    assert_eq!(status, EegcsStatus::Ok, "{}", last_error());
    for (i, v) in y.iter().enumerate() {
        assert!((out[2 * i] - v).abs() < 1e-6);
        assert!((out[2 * i + 1] + v).abs() < 1e-3);
    }
    unsafe { eegcs_model_free(model) };
}

#[test]
fn json_round_trip_through_c_strings() {
    let data = anti_correlated(600);
    let labels = [CString::new("C3").unwrap(), CString::new("C4").unwrap()];
    let label_ptrs: Vec<_> = labels.iter().map(|l| l.as_ptr()).collect();
    let mut model = ptr::null_mut();
    let status = unsafe {
        eegcs_model_train(
            data.as_ptr(),
            600,
            2,
            label_ptrs.as_ptr(),
            160.0,
            200,
            false,
            &mut model,
        )
    };
    assert_eq!(status, EegcsStatus::Ok, "{}", last_error());

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { eegcs_model_to_json(model, &mut json) }, EegcsStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    assert!(text.contains("\"C3\""));

    let mut copy = ptr::null_mut();
    assert_eq!(unsafe { eegcs_model_from_json(json, &mut copy) }, EegcsStatus::Ok);
    let mut json2 = ptr::null_mut();
    assert_eq!(unsafe { eegcs_model_to_json(copy, &mut json2) }, EegcsStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(json2) }.to_str().unwrap(), text);

    unsafe {
        eegcs_string_free(json);
        eegcs_string_free(json2);
        eegcs_model_free(model);
        eegcs_model_free(copy);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let data = anti_correlated(10);
    let mut model = ptr::null_mut();
    let status = unsafe { eegcs_model_train(data.as_ptr(), 10, 2, ptr::null(), 160.0, 100, true, &mut model) };
    assert_eq!(status, EegcsStatus::Degenerate);
    assert!(model.is_null());
    assert!(last_error().contains("shorter than one window"));

    let status = unsafe { eegcs_model_train(ptr::null(), 10, 2, ptr::null(), 160.0, 5, true, &mut model) };
    assert_eq!(status, EegcsStatus::NullPointer);

    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { eegcs_model_from_json(bad.as_ptr(), &mut model) },
        EegcsStatus::Parse
    );

    let data = anti_correlated(1000);
    let model = train(&data, 1000, 2, 1000);
    let measured = [5usize];
    let y = [1.0];
    let mut out = [0.0; 2];
    let status = unsafe {
        eegcs_reconstruct(
            model,
            measured.as_ptr(),
            1,
            y.as_ptr(),
            1,
            ptr::null(),
            out.as_mut_ptr(),
        )
    };
    assert_eq!(status, EegcsStatus::Validation);
    unsafe { eegcs_model_free(model) };

    assert_eq!(unsafe { eegcs_model_num_channels(ptr::null()) }, 0);
    unsafe {
        eegcs_model_free(ptr::null_mut());
        eegcs_string_free(ptr::null_mut());
    }
}

#[test]
fn tone_fsm_is_alpha() {
    let x: Vec<f64> = (0..2048)
        .map(|n| (2.0 * std::f64::consts::PI * 10.0 * n as f64 / 160.0).sin())
        .collect();
    let mut out = [0.0; EEGCS_NUM_BANDS];
    assert_eq!(
        unsafe { eegcs_fsm_bands(x.as_ptr(), x.len(), 160.0, out.as_mut_ptr()) },
        EegcsStatus::Ok
    );
    assert!(out[2] > 0.95);
    assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let zeros = [0.0; 600];
    let status = unsafe { eegcs_fsm_bands(zeros.as_ptr(), 600, 160.0, out.as_mut_ptr()) };
    assert_eq!(status, EegcsStatus::UndefinedSpectrum);
}
