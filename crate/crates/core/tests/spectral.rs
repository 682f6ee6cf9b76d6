use std::f64::consts::PI;

use eegcs::spectral::{averaged_spectrum, band_fsms, default_bands, dft_512, fsm, DFT_LEN};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

fn naive_dft(frame: &[f64]) -> Vec<Complex64> {
    let n = frame.len();
    (0..n)
        .map(|k| {
            frame
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    let phase = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    Complex64::new(x * phase.cos(), x * phase.sin())
                })
                .sum()
        })
        .collect()
}

fn random_frame(seed: u64) -> [f64; DFT_LEN] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

#[test]
fn fft_matches_naive_dft() {
    for seed in 0..20 {
        let frame = random_frame(seed);
        let fast = dft_512(&frame);
        let slow = naive_dft(&frame);
        let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-9 * scale);
        }
    }
}

#[test]
fn parseval() {
    for seed in 100..120 {
        let frame = random_frame(seed);
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        let spectral: f64 = dft_512(&frame).iter().map(|c| c.norm_sqr()).sum();
        assert!((spectral - DFT_LEN as f64 * energy).abs() <= 1e-6 * spectral);
    }
}

#[test]
fn tones_stay_within_two_bins() {
    for bin in 1..256 {
        let signal: Vec<f64> = (0..DFT_LEN)
            .map(|n| (2.0 * PI * (bin * n) as f64 / DFT_LEN as f64).cos())
            .collect();
        let spec = averaged_spectrum(&signal, 160.0).unwrap();
        let total: f64 = spec.magnitudes.iter().sum();
        let near: f64 = spec.magnitudes[bin.saturating_sub(2)..=(bin + 2).min(256)].iter().sum();
        assert!(near >= 0.9 * total, "bin {bin}: {:.4}", near / total);
    }
}

#[test]
fn ten_hertz_tone_peaks_at_bin_32() {
    let signal: Vec<f64> = (0..1600).map(|n| (2.0 * PI * 10.0 * n as f64 / 160.0).sin()).collect();
    let spec = averaged_spectrum(&signal, 160.0).unwrap();
    let argmax = spec
        .magnitudes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(argmax, 32);
}

#[test]
fn ten_hertz_tone_is_alpha_dominated() {
    // lengths that tile into whole 512-sample segments
    for len in [512, 1024, 1536, 2048, 4096] {
        let signal: Vec<f64> = (0..len).map(|n| (2.0 * PI * 10.0 * n as f64 / 160.0).sin()).collect();
        let spec = averaged_spectrum(&signal, 160.0).unwrap();
        let alpha = fsm(&spec, &default_bands()[2]).unwrap();
        assert!(alpha >= 0.95, "len {len}: alpha {alpha}");
    }
}

#[test]
fn delta_cell_relative_error() {
    // C5 delta cell of the 10-20 → 10-10 comparison: 0.441 vs 0.444
    let error = 100.0 * (0.441f64 - 0.444).abs() / 0.441;
    assert!((error - 0.68).abs() < 0.005);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn band_fsms_partition_unity(seed in any::<u64>(), len in 64usize..3000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let total: f64 = band_fsms(&signal, 160.0, &default_bands()).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fsm_is_scale_invariant(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal: Vec<f64> = (0..1000).map(|_| rng.sample(StandardNormal)).collect();
        let scaled: Vec<f64> = signal.iter().map(|x| c * x).collect();
        let a = averaged_spectrum(&signal, 160.0).unwrap();
        let b = averaged_spectrum(&scaled, 160.0).unwrap();
        for (x, y) in a.magnitudes.iter().zip(&b.magnitudes) {
            prop_assert!((c * x - y).abs() <= 1e-12 * c * x.abs().max(1.0) * 1e3);
        }
        let fa = band_fsms(&signal, 160.0, &default_bands()).unwrap();
        let fb = band_fsms(&scaled, 160.0, &default_bands()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
