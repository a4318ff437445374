use mdvs_core::dsp::peaks::{check_period_consistency, detect_pulses};
use mdvs_core::dsp::template::{beat_windows, TEMPLATE_LEN};
use mdvs_core::dsp::{
    average_pulse, bandpass, pearson, run_pipeline, second_derivative, synth_pulse_train, zscore, zscore_trace, Channel,
    PipelineConfig, PulseTrace, SynthConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn clean(hr: f64, duration_s: f64) -> SynthConfig {
    SynthConfig {
        heart_rate_bpm: hr,
        duration_s,
        noise_sd_magnetic: 0.0,
        noise_sd_vibration: 0.0,
        ..SynthConfig::default()
    }
}

fn prepared(trace: &PulseTrace) -> Vec<f64> {
    zscore_trace(&bandpass(trace, &PipelineConfig::default()).unwrap())
        .unwrap()
        .samples
}

fn peaks_of(trace: &PulseTrace) -> Vec<usize> {
    detect_pulses(&prepared(trace), trace.fs, &PipelineConfig::default().peak_params()).unwrap()
}

#[test]
fn peak_count_tracks_heart_rate() {
    for hr in [45.0, 60.0, 72.0, 100.0, 150.0] {
        let (mag, vib) = synth_pulse_train(&clean(hr, 30.0)).unwrap();
        let expected = (30.0 * hr / 60.0_f64).floor() as i64;
        for trace in [&mag, &vib] {
            let n = peaks_of(trace).len() as i64;
            assert!((n - expected).abs() <= 1, "{hr} bpm: {n} peaks, expected {expected} ± 1");
        }
    }
}

#[test]
fn sixty_bpm_peaks_are_one_second_apart() {
    let (mag, _) = synth_pulse_train(&clean(60.0, 30.0)).unwrap();
    let peaks = peaks_of(&mag);
    assert!((29..=31).contains(&peaks.len()), "{} peaks", peaks.len());
    for w in peaks.windows(2) {
        let dt = (w[1] - w[0]) as f64 / mag.fs;
        assert!((dt - 1.0).abs() <= 0.02, "interval {dt} s");
    }
}

#[test]
fn white_noise_is_not_a_pulse_train() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..30 * 240).map(|_| normal.sample(&mut rng)).collect();
    let trace = PulseTrace::new(x, 240.0, Channel::Magnetic).unwrap();
    let z = prepared(&trace);
    let rejected = match detect_pulses(&z, 240.0, &PipelineConfig::default().peak_params()) {
        Err(_) => true,
        Ok(p) => check_period_consistency(&p).is_err(),
    };
    assert!(rejected);
}

#[test]
fn template_beats_every_single_noisy_beat() {
    let base = clean(72.0, 30.0);
    let (ref_mag, _) = synth_pulse_train(&base).unwrap();
    let ref_z = prepared(&ref_mag);
    let ref_peaks = peaks_of(&ref_mag);
    let truth = average_pulse(&ref_z, ref_mag.fs, &ref_peaks).unwrap();

    let noisy_cfg = SynthConfig {
        noise_sd_magnetic: 0.3 * base.displacement_m * base.magnetic_gain,
        seed: 3,
        ..base
    };
    let (mag, _) = synth_pulse_train(&noisy_cfg).unwrap();
    let z = prepared(&mag);
    // Same beat positions as the clean trace, so only noise differs.
    let template = average_pulse(&z, mag.fs, &ref_peaks).unwrap();
    let r_template = pearson(&template.samples, &truth.samples).unwrap();
    let (windows, _, _) = beat_windows(&z, &ref_peaks, TEMPLATE_LEN).unwrap();
    let best_single = windows
        .iter()
        .map(|w| pearson(&zscore(w).unwrap(), &truth.samples).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(r_template > best_single, "template {r_template} vs best beat {best_single}");
}

#[test]
fn acceleration_crosses_zero_around_systolic_peak() {
    let (mag, _) = synth_pulse_train(&clean(72.0, 30.0)).unwrap();
    let z = prepared(&mag);
    let t = average_pulse(&z, mag.fs, &peaks_of(&mag)).unwrap();
    let d2 = second_derivative(&t).unwrap().samples;
    let peak = (0.3 * TEMPLATE_LEN as f64).round() as usize;
    assert!(d2[peak] < 0.0, "acceleration at the peak is {}", d2[peak]);
    let before = (1..peak).rev().find(|&i| d2[i - 1] >= 0.0 && d2[i] < 0.0);
    let after = (peak..TEMPLATE_LEN - 1).find(|&i| d2[i] < 0.0 && d2[i + 1] >= 0.0);
    let (b, a) = (before.expect("rising crossing"), after.expect("falling crossing"));
    assert!(b < peak && peak < a);
    // Both crossings sit within a quarter period of the peak.
    assert!(peak - b < TEMPLATE_LEN / 4 && a - peak < TEMPLATE_LEN / 4, "{b} {peak} {a}");
}

#[test]
fn default_recording_meets_agreement_targets() {
    let (mag, vib) = synth_pulse_train(&SynthConfig::default()).unwrap();
    let out = run_pipeline(&mag, &vib, &PipelineConfig::default()).unwrap();
    let ba = &out.report.bland_altman;
    assert!(ba.bias.abs() <= 0.02, "bias {}", ba.bias);
    let half = 0.5 * (ba.loa_upper - ba.loa_lower);
    assert!(half <= 0.3, "LoA half-width {half}");
    assert!(out.report.r_template > out.report.r_trace);
    assert!((out.report.heart_rate_bpm - 72.0).abs() < 1.0);
    assert_eq!(out.segments.len(), 3);
    for s in &out.segments {
        assert!((35..=37).contains(&s.magnetic.n_pulses), "{} pulses", s.magnetic.n_pulses);
    }
}

#[test]
fn pipeline_is_deterministic_in_seed() {
    let cfg = SynthConfig { duration_s: 30.0, seed: 11, ..SynthConfig::default() };
    let (m1, v1) = synth_pulse_train(&cfg).unwrap();
    let (m2, v2) = synth_pulse_train(&cfg).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(v1, v2);
    let a = run_pipeline(&m1, &v1, &PipelineConfig::default()).unwrap();
    let b = run_pipeline(&m2, &v2, &PipelineConfig::default()).unwrap();
    assert_eq!(a, b);
    let (m3, _) = synth_pulse_train(&SynthConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(m1, m3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn peaks_are_scale_invariant(scale in 1e-3f64..1e3, seed in 0u64..100) {
        let cfg = SynthConfig { duration_s: 30.0, seed, ..SynthConfig::default() };
        let (mag, _) = synth_pulse_train(&cfg).unwrap();
        let scaled = PulseTrace::new(mag.samples.iter().map(|v| v * scale).collect(), mag.fs, mag.channel).unwrap();
        prop_assert_eq!(peaks_of(&mag), peaks_of(&scaled));
    }
}
