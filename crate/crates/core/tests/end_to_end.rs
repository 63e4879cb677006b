//! End-to-end behavior of the full pipeline on synthesized channels, beyond
//! the acceptance gates: confidence flagging and noise robustness.

use rayon::prelude::*;

use csi_vitals::channel::{synthesize_trace, NoiseSpec, Scene, VitalProfile};
use csi_vitals::dsp::{estimate_vitals, PipelineConfig};

#[test]
fn default_profile_estimates_within_tolerances() {
    let scene = Scene::default_lab();
    let profile = VitalProfile {
        breath_rate_bpm: 18.0,
        heart_rate_bpm: 72.0,
        ..VitalProfile::default()
    };
    let noise = NoiseSpec {
        snr_db: 20.0,
        outlier_rate: 0.0,
        outlier_magnitude: 0.0,
    };
    let trace = synthesize_trace(&scene, &profile, 60.0, &noise, 77).unwrap();
    let est = estimate_vitals(&trace, &PipelineConfig::default()).unwrap();
    assert!(
        (est.breath_bpm - 18.0).abs() <= 0.75,
        "breath {}",
        est.breath_bpm
    );
    assert!(
        (est.heart_bpm - 72.0).abs() <= 1.5,
        "heart {}",
        est.heart_bpm
    );
    assert!(est.breath_confident);
    assert!(est.heart_confident);
}

#[test]
fn breath_only_profile_flags_heart_low_confidence() {
    let scene = Scene::default_lab();
    let profile = VitalProfile {
        breath_rate_bpm: 18.0,
        heart_amplitude_m: 0.0,
        ..VitalProfile::default()
    };
    let noise = NoiseSpec {
        snr_db: 20.0,
        outlier_rate: 0.0,
        outlier_magnitude: 0.0,
    };
    let trace = synthesize_trace(&scene, &profile, 50.0, &noise, 78).unwrap();
    let est = estimate_vitals(&trace, &PipelineConfig::default()).unwrap();
    assert!(est.breath_confident, "breathing should stay detectable");
    assert!(
        !est.heart_confident,
        "no heartbeat motion, but heart confidence {} >= threshold",
        est.heart_confidence
    );
}

#[test]
fn static_trace_flags_both_low_confidence() {
    let scene = Scene::default_lab();
    let profile = VitalProfile {
        breath_depth_m: 0.0,
        heart_amplitude_m: 0.0,
        ..VitalProfile::default()
    };
    let trace = synthesize_trace(&scene, &profile, 50.0, &NoiseSpec::default(), 79).unwrap();
    let est = estimate_vitals(&trace, &PipelineConfig::default()).unwrap();
    assert!(!est.breath_confident);
    assert!(!est.heart_confident);
}

/// Mean absolute error over 5 seeds must not grow as the SNR improves.
#[test]
fn error_non_increasing_in_snr() {
    let scene = Scene::default_lab();
    let config = PipelineConfig::default();
    let snrs = [0.0, 10.0, 20.0, 30.0];
    let runs: Vec<(usize, u64)> = (0..snrs.len())
        .flat_map(|i| (0..5u64).map(move |s| (i, s)))
        .collect();
    let errors: Vec<(usize, f64)> = runs
        .par_iter()
        .map(|&(i, seed)| {
            let profile = VitalProfile {
                breath_rate_bpm: 16.9,
                heart_rate_bpm: 100.3,
                ..VitalProfile::default()
            };
            let noise = NoiseSpec {
                snr_db: snrs[i],
                outlier_rate: 0.0,
                outlier_magnitude: 0.0,
            };
            let trace = synthesize_trace(&scene, &profile, 60.0, &noise, 500 + seed).unwrap();
            let est = estimate_vitals(&trace, &config).unwrap();
            let err = (est.breath_bpm - 16.9).abs() + (est.heart_bpm - 100.3).abs();
            (i, err)
        })
        .collect();
    let mean_at = |i: usize| {
        let errs: Vec<f64> = errors
            .iter()
            .filter(|(j, _)| *j == i)
            .map(|(_, e)| *e)
            .collect();
        errs.iter().sum::<f64>() / errs.len() as f64
    };
    let means: Vec<f64> = (0..snrs.len()).map(mean_at).collect();
    for pair in means.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-9,
            "error must not grow with SNR: {means:?}"
        );
    }
}
