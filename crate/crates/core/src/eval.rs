//! Evaluation harness: sliding-window estimates against ground-truth
//! instruments, with per-group and overall error/accuracy summaries.
//!
//! Accuracy for one window is (1 - |error| / truth) * 100, clamped to
//! [0, 100]; a report's accuracy is the mean over its windows. Breathing
//! truth is extracted from the accelerometer series with the same spectral
//! estimator used on CSI; pulse truth is the oximeter's bpm readout averaged
//! over the window.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::channel::{ChannelError, CsiTrace, Posture};
use crate::dsp::{estimate_rate_fft, estimate_vitals, AmplitudeSeries, DspError};
use crate::par;
use crate::store::{read_trace, GroundTruth, GroundTruthSeries, StoreError};
use crate::streaming::StreamConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot parse manifest: {0}")]
    ManifestParse(#[from] toml::de::Error),
    #[error("manifest invalid: {0}")]
    InvalidManifest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(
        "{what} ground truth misaligned with trace: need [{needed_start:.3}, {needed_end:.3}] s, \
         have [{got_start:.3}, {got_end:.3}] s"
    )]
    Misaligned {
        what: &'static str,
        needed_start: f64,
        needed_end: f64,
        got_start: f64,
        got_end: f64,
    },
}

/// Accuracy of a single window in percent: (1 - |err|/truth) * 100, clamped.
pub fn accuracy_percent(truth_bpm: f64, estimate_bpm: f64) -> f64 {
    if !(truth_bpm > 0.0) {
        return 0.0;
    }
    ((1.0 - (estimate_bpm - truth_bpm).abs() / truth_bpm) * 100.0).clamp(0.0, 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VitalComparison {
    pub truth_bpm: f64,
    pub estimate_bpm: f64,
    pub abs_error_bpm: f64,
}

impl VitalComparison {
    fn new(truth_bpm: f64, estimate_bpm: f64) -> Self {
        Self {
            truth_bpm,
            estimate_bpm,
            abs_error_bpm: (estimate_bpm - truth_bpm).abs(),
        }
    }
}

/// One evaluation window of one manifest entry.
#[derive(Debug, Clone, Serialize)]
pub struct EvalWindow {
    pub label: String,
    pub posture: Option<Posture>,
    pub window_start_s: f64,
    pub window_end_s: f64,
    pub breath: VitalComparison,
    pub heart: VitalComparison,
}

/// Error/accuracy summary over a set of windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSummary {
    pub n_windows: usize,
    pub mean_abs_error_bpm: f64,
    pub accuracy_percent: f64,
}

impl EvalSummary {
    fn over<'a>(items: impl Iterator<Item = &'a VitalComparison>) -> Self {
        let mut n = 0usize;
        let mut err_sum = 0.0;
        let mut acc_sum = 0.0;
        for c in items {
            n += 1;
            err_sum += c.abs_error_bpm;
            acc_sum += accuracy_percent(c.truth_bpm, c.estimate_bpm);
        }
        if n == 0 {
            Self {
                n_windows: 0,
                mean_abs_error_bpm: f64::NAN,
                accuracy_percent: f64::NAN,
            }
        } else {
            Self {
                n_windows: n,
                mean_abs_error_bpm: err_sum / n as f64,
                accuracy_percent: acc_sum / n as f64,
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub posture: Option<Posture>,
    pub breath: EvalSummary,
    pub heart: EvalSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub windows: Vec<EvalWindow>,
    pub groups: Vec<GroupSummary>,
    pub overall_breath: EvalSummary,
    pub overall_heart: EvalSummary,
}

impl EvalReport {
    pub fn from_windows(windows: Vec<EvalWindow>) -> Self {
        let mut keys: Vec<(String, Option<Posture>)> = Vec::new();
        for w in &windows {
            let key = (w.label.clone(), w.posture);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let groups = keys
            .into_iter()
            .map(|(label, posture)| {
                let members: Vec<&EvalWindow> = windows
                    .iter()
                    .filter(|w| w.label == label && w.posture == posture)
                    .collect();
                GroupSummary {
                    label,
                    posture,
                    breath: EvalSummary::over(members.iter().map(|w| &w.breath)),
                    heart: EvalSummary::over(members.iter().map(|w| &w.heart)),
                }
            })
            .collect();
        let overall_breath = EvalSummary::over(windows.iter().map(|w| &w.breath));
        let overall_heart = EvalSummary::over(windows.iter().map(|w| &w.heart));
        Self {
            windows,
            groups,
            overall_breath,
            overall_heart,
        }
    }

    /// Per-window CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,posture,window_start_s,window_end_s,breath_truth_bpm,breath_estimate_bpm,\
             breath_abs_error_bpm,heart_truth_bpm,heart_estimate_bpm,heart_abs_error_bpm\n",
        );
        for w in &self.windows {
            let posture = w.posture.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                w.label,
                posture,
                w.window_start_s,
                w.window_end_s,
                w.breath.truth_bpm,
                w.breath.estimate_bpm,
                w.breath.abs_error_bpm,
                w.heart.truth_bpm,
                w.heart.estimate_bpm,
                w.heart.abs_error_bpm,
            ));
        }
        out
    }

    /// Human-readable summary table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<20} {:<16} {:>8} {:>12} {:>10} {:>12} {:>10}\n",
            "group", "posture", "windows", "breath err", "breath %", "heart err", "heart %"
        ));
        let line = |label: &str, posture: &str, b: &EvalSummary, h: &EvalSummary| {
            format!(
                "{:<20} {:<16} {:>8} {:>12.3} {:>10.3} {:>12.3} {:>10.3}\n",
                label,
                posture,
                b.n_windows,
                b.mean_abs_error_bpm,
                b.accuracy_percent,
                h.mean_abs_error_bpm,
                h.accuracy_percent
            )
        };
        for g in &self.groups {
            let posture = g.posture.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&line(&g.label, &posture, &g.breath, &g.heart));
        }
        out.push_str(&line(
            "overall",
            "",
            &self.overall_breath,
            &self.overall_heart,
        ));
        out
    }
}

/// One trace plus its reference recordings.
#[derive(Debug, Clone, Deserialize)]
pub struct ManifestEntry {
    pub trace: PathBuf,
    pub breath_truth: PathBuf,
    pub pulse_truth: PathBuf,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default)]
    pub posture: Option<Posture>,
}

fn default_label() -> String {
    "unlabeled".into()
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvalManifest {
    #[serde(rename = "entry")]
    pub entries: Vec<ManifestEntry>,
}

impl EvalManifest {
    /// Loads a manifest, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)?;
        let mut manifest: EvalManifest = toml::from_str(&text)?;
        if manifest.entries.is_empty() {
            return Err(EvalError::InvalidManifest(
                "manifest has no [[entry]] sections".into(),
            ));
        }
        if let Some(dir) = path.parent() {
            for entry in &mut manifest.entries {
                for p in [
                    &mut entry.trace,
                    &mut entry.breath_truth,
                    &mut entry.pulse_truth,
                ] {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(manifest)
    }
}

/// Evaluates one aligned trace/ground-truth pair over the sliding windows
/// defined by `config`.
pub fn evaluate_entry(
    trace: &CsiTrace,
    truth: &GroundTruth,
    label: &str,
    posture: Option<Posture>,
    config: &StreamConfig,
) -> Result<Vec<EvalWindow>, EvalError> {
    config
        .validate()
        .map_err(|e| EvalError::InvalidManifest(e.to_string()))?;
    let fs = trace.sample_rate;
    let threshold = (config.threshold_s * fs).round() as usize;
    let update = ((config.update_interval_s * fs).round() as usize).max(1);
    if trace.n_frames() < threshold {
        return Err(EvalError::Dsp(DspError::InsufficientData {
            needed_s: config.threshold_s,
            got_s: trace.duration_s(),
        }));
    }

    let first_start = trace.timestamp_s(0);
    let last_end = trace.timestamp_s(trace.n_frames() - 1);
    check_alignment("breath", &truth.breath, first_start, last_end)?;
    check_alignment("pulse", &truth.pulse, first_start, last_end)?;

    let mut windows = Vec::new();
    let mut end = threshold;
    while end <= trace.n_frames() {
        let window = trace.slice_frames(end - threshold, end);
        let estimate = estimate_vitals(&window, &config.pipeline)?;
        let start_s = window.timestamp_s(0);
        let end_s = window.timestamp_s(window.n_frames() - 1);

        let breath_truth = breath_truth_bpm(&truth.breath, start_s, end_s, config)?;
        let pulse_truth =
            truth
                .pulse
                .mean_in_window(start_s, end_s)
                .ok_or(EvalError::Misaligned {
                    what: "pulse",
                    needed_start: start_s,
                    needed_end: end_s,
                    got_start: truth.pulse.start_s().unwrap_or(f64::NAN),
                    got_end: truth.pulse.end_s().unwrap_or(f64::NAN),
                })?;

        windows.push(EvalWindow {
            label: label.to_string(),
            posture,
            window_start_s: start_s,
            window_end_s: end_s,
            breath: VitalComparison::new(breath_truth, estimate.breath_bpm),
            heart: VitalComparison::new(pulse_truth, estimate.heart_bpm),
        });
        end += update;
    }
    Ok(windows)
}

fn check_alignment(
    what: &'static str,
    series: &GroundTruthSeries,
    needed_start: f64,
    needed_end: f64,
) -> Result<(), EvalError> {
    let misaligned = || EvalError::Misaligned {
        what,
        needed_start,
        needed_end,
        got_start: series.start_s().unwrap_or(f64::NAN),
        got_end: series.end_s().unwrap_or(f64::NAN),
    };
    let (Some(start), Some(end)) = (series.start_s(), series.end_s()) else {
        return Err(misaligned());
    };
    // Half a second of slack for instrument start/stop skew.
    if start > needed_start + 0.5 || end < needed_end - 0.5 {
        return Err(misaligned());
    }
    Ok(())
}

/// Breathing truth for one window: the spectral peak of the accelerometer
/// series, treated symmetrically with the CSI path.
fn breath_truth_bpm(
    series: &GroundTruthSeries,
    start_s: f64,
    end_s: f64,
    config: &StreamConfig,
) -> Result<f64, EvalError> {
    let (times, values) = series.window(start_s, end_s);
    if times.len() < 2 {
        return Err(EvalError::Misaligned {
            what: "breath",
            needed_start: start_s,
            needed_end: end_s,
            got_start: series.start_s().unwrap_or(f64::NAN),
            got_end: series.end_s().unwrap_or(f64::NAN),
        });
    }
    let rate = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
    let amplitude = AmplitudeSeries::new(rate, values)?;
    let est = estimate_rate_fft(&amplitude, config.pipeline.breath_band)?;
    Ok(est.peak_bpm)
}

/// Runs every manifest entry (in parallel when enabled) and merges the
/// windows into one report.
pub fn run_manifest(
    manifest: &EvalManifest,
    config: &StreamConfig,
) -> Result<EvalReport, EvalError> {
    let results: Vec<Result<Vec<EvalWindow>, EvalError>> =
        par::map_indexed(manifest.entries.len(), |i| {
            let entry = &manifest.entries[i];
            let trace = read_trace(&entry.trace)?;
            let truth = GroundTruth::load(&entry.breath_truth, &entry.pulse_truth)?;
            evaluate_entry(&trace, &truth, &entry.label, entry.posture, config)
        });
    let mut windows = Vec::new();
    for r in results {
        windows.extend(r?);
    }
    Ok(EvalReport::from_windows(windows))
}
