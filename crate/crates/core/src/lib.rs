//! WiFi-CSI vital-sign sensing toolkit.
//!
//! Synthesizes channel state information traces from a Fresnel-zone
//! propagation model driven by breathing and heartbeat motion, and recovers
//! both rates through a subcarrier-selection / Hampel / Butterworth / FFT
//! pipeline, in batch or streaming form. Includes an antenna placement
//! planner, a bit-exact trace file format, a session store and an evaluation
//! harness.
//!
//! Data-parallel inner loops (trace synthesis, per-subcarrier scans, manifest
//! evaluation) run on rayon under the default `parallel` feature and fall
//! back to sequential loops without it; outputs are identical either way.

// Negated comparisons are deliberate where they appear: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dsp;
pub mod eval;
pub mod geometry;
mod par;
pub mod scenario;
pub mod store;
pub mod streaming;

#[doc(hidden)]
pub mod testutil;

pub use channel::{
    synth_displacement, synthesize_trace, synthesize_trace_detailed, CsiTrace, NoiseSpec, Posture,
    PulseShape, Scene, TraceMeta, VitalProfile,
};
pub use dsp::{
    analyze_vitals, bandpass, estimate_rate_fft, estimate_vitals, hampel_filter, select_subcarrier,
    AmplitudeSeries, BandSpec, PipelineConfig, SpectrumEstimate, VitalAnalysis, VitalEstimate,
};
pub use eval::{accuracy_percent, run_manifest, EvalManifest, EvalReport};
pub use geometry::{
    effective_displacement, first_zone_radius_at, path_delta, placement_score, zone_index,
    AntennaPair, MotionVector, Point3,
};
pub use scenario::ScenarioFile;
pub use streaming::{StreamConfig, StreamingEstimator};
