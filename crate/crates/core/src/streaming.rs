//! Frame-by-frame estimation with an accumulation threshold.
//!
//! Frames land in a ring buffer sized to the threshold window. Once the
//! buffer is full an estimate is emitted, then again every update interval,
//! each time by running the batch pipeline over the buffered window, so a
//! streamed estimate is bit-identical to the batch estimate on the same
//! frames.

use num_complex::Complex32;
use std::collections::VecDeque;
use thiserror::Error;

use crate::channel::{ChannelError, CsiTrace, TraceMeta};
use crate::dsp::{estimate_vitals, DspError, PipelineConfig, VitalEstimate};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("frame timestamp {timestamp_us} us not after last buffered {last_us} us")]
    NonMonotonicTimestamp { timestamp_us: u64, last_us: u64 },
    #[error("malformed frame: expected {expected} complex values, got {got}")]
    MalformedFrame { expected: usize, got: usize },
    #[error("invalid stream config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Trace(#[from] ChannelError),
    #[error(transparent)]
    Pipeline(#[from] DspError),
}

/// Accumulation threshold and update cadence for the streaming estimator.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    /// Seconds of data required before the first estimate.
    pub threshold_s: f64,
    /// Seconds between successive estimates.
    pub update_interval_s: f64,
    pub pipeline: PipelineConfig,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            threshold_s: 40.0,
            update_interval_s: 1.0,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<(), StreamError> {
        if !(self.update_interval_s > 0.0) || self.threshold_s < self.update_interval_s {
            return Err(StreamError::InvalidConfig(format!(
                "need threshold >= update interval > 0, got {} and {}",
                self.threshold_s, self.update_interval_s
            )));
        }
        if self.threshold_s < self.pipeline.fft_window_s {
            return Err(StreamError::InvalidConfig(format!(
                "threshold {} s shorter than the pipeline fft window {} s",
                self.threshold_s, self.pipeline.fft_window_s
            )));
        }
        Ok(())
    }
}

/// Single-writer streaming state: bounded ring buffer plus the emission
/// schedule. Memory use is fixed by the threshold, not the stream length.
#[derive(Debug)]
pub struct StreamingEstimator {
    meta: TraceMeta,
    config: StreamConfig,
    capacity: usize,
    update_samples: u64,
    timestamps_us: VecDeque<u64>,
    values: VecDeque<Complex32>,
    samples_seen: u64,
    last_emit_seen: Option<u64>,
    last_estimate: Option<VitalEstimate>,
}

impl StreamingEstimator {
    pub fn new(meta: TraceMeta, config: StreamConfig) -> Result<Self, StreamError> {
        config.validate()?;
        config.pipeline.validate_for(meta.sample_rate)?;
        let capacity = (config.threshold_s * meta.sample_rate).round() as usize;
        let update_samples = ((config.update_interval_s * meta.sample_rate).round() as u64).max(1);
        if capacity == 0 {
            return Err(StreamError::InvalidConfig(
                "threshold shorter than one frame".into(),
            ));
        }
        Ok(Self {
            meta,
            config,
            capacity,
            update_samples,
            timestamps_us: VecDeque::with_capacity(capacity),
            values: VecDeque::new(),
            samples_seen: 0,
            last_emit_seen: None,
            last_estimate: None,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    /// Most recent emission, readable between pushes.
    pub fn last_estimate(&self) -> Option<&VitalEstimate> {
        self.last_estimate.as_ref()
    }

    pub fn buffered_frames(&self) -> usize {
        self.timestamps_us.len()
    }

    /// Accepts one frame (antenna-major complex values). Returns an estimate
    /// when the buffer spans the threshold and the update interval has
    /// elapsed since the previous emission. Frames whose timestamp does not
    /// advance are rejected without disturbing the buffer.
    pub fn push_frame(
        &mut self,
        timestamp_us: u64,
        frame: &[Complex32],
    ) -> Result<Option<VitalEstimate>, StreamError> {
        let stride = self.meta.n_antennas * self.meta.n_subcarriers;
        if frame.len() != stride {
            return Err(StreamError::MalformedFrame {
                expected: stride,
                got: frame.len(),
            });
        }
        if let Some(&last) = self.timestamps_us.back() {
            if timestamp_us <= last {
                return Err(StreamError::NonMonotonicTimestamp {
                    timestamp_us,
                    last_us: last,
                });
            }
        }

        self.timestamps_us.push_back(timestamp_us);
        self.values.extend(frame.iter().copied());
        if self.timestamps_us.len() > self.capacity {
            self.timestamps_us.pop_front();
            self.values.drain(..stride);
        }
        self.samples_seen += 1;

        if self.timestamps_us.len() < self.capacity {
            return Ok(None);
        }
        let due = match self.last_emit_seen {
            None => true,
            Some(at) => self.samples_seen - at >= self.update_samples,
        };
        if !due {
            return Ok(None);
        }
        // Schedule advances even if the window turns out unusable, so a bad
        // stretch of input costs one failed attempt per interval, not per frame.
        self.last_emit_seen = Some(self.samples_seen);

        let window = self.window_trace()?;
        let mut estimate = estimate_vitals(&window, &self.config.pipeline)?;
        estimate.window_start_s = window.timestamp_s(0);
        estimate.window_end_s = window.timestamp_s(window.n_frames() - 1);
        self.last_estimate = Some(estimate.clone());
        Ok(Some(estimate))
    }

    /// Buffered window as a trace, exactly what the batch pipeline would see.
    fn window_trace(&self) -> Result<CsiTrace, ChannelError> {
        CsiTrace::new(
            self.meta.sample_rate,
            self.meta.n_antennas,
            self.meta.n_subcarriers,
            self.meta.carrier_freq_hz,
            self.meta.subcarrier_spacing_hz,
            self.timestamps_us.iter().copied().collect(),
            self.values.iter().copied().collect(),
        )
    }

    /// Empties the buffer and restarts the accumulation schedule.
    pub fn reset(&mut self) {
        self.timestamps_us.clear();
        self.values.clear();
        self.samples_seen = 0;
        self.last_emit_seen = None;
        self.last_estimate = None;
    }
}
