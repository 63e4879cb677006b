//! The estimation pipeline: pick the liveliest subcarrier, scrub outliers,
//! split the amplitude series into breathing and heartbeat bands, and read
//! the rates off FFT peaks.

pub mod fft;
pub mod filter;
pub mod hampel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::CsiTrace;
use crate::par;
pub use filter::ButterworthBandpass;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("band [{low_hz}, {high_hz}] Hz invalid for sample rate {sample_rate} Hz")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate: f64,
    },
    #[error("filter order must be at least 1, got {0}")]
    InvalidFilterOrder(usize),
    #[error("hampel window must be odd and at least 3, got {0}")]
    InvalidHampelWindow(usize),
    #[error("insufficient data: need {needed_s:.3} s, got {got_s:.3} s")]
    InsufficientData { needed_s: f64, got_s: f64 },
    #[error("trace has no frames")]
    EmptyTrace,
    #[error("antenna index {antenna} out of range, trace has {available}")]
    AntennaOutOfRange { antenna: usize, available: usize },
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

/// A real amplitude time series at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl AmplitudeSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self, DspError> {
        if !(sample_rate > 0.0) {
            return Err(DspError::InvalidSeries(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(DspError::InvalidSeries("non-finite sample".into()));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn from_trace(trace: &CsiTrace, antenna: usize, subcarrier: usize) -> Self {
        Self {
            sample_rate: trace.sample_rate,
            samples: trace.amplitude_series(antenna, subcarrier),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// A frequency band in Hz; 1 Hz corresponds to 60 bpm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandSpec {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self, DspError> {
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz.is_finite()) {
            return Err(DspError::InvalidBand {
                low_hz,
                high_hz,
                sample_rate: f64::NAN,
            });
        }
        Ok(Self { low_hz, high_hz })
    }

    /// Normal resting breathing: 15-30 bpm.
    pub fn breath() -> Self {
        Self {
            low_hz: 0.25,
            high_hz: 0.5,
        }
    }

    /// Normal resting heart rate: 60-120 bpm.
    pub fn heart() -> Self {
        Self {
            low_hz: 1.0,
            high_hz: 2.0,
        }
    }

    pub fn validate_for(&self, sample_rate: f64) -> Result<(), DspError> {
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < sample_rate / 2.0) {
            return Err(DspError::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
                sample_rate,
            });
        }
        Ok(())
    }

    pub fn low_bpm(&self) -> f64 {
        self.low_hz * 60.0
    }

    pub fn high_bpm(&self) -> f64 {
        self.high_hz * 60.0
    }

    pub fn contains(&self, f_hz: f64) -> bool {
        f_hz >= self.low_hz && f_hz <= self.high_hz
    }
}

/// FFT zero-padding factor: refines the peak-readout grid 4x beyond the
/// native 1/window resolution.
pub const FFT_PAD_FACTOR: usize = 4;

/// Magnitude spectrum restricted to a band, with the located peak.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    /// Bin frequencies within the queried band, Hz.
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub peak_freq_hz: f64,
    pub peak_bpm: f64,
    /// Peak magnitude over the band median magnitude; >= 1 for any real peak,
    /// 0 for an empty (all-zero) band.
    pub confidence: f64,
}

/// Knobs for the full estimation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Hampel window width in samples, odd.
    pub hampel_window: usize,
    pub hampel_nsigma: f64,
    pub butterworth_order: usize,
    pub breath_band: BandSpec,
    pub heart_band: BandSpec,
    /// Analysis window in seconds; estimation uses the trailing window.
    pub fft_window_s: f64,
    /// Receive antenna to analyze; `None` picks the one whose best subcarrier
    /// has the largest variance.
    pub antenna: Option<usize>,
    /// Peak-to-band-median ratio above which an estimate counts as confident.
    pub confidence_threshold: f64,
}

impl PipelineConfig {
    /// Defaults scaled to a sample rate: a one-second Hampel window
    /// (odd-adjusted), 3-sigma outlier rejection, order-4 Butterworth bands
    /// at 15-30 and 60-120 bpm, 40 s analysis window.
    pub fn for_sample_rate(sample_rate: f64) -> Self {
        let mut window = sample_rate.round() as usize;
        if window.is_multiple_of(2) {
            window += 1;
        }
        Self {
            hampel_window: window.max(3),
            hampel_nsigma: 3.0,
            butterworth_order: 4,
            breath_band: BandSpec::breath(),
            heart_band: BandSpec::heart(),
            fft_window_s: 40.0,
            antenna: None,
            confidence_threshold: 5.0,
        }
    }

    pub fn validate_for(&self, sample_rate: f64) -> Result<(), DspError> {
        if self.hampel_window < 3 || self.hampel_window.is_multiple_of(2) {
            return Err(DspError::InvalidHampelWindow(self.hampel_window));
        }
        if !(self.hampel_nsigma > 0.0) {
            return Err(DspError::InvalidConfig(format!(
                "hampel nsigma must be positive, got {}",
                self.hampel_nsigma
            )));
        }
        if self.butterworth_order == 0 {
            return Err(DspError::InvalidFilterOrder(self.butterworth_order));
        }
        self.breath_band.validate_for(sample_rate)?;
        self.heart_band.validate_for(sample_rate)?;
        for band in [&self.breath_band, &self.heart_band] {
            if self.fft_window_s < 2.0 / band.low_hz {
                return Err(DspError::InvalidConfig(format!(
                    "fft window {} s shorter than two periods of {} Hz",
                    self.fft_window_s, band.low_hz
                )));
            }
        }
        if !(self.confidence_threshold >= 1.0) {
            return Err(DspError::InvalidConfig(format!(
                "confidence threshold must be at least 1, got {}",
                self.confidence_threshold
            )));
        }
        Ok(())
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::for_sample_rate(500.0)
    }
}

/// Pipeline output: both rates with their confidence flags and the window
/// that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalEstimate {
    pub breath_bpm: f64,
    pub heart_bpm: f64,
    pub breath_confidence: f64,
    pub heart_confidence: f64,
    pub breath_confident: bool,
    pub heart_confident: bool,
    pub window_start_s: f64,
    pub window_end_s: f64,
    /// Antenna and subcarrier the estimate was read from.
    pub antenna: usize,
    pub subcarrier: usize,
}

/// Index of the subcarrier whose amplitude series has the largest variance
/// on the given antenna. Ties break to the lowest index.
pub fn select_subcarrier(trace: &CsiTrace, antenna: usize) -> Result<usize, DspError> {
    if trace.n_frames() == 0 {
        return Err(DspError::EmptyTrace);
    }
    if antenna >= trace.n_antennas {
        return Err(DspError::AntennaOutOfRange {
            antenna,
            available: trace.n_antennas,
        });
    }
    let variances = subcarrier_variances(trace, antenna);
    Ok(argmax_first(&variances))
}

fn subcarrier_variances(trace: &CsiTrace, antenna: usize) -> Vec<f64> {
    par::map_indexed(trace.n_subcarriers, |sub| {
        let series = trace.amplitude_series(antenna, sub);
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    })
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Hampel outlier rejection over a series; see [`hampel::hampel_filter`].
pub fn hampel_filter(
    series: &AmplitudeSeries,
    window: usize,
    nsigma: f64,
) -> Result<AmplitudeSeries, DspError> {
    let samples = hampel::hampel_filter(&series.samples, window, nsigma)?;
    Ok(AmplitudeSeries {
        sample_rate: series.sample_rate,
        samples,
    })
}

/// Zero-phase Butterworth bandpass of the given prototype order.
pub fn bandpass(
    series: &AmplitudeSeries,
    band: BandSpec,
    order: usize,
) -> Result<AmplitudeSeries, DspError> {
    band.validate_for(series.sample_rate)?;
    let filt = ButterworthBandpass::design(order, band.low_hz, band.high_hz, series.sample_rate)?;
    Ok(AmplitudeSeries {
        sample_rate: series.sample_rate,
        samples: filt.filtfilt(&series.samples),
    })
}

/// Dominant in-band frequency via a Hann-windowed, 4x zero-padded FFT.
/// Requires at least two periods of the band's low edge.
pub fn estimate_rate_fft(
    series: &AmplitudeSeries,
    band: BandSpec,
) -> Result<SpectrumEstimate, DspError> {
    estimate_rate_fft_guarded(series, band, &[])
}

/// Same as [`estimate_rate_fft`] but skipping peaks inside the excluded
/// frequency intervals (used to dodge breathing harmonics in the heart band).
pub fn estimate_rate_fft_guarded(
    series: &AmplitudeSeries,
    band: BandSpec,
    excluded_hz: &[(f64, f64)],
) -> Result<SpectrumEstimate, DspError> {
    band.validate_for(series.sample_rate)?;
    let needed_s = 2.0 / band.low_hz;
    if series.duration_s() < needed_s {
        return Err(DspError::InsufficientData {
            needed_s,
            got_s: series.duration_s(),
        });
    }

    let n = series.samples.len();
    let mean = series.samples.iter().sum::<f64>() / n as f64;
    let mut windowed: Vec<f64> = series.samples.iter().map(|x| x - mean).collect();
    fft::hann_window(&mut windowed);
    let (mags, bin_hz) =
        fft::real_magnitude_spectrum(&windowed, series.sample_rate, FFT_PAD_FACTOR);

    let first_bin = (band.low_hz / bin_hz).ceil() as usize;
    let last_bin = ((band.high_hz / bin_hz).floor() as usize).min(mags.len() - 1);
    if first_bin > last_bin {
        return Err(DspError::InvalidBand {
            low_hz: band.low_hz,
            high_hz: band.high_hz,
            sample_rate: series.sample_rate,
        });
    }

    let band_mags = &mags[first_bin..=last_bin];
    let mut peak_bin = None;
    for (offset, mag) in band_mags.iter().enumerate() {
        let f = (first_bin + offset) as f64 * bin_hz;
        if excluded_hz.iter().any(|&(lo, hi)| f >= lo && f <= hi) {
            continue;
        }
        match peak_bin {
            None => peak_bin = Some((offset, *mag)),
            Some((_, best)) if *mag > best => peak_bin = Some((offset, *mag)),
            _ => {}
        }
    }
    // Exclusions covering the whole band fall back to the unguarded peak.
    let (peak_offset, peak_mag) =
        peak_bin.unwrap_or_else(|| (argmax_first(band_mags), band_mags[argmax_first(band_mags)]));

    let mut sorted = band_mags.to_vec();
    let median = hampel_median(&mut sorted);
    let confidence = if peak_mag > 0.0 && median > 0.0 {
        peak_mag / median
    } else if peak_mag > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    let peak_freq_hz = (first_bin + peak_offset) as f64 * bin_hz;
    Ok(SpectrumEstimate {
        frequencies: (first_bin..=last_bin).map(|k| k as f64 * bin_hz).collect(),
        magnitudes: band_mags.to_vec(),
        peak_freq_hz,
        peak_bpm: 60.0 * peak_freq_hz,
        confidence,
    })
}

fn hampel_median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Exclusion intervals around the 2nd and 3rd breathing harmonics. The
/// half-width is two native FFT bins: the Hann mainlobe of a harmonic line
/// spans that far, and a narrower guard still captures its shoulder.
fn harmonic_guard_intervals(breath_hz: f64, native_bin_hz: f64) -> [(f64, f64); 2] {
    let half_width = 2.0 * native_bin_hz;
    [
        (2.0 * breath_hz - half_width, 2.0 * breath_hz + half_width),
        (3.0 * breath_hz - half_width, 3.0 * breath_hz + half_width),
    ]
}

/// A [`VitalEstimate`] along with the band spectra it was read from.
#[derive(Debug, Clone)]
pub struct VitalAnalysis {
    pub estimate: VitalEstimate,
    pub breath_spectrum: SpectrumEstimate,
    pub heart_spectrum: SpectrumEstimate,
}

/// Runs the full pipeline on the trailing `fft_window_s` of the trace:
/// subcarrier selection, Hampel denoising, band splitting and FFT peaks,
/// with breathing harmonics masked out of the heart-band search.
pub fn estimate_vitals(
    trace: &CsiTrace,
    config: &PipelineConfig,
) -> Result<VitalEstimate, DspError> {
    analyze_vitals(trace, config).map(|a| a.estimate)
}

/// [`estimate_vitals`], keeping the spectra for inspection or export.
pub fn analyze_vitals(
    trace: &CsiTrace,
    config: &PipelineConfig,
) -> Result<VitalAnalysis, DspError> {
    if trace.n_frames() == 0 {
        return Err(DspError::EmptyTrace);
    }
    let fs = trace.sample_rate;
    config.validate_for(fs)?;

    let window_frames = (config.fft_window_s * fs).round() as usize;
    if trace.n_frames() < window_frames {
        return Err(DspError::InsufficientData {
            needed_s: config.fft_window_s,
            got_s: trace.duration_s(),
        });
    }
    let start = trace.n_frames() - window_frames;
    let window = trace.slice_frames(start, trace.n_frames());

    let antenna = match config.antenna {
        Some(a) if a >= window.n_antennas => {
            return Err(DspError::AntennaOutOfRange {
                antenna: a,
                available: window.n_antennas,
            })
        }
        Some(a) => a,
        None => {
            let best_per_antenna: Vec<f64> = (0..window.n_antennas)
                .map(|a| {
                    subcarrier_variances(&window, a)
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            argmax_first(&best_per_antenna)
        }
    };
    let subcarrier = select_subcarrier(&window, antenna)?;

    let raw = AmplitudeSeries::from_trace(&window, antenna, subcarrier);
    let denoised = hampel_filter(&raw, config.hampel_window, config.hampel_nsigma)?;

    let run_band = |band: BandSpec, guard: &[(f64, f64)]| -> Result<SpectrumEstimate, DspError> {
        let filtered = bandpass(&denoised, band, config.butterworth_order)?;
        estimate_rate_fft_guarded(&filtered, band, guard)
    };

    #[cfg(feature = "parallel")]
    let (breath, heart_filtered) = rayon::join(
        || run_band(config.breath_band, &[]),
        || bandpass(&denoised, config.heart_band, config.butterworth_order),
    );
    #[cfg(not(feature = "parallel"))]
    let (breath, heart_filtered) = (
        run_band(config.breath_band, &[]),
        bandpass(&denoised, config.heart_band, config.butterworth_order),
    );
    let breath = breath?;
    let heart_filtered = heart_filtered?;

    let native_bin_hz = fs / window_frames as f64;
    let guard = harmonic_guard_intervals(breath.peak_freq_hz, native_bin_hz);
    let heart = estimate_rate_fft_guarded(&heart_filtered, config.heart_band, &guard)?;

    let estimate = VitalEstimate {
        breath_bpm: breath.peak_bpm,
        heart_bpm: heart.peak_bpm,
        breath_confidence: breath.confidence,
        heart_confidence: heart.confidence,
        breath_confident: breath.confidence >= config.confidence_threshold,
        heart_confident: heart.confidence >= config.confidence_threshold,
        window_start_s: window.timestamp_s(0),
        window_end_s: window.timestamp_s(window.n_frames() - 1),
        antenna,
        subcarrier,
    };
    Ok(VitalAnalysis {
        estimate,
        breath_spectrum: breath,
        heart_spectrum: heart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex32;
    use std::f64::consts::TAU;

    /// Trace whose listed subcarriers carry sinusoids of given amplitude on
    /// antenna 0, everything else constant.
    fn trace_with_tones(n_sub: usize, tones: &[(usize, f64)], n_frames: usize) -> CsiTrace {
        let fs = 100.0;
        let mut values = Vec::with_capacity(n_frames * n_sub);
        for frame in 0..n_frames {
            let t = frame as f64 / fs;
            for sub in 0..n_sub {
                let amp = match tones.iter().find(|(s, _)| *s == sub) {
                    Some((_, a)) => 1.0 + a * (TAU * 0.3 * t).sin(),
                    None => 1.0,
                };
                values.push(Complex32::new(amp as f32, 0.0));
            }
        }
        let timestamps = (0..n_frames).map(|i| i as u64 * 10_000).collect();
        CsiTrace::new(fs, 1, n_sub, 5.32e9, 1e6, timestamps, values).unwrap()
    }

    #[test]
    fn select_picks_only_varying_subcarrier() {
        let trace = trace_with_tones(16, &[(7, 0.2)], 400);
        assert_eq!(select_subcarrier(&trace, 0).unwrap(), 7);
    }

    #[test]
    fn select_tie_breaks_to_lowest_index() {
        let trace = trace_with_tones(8, &[], 100);
        assert_eq!(select_subcarrier(&trace, 0).unwrap(), 0);
    }

    #[test]
    fn select_matches_brute_force_on_mixed_gains() {
        let trace = trace_with_tones(30, &[(3, 0.1), (12, 0.5), (20, 0.2)], 1000);
        // Brute-force oracle: compute variances directly.
        let mut best = (0usize, f64::NEG_INFINITY);
        for sub in 0..30 {
            let series = trace.amplitude_series(0, sub);
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            let var =
                series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / series.len() as f64;
            if var > best.1 {
                best = (sub, var);
            }
        }
        assert_eq!(best.0, 12);
        assert_eq!(select_subcarrier(&trace, 0).unwrap(), 12);
    }

    #[test]
    fn select_invariant_to_per_subcarrier_offsets() {
        let base = trace_with_tones(12, &[(5, 0.3), (9, 0.1)], 600);
        let offset_values: Vec<Complex32> = base
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let sub = i % 12;
                Complex32::new(v.re + 3.0 * sub as f32, v.im)
            })
            .collect();
        let shifted = CsiTrace::new(
            base.sample_rate,
            1,
            12,
            base.carrier_freq_hz,
            base.subcarrier_spacing_hz,
            base.timestamps_us().to_vec(),
            offset_values,
        )
        .unwrap();
        assert_eq!(
            select_subcarrier(&base, 0).unwrap(),
            select_subcarrier(&shifted, 0).unwrap()
        );
    }

    #[test]
    fn select_rejects_empty_and_bad_antenna() {
        let trace = trace_with_tones(4, &[], 10);
        assert!(matches!(
            select_subcarrier(&trace, 5),
            Err(DspError::AntennaOutOfRange { .. })
        ));
    }

    fn tone_series(freq: f64, fs: f64, secs: f64) -> AmplitudeSeries {
        let n = (fs * secs) as usize;
        AmplitudeSeries::new(
            fs,
            (0..n).map(|i| (TAU * freq * i as f64 / fs).sin()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rate_fft_exact_on_bin() {
        let est = estimate_rate_fft(&tone_series(0.3, 500.0, 40.0), BandSpec::breath()).unwrap();
        assert!((est.peak_bpm - 18.0).abs() < 1e-9, "got {}", est.peak_bpm);
        assert!(est.confidence > 1.0);
        let est = estimate_rate_fft(&tone_series(1.2, 500.0, 40.0), BandSpec::heart()).unwrap();
        assert!((est.peak_bpm - 72.0).abs() < 1e-9, "got {}", est.peak_bpm);
    }

    #[test]
    fn rate_fft_off_bin_within_half_native_bin() {
        let est = estimate_rate_fft(&tone_series(0.31, 500.0, 40.0), BandSpec::breath()).unwrap();
        // Native bin width at 40 s is 0.025 Hz = 1.5 bpm.
        assert!(
            (est.peak_bpm - 18.6).abs() <= 0.75,
            "got {} for 18.6 bpm tone",
            est.peak_bpm
        );
    }

    #[test]
    fn rate_fft_requires_two_periods() {
        let short = tone_series(0.3, 100.0, 5.0);
        assert!(matches!(
            estimate_rate_fft(&short, BandSpec::breath()),
            Err(DspError::InsufficientData { .. })
        ));
    }

    #[test]
    fn rate_fft_peak_always_inside_band() {
        // Strong out-of-band tone plus weak in-band one.
        let fs = 100.0;
        let n = 8000;
        let series = AmplitudeSeries::new(
            fs,
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    5.0 * (TAU * 3.0 * t).sin() + 0.2 * (TAU * 0.4 * t).sin()
                })
                .collect(),
        )
        .unwrap();
        let est = estimate_rate_fft(&series, BandSpec::breath()).unwrap();
        assert!(BandSpec::breath().contains(est.peak_freq_hz));
        assert!((est.peak_freq_hz - 0.4).abs() < 0.025);
    }

    #[test]
    fn guarded_peak_skips_excluded_interval() {
        let fs = 100.0;
        let n = 8000;
        // 1.2 Hz strong, 1.7 Hz weaker; exclude 1.2 and expect 1.7.
        let series = AmplitudeSeries::new(
            fs,
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    (TAU * 1.2 * t).sin() + 0.4 * (TAU * 1.7 * t).sin()
                })
                .collect(),
        )
        .unwrap();
        let unguarded = estimate_rate_fft(&series, BandSpec::heart()).unwrap();
        assert!((unguarded.peak_freq_hz - 1.2).abs() < 0.02);
        let guarded =
            estimate_rate_fft_guarded(&series, BandSpec::heart(), &[(1.15, 1.25)]).unwrap();
        assert!(
            (guarded.peak_freq_hz - 1.7).abs() < 0.02,
            "got {}",
            guarded.peak_freq_hz
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate_for(500.0).is_ok());
        cfg.hampel_window = 4;
        assert!(cfg.validate_for(500.0).is_err());
        cfg = PipelineConfig::default();
        cfg.fft_window_s = 5.0;
        assert!(cfg.validate_for(500.0).is_err());
        cfg = PipelineConfig::default();
        cfg.heart_band = BandSpec {
            low_hz: 1.0,
            high_hz: 300.0,
        };
        assert!(cfg.validate_for(500.0).is_err());
    }

    #[test]
    fn default_hampel_window_is_one_second_odd() {
        let cfg = PipelineConfig::for_sample_rate(500.0);
        assert_eq!(cfg.hampel_window, 501);
        let cfg = PipelineConfig::for_sample_rate(100.0);
        assert_eq!(cfg.hampel_window, 101);
    }
}
