//! Synthetic CSI traces from a static + dynamic channel frequency response.
//!
//! The channel at each subcarrier is H(f,t) = Hs(f) + sum_k h_k exp(-j2pi
//! (L_k + g_k d(t)) / lambda_f): a static component plus dynamic reflections
//! whose path lengths are modulated by body displacement d(t). Breathing and
//! heartbeat drive d(t); complex Gaussian noise and impulsive amplitude
//! outliers are layered on top at a configured SNR.

use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::geometry::{
    effective_displacement, AntennaPair, GeometryError, MotionVector, Point3, SPEED_OF_LIGHT,
};
use crate::par;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid vital profile: {0}")]
    InvalidProfile(String),
    #[error("duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("sample rate must be positive and at most 1e5 Hz, got {0}")]
    InvalidRate(f64),
    #[error("scene must contain at least one rx chain and one subcarrier")]
    EmptyScene,
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Static channel component: a fixed complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPath {
    pub amplitude: f64,
    pub phase: f64,
}

impl StaticPath {
    pub fn new(amplitude: f64, phase: f64) -> Result<Self, ChannelError> {
        if !(amplitude >= 0.0) {
            return Err(ChannelError::InvalidProfile(format!(
                "static amplitude must be non-negative, got {amplitude}"
            )));
        }
        Ok(Self { amplitude, phase })
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// One body-reflected path, resolved against a concrete antenna pair and
/// motion direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicPath {
    /// Path gain magnitude h_k.
    pub gain: f64,
    /// Rest length of the reflected path in meters.
    pub base_length: f64,
    /// Body reflection point.
    pub reflection: Point3,
    /// Path-length change per meter of body motion, in [0, 2].
    pub coupling: f64,
}

impl DynamicPath {
    /// Resolves geometry: base length |TxQ| + |QRx| and the coupling of unit
    /// motion along `direction` into path-length change.
    pub fn from_geometry(
        pair: &AntennaPair,
        reflection: Point3,
        gain: f64,
        direction: Point3,
    ) -> Result<Self, ChannelError> {
        if !(gain >= 0.0) {
            return Err(ChannelError::InvalidProfile(format!(
                "path gain must be non-negative, got {gain}"
            )));
        }
        let unit_motion = MotionVector::new(direction, 1.0)?;
        let coupling = effective_displacement(pair, &reflection, &unit_motion)?;
        let base_length = reflection.sub(&pair.tx).norm() + reflection.sub(&pair.rx).norm();
        Ok(Self {
            gain,
            base_length,
            reflection,
            coupling,
        })
    }

    /// Direct construction for tests and analytic sweeps.
    pub fn with_coupling(gain: f64, base_length: f64, reflection: Point3, coupling: f64) -> Self {
        Self {
            gain,
            base_length,
            reflection,
            coupling,
        }
    }
}

/// Complex contribution of one dynamic path at carrier frequency `f` for a
/// body displacement `d` (meters): h * exp(-j 2 pi (L + g d) / lambda_f).
pub fn dynamic_cfr(path: &DynamicPath, displacement: f64, f: f64) -> Complex64 {
    let lambda = SPEED_OF_LIGHT / f;
    let phase = -TAU * (path.base_length + path.coupling * displacement) / lambda;
    Complex64::from_polar(path.gain, phase)
}

/// Total channel response: static term plus every dynamic contribution.
pub fn total_cfr(
    static_path: &StaticPath,
    dynamics: &[DynamicPath],
    displacement: f64,
    f: f64,
) -> Complex64 {
    let mut h = static_path.value();
    for path in dynamics {
        h += dynamic_cfr(path, displacement, f);
    }
    h
}

/// Sleeping posture, which fixes the dominant direction of chest motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Posture {
    Supine,
    Prone,
    LeftRecumbent,
    RightRecumbent,
}

impl Posture {
    /// Unit direction of chest/abdomen excursion: vertical when lying on the
    /// back or front, lateral when lying on a side.
    pub fn motion_direction(&self) -> Point3 {
        match self {
            Posture::Supine | Posture::Prone => Point3::new(0.0, 0.0, 1.0),
            Posture::LeftRecumbent | Posture::RightRecumbent => Point3::new(0.0, 1.0, 0.0),
        }
    }

    pub fn is_recumbent(&self) -> bool {
        matches!(self, Posture::LeftRecumbent | Posture::RightRecumbent)
    }
}

impl std::fmt::Display for Posture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Posture::Supine => "supine",
            Posture::Prone => "prone",
            Posture::LeftRecumbent => "left-recumbent",
            Posture::RightRecumbent => "right-recumbent",
        };
        f.write_str(s)
    }
}

/// Shape of the heartbeat displacement pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    /// Pure sinusoid, handy for analytic tests.
    Sinusoid,
    /// Raised-cosine pulse train with the given duty fraction; sharper than a
    /// sinusoid, so it carries realistic harmonics. Zero mean over a period.
    RaisedCosine { duty: f64 },
}

impl PulseShape {
    /// Evaluate at a phase expressed as a fraction of the period in [0, 1).
    pub fn value(&self, cycle_frac: f64) -> f64 {
        match self {
            PulseShape::Sinusoid => (TAU * cycle_frac).sin(),
            PulseShape::RaisedCosine { duty } => {
                let centered = cycle_frac - 0.5;
                let raw = if centered.abs() <= duty / 2.0 {
                    0.5 * (1.0 + (TAU * centered / duty).cos())
                } else {
                    0.0
                };
                raw - 0.5 * duty
            }
        }
    }
}

/// Fraction by which breathing depth shrinks for recumbent postures: lateral
/// chest excursion is much smaller than vertical.
pub const DEFAULT_RECUMBENT_DEPTH_FACTOR: f64 = 0.4;

/// Breathing and heartbeat parameters driving the body displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalProfile {
    /// Breaths per minute, 15-30.
    pub breath_rate_bpm: f64,
    /// Chest/abdomen excursion in meters.
    pub breath_depth_m: f64,
    /// Beats per minute, 60-120.
    pub heart_rate_bpm: f64,
    /// Heartbeat surface excursion in meters, smaller than the breath depth.
    pub heart_amplitude_m: f64,
    pub posture: Posture,
    pub pulse_shape: PulseShape,
    /// Breath-depth multiplier applied for recumbent postures.
    pub recumbent_depth_factor: f64,
}

impl Default for VitalProfile {
    fn default() -> Self {
        Self {
            breath_rate_bpm: 18.0,
            breath_depth_m: 0.005,
            heart_rate_bpm: 72.0,
            heart_amplitude_m: 0.0005,
            posture: Posture::Supine,
            pulse_shape: PulseShape::RaisedCosine { duty: 0.3 },
            recumbent_depth_factor: DEFAULT_RECUMBENT_DEPTH_FACTOR,
        }
    }
}

impl VitalProfile {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let err = |msg: String| Err(ChannelError::InvalidProfile(msg));
        if !(15.0..=30.0).contains(&self.breath_rate_bpm) {
            return err(format!(
                "breath rate {} bpm outside 15-30",
                self.breath_rate_bpm
            ));
        }
        if !(60.0..=120.0).contains(&self.heart_rate_bpm) {
            return err(format!(
                "heart rate {} bpm outside 60-120",
                self.heart_rate_bpm
            ));
        }
        if !(self.breath_depth_m >= 0.0) || !(self.heart_amplitude_m >= 0.0) {
            return err("motion depths must be non-negative".into());
        }
        if self.heart_amplitude_m > 0.0 && self.heart_amplitude_m >= self.breath_depth_m {
            return err(format!(
                "heart amplitude {} must be smaller than breath depth {}",
                self.heart_amplitude_m, self.breath_depth_m
            ));
        }
        if let PulseShape::RaisedCosine { duty } = self.pulse_shape {
            if !(duty > 0.0 && duty <= 1.0) {
                return err(format!("pulse duty {duty} outside (0, 1]"));
            }
        }
        if !(self.recumbent_depth_factor > 0.0 && self.recumbent_depth_factor <= 1.0) {
            return err(format!(
                "recumbent depth factor {} outside (0, 1]",
                self.recumbent_depth_factor
            ));
        }
        Ok(())
    }

    /// Breath depth after the posture adjustment.
    pub fn effective_breath_depth(&self) -> f64 {
        if self.posture.is_recumbent() {
            self.breath_depth_m * self.recumbent_depth_factor
        } else {
            self.breath_depth_m
        }
    }

    pub fn motion_direction(&self) -> Point3 {
        self.posture.motion_direction()
    }
}

/// Additive impairments applied to the synthesized trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Ratio of channel fluctuation power to noise power in dB.
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Probability that any single (frame, antenna, subcarrier) sample gets
    /// an impulsive amplitude spike.
    pub outlier_rate: f64,
    /// Spike size as a multiple of the channel fluctuation standard deviation.
    pub outlier_magnitude: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            snr_db: f64::INFINITY,
            outlier_rate: 0.0,
            outlier_magnitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.snr_db.is_nan() {
            return Err(ChannelError::InvalidNoise("snr_db is NaN".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_rate) {
            return Err(ChannelError::InvalidNoise(format!(
                "outlier rate {} outside [0, 1)",
                self.outlier_rate
            )));
        }
        if !(self.outlier_magnitude >= 0.0) {
            return Err(ChannelError::InvalidNoise(
                "outlier magnitude must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            outlier_rate: 0.0,
            outlier_magnitude: 10.0,
        }
    }
}

/// A timestamped record of complex channel values per (antenna, subcarrier).
///
/// Timestamps are integer microseconds and values are f32 pairs so a trace
/// survives a file round trip bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTrace {
    pub sample_rate: f64,
    pub n_antennas: usize,
    pub n_subcarriers: usize,
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    timestamps_us: Vec<u64>,
    /// Frame-major, antenna-major: values[frame * n_ant * n_sub + ant * n_sub + sub].
    values: Vec<Complex32>,
}

impl CsiTrace {
    pub fn new(
        sample_rate: f64,
        n_antennas: usize,
        n_subcarriers: usize,
        carrier_freq_hz: f64,
        subcarrier_spacing_hz: f64,
        timestamps_us: Vec<u64>,
        values: Vec<Complex32>,
    ) -> Result<Self, ChannelError> {
        if n_antennas == 0 || n_subcarriers == 0 {
            return Err(ChannelError::InvalidTrace(
                "antenna and subcarrier counts must be at least 1".into(),
            ));
        }
        if !(sample_rate > 0.0) {
            return Err(ChannelError::InvalidRate(sample_rate));
        }
        if values.len() != timestamps_us.len() * n_antennas * n_subcarriers {
            return Err(ChannelError::InvalidTrace(format!(
                "value count {} does not match {} frames x {} antennas x {} subcarriers",
                values.len(),
                timestamps_us.len(),
                n_antennas,
                n_subcarriers
            )));
        }
        let nominal_us = 1e6 / sample_rate;
        for (i, pair) in timestamps_us.windows(2).enumerate() {
            let dt = pair[1] as i64 - pair[0] as i64;
            if dt <= 0 {
                return Err(ChannelError::InvalidTrace(format!(
                    "timestamps not strictly increasing at frame {}",
                    i + 1
                )));
            }
            if (dt as f64 - nominal_us).abs() > 0.01 * nominal_us + 1.0 {
                return Err(ChannelError::InvalidTrace(format!(
                    "frame spacing {} us at frame {} deviates more than 1% from nominal {:.3} us",
                    dt,
                    i + 1,
                    nominal_us
                )));
            }
        }
        Ok(Self {
            sample_rate,
            n_antennas,
            n_subcarriers,
            carrier_freq_hz,
            subcarrier_spacing_hz,
            timestamps_us,
            values,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.timestamps_us.len()
    }

    pub fn timestamps_us(&self) -> &[u64] {
        &self.timestamps_us
    }

    pub fn timestamp_s(&self, frame: usize) -> f64 {
        self.timestamps_us[frame] as f64 / 1e6
    }

    pub fn duration_s(&self) -> f64 {
        self.n_frames() as f64 / self.sample_rate
    }

    pub fn values(&self) -> &[Complex32] {
        &self.values
    }

    pub fn value(&self, frame: usize, antenna: usize, subcarrier: usize) -> Complex32 {
        self.values[(frame * self.n_antennas + antenna) * self.n_subcarriers + subcarrier]
    }

    /// One frame's values, antenna-major.
    pub fn frame(&self, frame: usize) -> &[Complex32] {
        let stride = self.n_antennas * self.n_subcarriers;
        &self.values[frame * stride..(frame + 1) * stride]
    }

    pub fn subcarrier_freq_hz(&self, subcarrier: usize) -> f64 {
        let offset = subcarrier as f64 - (self.n_subcarriers as f64 - 1.0) / 2.0;
        self.carrier_freq_hz + offset * self.subcarrier_spacing_hz
    }

    /// Amplitude time series of one (antenna, subcarrier) stream.
    pub fn amplitude_series(&self, antenna: usize, subcarrier: usize) -> Vec<f64> {
        (0..self.n_frames())
            .map(|frame| {
                let v = self.value(frame, antenna, subcarrier);
                ((v.re as f64).powi(2) + (v.im as f64).powi(2)).sqrt()
            })
            .collect()
    }

    /// Sub-trace over frames [start, end).
    pub fn slice_frames(&self, start: usize, end: usize) -> CsiTrace {
        let stride = self.n_antennas * self.n_subcarriers;
        CsiTrace {
            sample_rate: self.sample_rate,
            n_antennas: self.n_antennas,
            n_subcarriers: self.n_subcarriers,
            carrier_freq_hz: self.carrier_freq_hz,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
            timestamps_us: self.timestamps_us[start..end].to_vec(),
            values: self.values[start * stride..end * stride].to_vec(),
        }
    }
}

/// Per-stream layout of a trace, without the frames themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub sample_rate: f64,
    pub n_antennas: usize,
    pub n_subcarriers: usize,
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
}

impl TraceMeta {
    pub fn of(trace: &CsiTrace) -> Self {
        Self {
            sample_rate: trace.sample_rate,
            n_antennas: trace.n_antennas,
            n_subcarriers: trace.n_subcarriers,
            carrier_freq_hz: trace.carrier_freq_hz,
            subcarrier_spacing_hz: trace.subcarrier_spacing_hz,
        }
    }
}

/// One receive chain: the antenna pair plus its static and reflected paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RxChain {
    pub rx_position: Point3,
    pub static_path: StaticPath,
    /// (gain, reflection point) of each body-reflected path.
    pub paths: Vec<ScatterPath>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScatterPath {
    pub gain: f64,
    pub reflection: Point3,
}

/// Full measurement scene: transmitter, receive chains and the OFDM grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub tx_position: Point3,
    pub chains: Vec<RxChain>,
    pub sample_rate_hz: f64,
    pub carrier_freq_hz: f64,
    pub n_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
}

impl Scene {
    /// The bedside lab setup: three receive antennas at 120/100/80 cm from
    /// the transmitter, body outside the second Fresnel zone of the closest
    /// pair. The 80 cm chain carries the strongest reflected component.
    pub fn default_lab() -> Self {
        let body = Point3::new(0.4, 0.3, 0.25);
        let chain = |x: f64, static_amp: f64, gain: f64| RxChain {
            rx_position: Point3::new(x, 0.0, 0.0),
            static_path: StaticPath {
                amplitude: static_amp,
                phase: 0.0,
            },
            paths: vec![ScatterPath {
                gain,
                reflection: body,
            }],
        };
        Self {
            tx_position: Point3::new(0.0, 0.0, 0.0),
            chains: vec![
                chain(1.2, 1.2, 0.08),
                chain(1.0, 1.0, 0.15),
                chain(0.8, 1.0, 0.35),
            ],
            sample_rate_hz: 500.0,
            carrier_freq_hz: SPEED_OF_LIGHT / crate::geometry::DEFAULT_WAVELENGTH_M,
            n_subcarriers: 30,
            subcarrier_spacing_hz: 20.0e6 / 29.0,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn pair(&self, chain: usize) -> Result<AntennaPair, GeometryError> {
        AntennaPair::new(
            self.tx_position,
            self.chains[chain].rx_position,
            self.wavelength_m(),
        )
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.chains.is_empty() || self.n_subcarriers == 0 {
            return Err(ChannelError::EmptyScene);
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz <= 1e5) {
            return Err(ChannelError::InvalidRate(self.sample_rate_hz));
        }
        if !(self.carrier_freq_hz > 0.0) || !(self.subcarrier_spacing_hz >= 0.0) {
            return Err(ChannelError::InvalidTrace(
                "carrier frequency must be positive and spacing non-negative".into(),
            ));
        }
        for i in 0..self.chains.len() {
            self.pair(i)?;
        }
        Ok(())
    }
}

/// Body displacement time series d(t) for the profile: a breathing sinusoid
/// plus the heartbeat pulse train. Length is floor(duration * rate).
pub fn synth_displacement(
    profile: &VitalProfile,
    duration_s: f64,
    rate_hz: f64,
) -> Result<Vec<f64>, ChannelError> {
    if !(duration_s > 0.0) {
        return Err(ChannelError::InvalidDuration(duration_s));
    }
    if !(rate_hz > 0.0) {
        return Err(ChannelError::InvalidRate(rate_hz));
    }
    profile.validate()?;
    let n = (duration_s * rate_hz).floor() as usize;
    let breath_hz = profile.breath_rate_bpm / 60.0;
    let heart_hz = profile.heart_rate_bpm / 60.0;
    let depth = profile.effective_breath_depth();
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / rate_hz;
            let breath = depth * (TAU * breath_hz * t).sin();
            let heart =
                profile.heart_amplitude_m * profile.pulse_shape.value((heart_hz * t).fract());
            breath + heart
        })
        .collect())
}

/// Positions of injected outliers plus the derived noise level, for tests
/// that need to know exactly what the synthesizer did.
#[derive(Debug, Clone, Default)]
pub struct SynthDetail {
    /// (frame, antenna, subcarrier) of every injected spike.
    pub outliers: Vec<(usize, usize, usize)>,
    /// Complex noise variance E|w|^2 used per sample.
    pub noise_variance: f64,
    /// Mean fluctuation power of the clean channel across streams.
    pub fluctuation_power: f64,
}

/// Synthesizes a CSI trace. Deterministic in `seed`, including across the
/// parallel and sequential builds.
pub fn synthesize_trace(
    scene: &Scene,
    profile: &VitalProfile,
    duration_s: f64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<CsiTrace, ChannelError> {
    synthesize_trace_detailed(scene, profile, duration_s, noise, seed).map(|(trace, _)| trace)
}

pub fn synthesize_trace_detailed(
    scene: &Scene,
    profile: &VitalProfile,
    duration_s: f64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<(CsiTrace, SynthDetail), ChannelError> {
    scene.validate()?;
    noise.validate()?;
    let displacement = synth_displacement(profile, duration_s, scene.sample_rate_hz)?;
    let n_frames = displacement.len();
    let n_ant = scene.chains.len();
    let n_sub = scene.n_subcarriers;
    let direction = profile.motion_direction();

    // Resolve geometry once per chain.
    let mut chains: Vec<(Complex64, Vec<DynamicPath>)> = Vec::with_capacity(n_ant);
    for (i, chain) in scene.chains.iter().enumerate() {
        let pair = scene.pair(i)?;
        let paths = chain
            .paths
            .iter()
            .map(|p| DynamicPath::from_geometry(&pair, p.reflection, p.gain, direction))
            .collect::<Result<Vec<_>, _>>()?;
        chains.push((chain.static_path.value(), paths));
    }
    let first_freq =
        scene.carrier_freq_hz - (n_sub as f64 - 1.0) / 2.0 * scene.subcarrier_spacing_hz;
    let spacing = scene.subcarrier_spacing_hz;

    let stride = n_ant * n_sub;
    // Across the uniform subcarrier grid a path's phase advances by a fixed
    // step, so one sin_cos per (frame, chain, path) seeds a complex
    // recurrence instead of a sin_cos per subcarrier.
    let clean_frame = |frame: usize, out: &mut Vec<Complex64>| {
        out.clear();
        let d = displacement[frame];
        for (static_value, paths) in &chains {
            let base = out.len();
            out.resize(base + n_sub, *static_value);
            for path in paths {
                let delay = -TAU * (path.base_length + path.coupling * d) / SPEED_OF_LIGHT;
                let mut cur = Complex64::from_polar(path.gain, delay * first_freq);
                let step = Complex64::from_polar(1.0, delay * spacing);
                for slot in &mut out[base..base + n_sub] {
                    *slot += cur;
                    cur *= step;
                }
            }
        }
    };

    // Pass 1: per-stream first and second moments of the clean channel, in
    // fixed-size chunks folded in order so the reduction is bit-reproducible
    // regardless of thread count.
    const CHUNK: usize = 1024;
    let n_chunks = n_frames.div_ceil(CHUNK);
    let partials: Vec<(Vec<Complex64>, Vec<f64>)> = par::map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = ((c + 1) * CHUNK).min(n_frames);
        let mut sums = vec![Complex64::new(0.0, 0.0); stride];
        let mut sq = vec![0.0f64; stride];
        let mut buf = Vec::with_capacity(stride);
        for frame in lo..hi {
            clean_frame(frame, &mut buf);
            for (s, (acc, acc_sq)) in buf.iter().zip(sums.iter_mut().zip(sq.iter_mut())) {
                *acc += s;
                *acc_sq += s.norm_sqr();
            }
        }
        (sums, sq)
    });
    let mut sums = vec![Complex64::new(0.0, 0.0); stride];
    let mut sq = vec![0.0f64; stride];
    for (part_sum, part_sq) in partials {
        for i in 0..stride {
            sums[i] += part_sum[i];
            sq[i] += part_sq[i];
        }
    }
    let fluctuation_power = if n_frames == 0 {
        0.0
    } else {
        let nf = n_frames as f64;
        let total: f64 = (0..stride)
            .map(|i| (sq[i] / nf - sums[i].norm_sqr() / (nf * nf)).max(0.0))
            .sum();
        total / stride as f64
    };

    let noise_variance = if noise.snr_db.is_finite() && fluctuation_power > 0.0 {
        fluctuation_power / 10f64.powf(noise.snr_db / 10.0)
    } else {
        0.0
    };
    let sigma_component = (noise_variance / 2.0).sqrt();
    let spike_base = fluctuation_power.sqrt();

    // Pass 2: regenerate the clean channel, add noise and outliers, one RNG
    // substream per frame so chunking and thread count cannot change the
    // output.
    type NoisyChunk = (Vec<Complex32>, Vec<(usize, usize, usize)>);
    let chunks: Vec<NoisyChunk> = par::map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = ((c + 1) * CHUNK).min(n_frames);
        let mut values = Vec::with_capacity((hi - lo) * stride);
        let mut outliers = Vec::new();
        let mut buf = Vec::with_capacity(stride);
        for frame in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, frame as u64));
            clean_frame(frame, &mut buf);
            for (idx, clean) in buf.iter().enumerate() {
                let mut v = *clean;
                if sigma_component > 0.0 {
                    let (g0, g1) = gaussian_pair(&mut rng);
                    v += Complex64::new(sigma_component * g0, sigma_component * g1);
                }
                if noise.outlier_rate > 0.0 && rng.gen::<f64>() < noise.outlier_rate {
                    let spike = noise.outlier_magnitude
                        * spike_base
                        * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let dir = if v.norm() > 0.0 {
                        v / v.norm()
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    v += dir * spike;
                    outliers.push((frame, idx / n_sub, idx % n_sub));
                }
                values.push(Complex32::new(v.re as f32, v.im as f32));
            }
        }
        (values, outliers)
    });

    let mut values = Vec::with_capacity(n_frames * stride);
    let mut outliers = Vec::new();
    for (chunk_values, chunk_outliers) in chunks {
        values.extend(chunk_values);
        outliers.extend(chunk_outliers);
    }
    let timestamps_us: Vec<u64> = (0..n_frames)
        .map(|i| (i as f64 * 1e6 / scene.sample_rate_hz).round() as u64)
        .collect();

    let trace = CsiTrace::new(
        scene.sample_rate_hz,
        n_ant,
        n_sub,
        scene.carrier_freq_hz,
        scene.subcarrier_spacing_hz,
        timestamps_us,
        values,
    )?;
    Ok((
        trace,
        SynthDetail {
            outliers,
            noise_variance,
            fluctuation_power,
        },
    ))
}

/// SplitMix64 step, used to derive independent per-frame RNG seeds.
fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x2545_F491_4F6C_DD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Box-Muller pair of independent standard normals.
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft::{hann_window, real_magnitude_spectrum};

    fn quiet_profile() -> VitalProfile {
        VitalProfile {
            breath_depth_m: 0.0,
            heart_amplitude_m: 0.0,
            ..VitalProfile::default()
        }
    }

    #[test]
    fn displacement_zero_profile_is_all_zero() {
        let d = synth_displacement(&quiet_profile(), 2.0, 100.0).unwrap();
        assert_eq!(d.len(), 200);
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn displacement_rejects_bad_inputs() {
        let p = VitalProfile::default();
        assert!(synth_displacement(&p, 0.0, 100.0).is_err());
        assert!(synth_displacement(&p, -1.0, 100.0).is_err());
        assert!(synth_displacement(&p, 1.0, 0.0).is_err());
        let bad = VitalProfile {
            breath_rate_bpm: 40.0,
            ..VitalProfile::default()
        };
        assert!(synth_displacement(&bad, 1.0, 100.0).is_err());
    }

    #[test]
    fn displacement_fundamental_at_breath_frequency() {
        let profile = VitalProfile {
            breath_rate_bpm: 18.0,
            heart_amplitude_m: 0.0,
            ..VitalProfile::default()
        };
        let rate = 100.0;
        let mut d = synth_displacement(&profile, 40.0, rate).unwrap();
        hann_window(&mut d);
        let (mags, bin_hz) = real_magnitude_spectrum(&d, rate, 4);
        let peak = mags
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let freq = peak as f64 * bin_hz;
        assert!((freq - 0.3).abs() < bin_hz + 1e-12, "peak at {freq} Hz");
    }

    #[test]
    fn displacement_peak_to_peak_matches_depth() {
        let profile = VitalProfile {
            breath_rate_bpm: 15.0,
            breath_depth_m: 0.005,
            heart_rate_bpm: 72.0,
            heart_amplitude_m: 0.0005,
            ..VitalProfile::default()
        };
        let d = synth_displacement(&profile, 40.0, 500.0).unwrap();
        assert_eq!(d.len(), 20000);
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let p2p = max - min;
        // 10 mm of breathing, give or take the heartbeat term.
        assert!((p2p - 0.010).abs() <= 2.0 * 0.0005, "p2p {p2p}");
    }

    #[test]
    fn pulse_shapes_are_zero_mean() {
        for shape in [
            PulseShape::Sinusoid,
            PulseShape::RaisedCosine { duty: 0.3 },
            PulseShape::RaisedCosine { duty: 0.7 },
        ] {
            let n = 100_000;
            let mean: f64 = (0..n)
                .map(|i| shape.value(i as f64 / n as f64))
                .sum::<f64>()
                / n as f64;
            assert!(mean.abs() < 1e-6, "{shape:?} mean {mean}");
        }
    }

    #[test]
    fn dynamic_cfr_phase_steps() {
        let path = DynamicPath::with_coupling(0.5, 1.0, Point3::new(0.0, 0.0, 0.0), 1.0);
        let f = SPEED_OF_LIGHT / 0.05; // lambda = 5 cm
        let base = dynamic_cfr(&path, 0.0, f);
        let half = dynamic_cfr(&path, 0.025, f);
        let full = dynamic_cfr(&path, 0.05, f);
        assert!((base.norm() - 0.5).abs() < 1e-12);
        // lambda/2 displacement flips the phase; lambda returns to start.
        assert!((base + half).norm() < 1e-9, "got {base} and {half}");
        assert!((base - full).norm() < 1e-9);
    }

    #[test]
    fn dynamic_cfr_zero_gain_is_zero() {
        let path = DynamicPath::with_coupling(0.0, 1.0, Point3::new(0.0, 0.0, 0.0), 1.0);
        assert_eq!(dynamic_cfr(&path, 0.01, 5.3e9).norm(), 0.0);
    }

    #[test]
    fn total_cfr_without_dynamics_is_static() {
        let s = StaticPath {
            amplitude: 1.3,
            phase: 0.7,
        };
        let h = total_cfr(&s, &[], 0.0, 5.3e9);
        assert!((h - s.value()).norm() < 1e-15);
    }

    #[test]
    fn total_cfr_destructive_interference() {
        let f = SPEED_OF_LIGHT / 0.05;
        // Dynamic path at zero displacement has phase -2 pi L / lambda = -2 pi
        // * 20 = 0 mod 2 pi; a static phase of pi then cancels exactly.
        let s = StaticPath {
            amplitude: 0.5,
            phase: std::f64::consts::PI,
        };
        let path = DynamicPath::with_coupling(0.5, 1.0, Point3::new(0.0, 0.0, 0.0), 1.0);
        let h = total_cfr(&s, &[path], 0.0, f);
        assert!(h.norm() < 1e-9, "expected cancellation, |H| = {}", h.norm());
    }

    #[test]
    fn swept_displacement_amplitude_extrema_match_zone_parity() {
        // One dynamic path, displacement swept linearly over m wavelengths:
        // |H| oscillates through exactly 2m extrema.
        let f = SPEED_OF_LIGHT / 0.05635;
        let lambda = 0.05635;
        let s = StaticPath {
            amplitude: 1.0,
            phase: 0.4,
        };
        let path = DynamicPath::with_coupling(0.6, 1.003, Point3::new(0.0, 0.0, 0.0), 1.0);
        for m in [1usize, 2, 3, 5] {
            let n = 4000 * m;
            let mags: Vec<f64> = (0..n)
                .map(|i| {
                    let d = i as f64 / n as f64 * m as f64 * lambda;
                    total_cfr(&s, &[path], d, f).norm()
                })
                .collect();
            let mut extrema = 0;
            let mut kinds = Vec::new();
            for w in mags.windows(3) {
                if w[1] > w[0] && w[1] > w[2] {
                    extrema += 1;
                    kinds.push(true);
                } else if w[1] < w[0] && w[1] < w[2] {
                    extrema += 1;
                    kinds.push(false);
                }
            }
            assert_eq!(extrema, 2 * m, "sweep over {m} wavelengths");
            for pair in kinds.windows(2) {
                assert_ne!(pair[0], pair[1], "extrema must alternate");
            }
        }
    }

    #[test]
    fn synthesize_rejects_empty_scene() {
        let mut scene = Scene::default_lab();
        scene.chains.clear();
        let err = synthesize_trace(&scene, &VitalProfile::default(), 1.0, &NoiseSpec::none(), 1);
        assert!(matches!(err, Err(ChannelError::EmptyScene)));
    }

    #[test]
    fn static_profile_without_noise_gives_identical_frames() {
        let scene = Scene::default_lab();
        let trace = synthesize_trace(&scene, &quiet_profile(), 1.0, &NoiseSpec::none(), 7).unwrap();
        assert_eq!(trace.n_frames(), 500);
        let first = trace.frame(0).to_vec();
        for i in 1..trace.n_frames() {
            assert_eq!(trace.frame(i), &first[..], "frame {i} differs");
        }
    }

    #[test]
    fn seed_determinism_and_sensitivity() {
        let scene = Scene::default_lab();
        let profile = VitalProfile::default();
        let noise = NoiseSpec {
            snr_db: 20.0,
            outlier_rate: 0.01,
            outlier_magnitude: 10.0,
        };
        let (a, da) = synthesize_trace_detailed(&scene, &profile, 2.0, &noise, 42).unwrap();
        let (b, db) = synthesize_trace_detailed(&scene, &profile, 2.0, &noise, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(da.outliers, db.outliers);
        let (c, _) = synthesize_trace_detailed(&scene, &profile, 2.0, &noise, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn triangle_bound_holds_per_frame() {
        let scene = Scene::default_lab();
        let trace =
            synthesize_trace(&scene, &VitalProfile::default(), 5.0, &NoiseSpec::none(), 3).unwrap();
        for (i, chain) in scene.chains.iter().enumerate() {
            let bound =
                chain.static_path.amplitude + chain.paths.iter().map(|p| p.gain).sum::<f64>();
            for frame in 0..trace.n_frames() {
                for sub in 0..trace.n_subcarriers {
                    let v = trace.value(frame, i, sub);
                    let mag = ((v.re as f64).powi(2) + (v.im as f64).powi(2)).sqrt();
                    assert!(
                        mag <= bound + 1e-5,
                        "frame {frame} antenna {i} sub {sub}: {mag} > {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn breathing_line_visible_on_every_subcarrier() {
        let scene = Scene::default_lab();
        let profile = VitalProfile {
            breath_rate_bpm: 18.0,
            heart_amplitude_m: 0.0,
            ..VitalProfile::default()
        };
        let trace = synthesize_trace(&scene, &profile, 40.0, &NoiseSpec::none(), 5).unwrap();
        for ant in 0..trace.n_antennas {
            for sub in (0..trace.n_subcarriers).step_by(7) {
                let mut series = trace.amplitude_series(ant, sub);
                let mean = series.iter().sum::<f64>() / series.len() as f64;
                for v in series.iter_mut() {
                    *v -= mean;
                }
                hann_window(&mut series);
                let (mags, bin_hz) = real_magnitude_spectrum(&series, trace.sample_rate, 4);
                // Largest line away from DC must sit at the breathing rate.
                let min_bin = (0.1 / bin_hz).ceil() as usize;
                let peak = mags
                    .iter()
                    .enumerate()
                    .skip(min_bin)
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                let freq = peak as f64 * bin_hz;
                assert!(
                    (freq - 0.3).abs() <= 1.0 / 40.0 + 1e-9,
                    "antenna {ant} sub {sub}: peak at {freq} Hz"
                );
            }
        }
    }

    #[test]
    fn measured_snr_matches_request_within_1db() {
        let scene = Scene::default_lab();
        let profile = VitalProfile::default();
        for snr_db in [10.0, 20.0] {
            let noise = NoiseSpec {
                snr_db,
                outlier_rate: 0.0,
                outlier_magnitude: 0.0,
            };
            let (noisy, detail) =
                synthesize_trace_detailed(&scene, &profile, 40.0, &noise, 11).unwrap();
            let clean = synthesize_trace(&scene, &profile, 40.0, &NoiseSpec::none(), 11).unwrap();
            let mut noise_power = 0.0;
            let mut count = 0usize;
            for (a, b) in noisy.values().iter().zip(clean.values()) {
                let dr = a.re as f64 - b.re as f64;
                let di = a.im as f64 - b.im as f64;
                noise_power += dr * dr + di * di;
                count += 1;
            }
            noise_power /= count as f64;
            let measured_db = 10.0 * (detail.fluctuation_power / noise_power).log10();
            assert!(
                (measured_db - snr_db).abs() < 1.0,
                "requested {snr_db} dB, measured {measured_db} dB"
            );
        }
    }

    #[test]
    fn outliers_land_where_reported() {
        let scene = Scene::default_lab();
        let profile = VitalProfile::default();
        let noise = NoiseSpec {
            snr_db: 20.0,
            outlier_rate: 0.01,
            outlier_magnitude: 10.0,
        };
        let (noisy, detail) =
            synthesize_trace_detailed(&scene, &profile, 10.0, &noise, 99).unwrap();
        let no_spikes = NoiseSpec {
            outlier_rate: 0.0,
            ..noise
        };
        let (plain, _) = synthesize_trace_detailed(&scene, &profile, 10.0, &no_spikes, 99).unwrap();
        assert!(!detail.outliers.is_empty());
        let expected = 10.0 * 500.0 * 90.0 * 0.01;
        let got = detail.outliers.len() as f64;
        assert!(
            (got - expected).abs() < 0.25 * expected,
            "outlier count {got} vs expected ~{expected}"
        );
        for &(frame, ant, sub) in &detail.outliers {
            let a = noisy.value(frame, ant, sub);
            let b = plain.value(frame, ant, sub);
            assert_ne!(a, b, "spike at ({frame},{ant},{sub}) did not alter sample");
        }
    }

    #[test]
    fn trace_constructor_rejects_non_monotone_and_gappy_timestamps() {
        let values = vec![Complex32::new(0.0, 0.0); 3];
        assert!(CsiTrace::new(500.0, 1, 1, 5e9, 0.0, vec![0, 2000, 2000], values.clone()).is_err());
        assert!(CsiTrace::new(500.0, 1, 1, 5e9, 0.0, vec![0, 2000, 6000], values.clone()).is_err());
        assert!(CsiTrace::new(500.0, 1, 1, 5e9, 0.0, vec![0, 2000, 4000], values).is_ok());
    }
}
