//! Command-line interface: synthesize traces, analyze or stream them, rank
//! antenna placements and evaluate against ground truth.
//!
//! Exit codes: 0 on success, 2 for usage errors, 3 for data errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use csi_vitals::channel::{NoiseSpec, Posture, PulseShape, Scene, VitalProfile};
use csi_vitals::dsp::{analyze_vitals, BandSpec, PipelineConfig};
use csi_vitals::eval::EvalManifest;
use csi_vitals::geometry::{
    effective_displacement, placement_score, zone_index, zone_parity_factor,
};
use csi_vitals::scenario::ScenarioFile;
use csi_vitals::store::{
    append_session, export_amplitude_csv, export_spectrum_csv, read_trace, write_trace,
    SessionRecord, TraceFrameReader,
};
use csi_vitals::streaming::{StreamConfig, StreamingEstimator};

/// Environment variable pointing at a TOML file with default stream/pipeline
/// configuration; command-line flags override it field by field.
const CONFIG_ENV: &str = "CSI_VITALS_CONFIG";

#[derive(Parser)]
#[command(
    name = "csi-vitals",
    about = "WiFi-CSI vital-sign sensing: simulate, analyze, stream, plan, evaluate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a CSI trace from a scenario and vital profile.
    Synth(SynthArgs),
    /// Estimate breathing and heart rate from a recorded trace.
    Analyze(AnalyzeArgs),
    /// Frame-by-frame estimation from a trace file or standard input.
    Stream(StreamArgs),
    /// Rank candidate antenna placements for a scenario.
    Plan(PlanArgs),
    /// Compare estimates against ground truth over a manifest of sessions.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PostureArg {
    Supine,
    Prone,
    LeftRecumbent,
    RightRecumbent,
}

impl From<PostureArg> for Posture {
    fn from(p: PostureArg) -> Self {
        match p {
            PostureArg::Supine => Posture::Supine,
            PostureArg::Prone => Posture::Prone,
            PostureArg::LeftRecumbent => Posture::LeftRecumbent,
            PostureArg::RightRecumbent => Posture::RightRecumbent,
        }
    }
}

/// Overrides for every pipeline and stream configuration field.
#[derive(Args, Clone)]
struct ConfigFlags {
    /// Hampel window width in samples (odd).
    #[arg(long)]
    hampel_window: Option<usize>,
    /// Hampel outlier threshold in robust standard deviations.
    #[arg(long)]
    hampel_nsigma: Option<f64>,
    /// Butterworth prototype order.
    #[arg(long)]
    butterworth_order: Option<usize>,
    /// Breathing band low edge, Hz.
    #[arg(long)]
    breath_low: Option<f64>,
    /// Breathing band high edge, Hz.
    #[arg(long)]
    breath_high: Option<f64>,
    /// Heart band low edge, Hz.
    #[arg(long)]
    heart_low: Option<f64>,
    /// Heart band high edge, Hz.
    #[arg(long)]
    heart_high: Option<f64>,
    /// Analysis window, seconds.
    #[arg(long)]
    fft_window: Option<f64>,
    /// Receive antenna index; omit to auto-select by variance.
    #[arg(long)]
    antenna: Option<usize>,
    /// Peak-to-median ratio for a confident estimate.
    #[arg(long)]
    confidence_threshold: Option<f64>,
    /// Accumulation threshold before the first streamed estimate, seconds.
    #[arg(long)]
    threshold: Option<f64>,
    /// Interval between streamed estimates, seconds.
    #[arg(long)]
    update_interval: Option<f64>,
}

impl ConfigFlags {
    /// Resolution order: built-in defaults for the sample rate, then the
    /// `CSI_VITALS_CONFIG` file if set, then explicit flags.
    fn resolve(&self, sample_rate: f64) -> Result<StreamConfig, CliError> {
        let mut config = match std::env::var_os(CONFIG_ENV) {
            Some(path) => {
                let path = PathBuf::from(path);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    CliError(format!(
                        "cannot read {CONFIG_ENV} file {}: {e}",
                        path.display()
                    ))
                })?;
                toml::from_str::<StreamConfig>(&text).map_err(|e| {
                    CliError(format!(
                        "cannot parse {CONFIG_ENV} file {}: {e}",
                        path.display()
                    ))
                })?
            }
            None => StreamConfig {
                pipeline: PipelineConfig::for_sample_rate(sample_rate),
                ..StreamConfig::default()
            },
        };
        let p = &mut config.pipeline;
        if let Some(v) = self.hampel_window {
            p.hampel_window = v;
        }
        if let Some(v) = self.hampel_nsigma {
            p.hampel_nsigma = v;
        }
        if let Some(v) = self.butterworth_order {
            p.butterworth_order = v;
        }
        let band = |cur: BandSpec, low: Option<f64>, high: Option<f64>| BandSpec {
            low_hz: low.unwrap_or(cur.low_hz),
            high_hz: high.unwrap_or(cur.high_hz),
        };
        p.breath_band = band(p.breath_band, self.breath_low, self.breath_high);
        p.heart_band = band(p.heart_band, self.heart_low, self.heart_high);
        if let Some(v) = self.fft_window {
            p.fft_window_s = v;
        }
        if self.antenna.is_some() {
            p.antenna = self.antenna;
        }
        if let Some(v) = self.confidence_threshold {
            p.confidence_threshold = v;
        }
        if let Some(v) = self.threshold {
            config.threshold_s = v;
        }
        if let Some(v) = self.update_interval {
            config.update_interval_s = v;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario file; omit for the built-in bedside lab scene.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Trace duration in seconds.
    #[arg(long)]
    duration: f64,
    /// RNG seed; the trace is a pure function of flags and seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output trace path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 18.0)]
    breath_bpm: f64,
    /// Chest excursion in meters.
    #[arg(long, default_value_t = 0.005)]
    breath_depth: f64,
    #[arg(long, default_value_t = 72.0)]
    heart_bpm: f64,
    /// Heartbeat surface excursion in meters.
    #[arg(long, default_value_t = 0.0005)]
    heart_amp: f64,
    #[arg(long, value_enum, default_value_t = PostureArg::Supine)]
    posture: PostureArg,
    /// Use a sinusoidal heartbeat pulse instead of the raised cosine.
    #[arg(long)]
    sinusoid_pulse: bool,
    /// Channel fluctuation to noise ratio in dB.
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    /// Disable additive noise entirely.
    #[arg(long)]
    no_noise: bool,
    /// Fraction of samples hit by impulsive outliers.
    #[arg(long, default_value_t = 0.0)]
    outlier_rate: f64,
    /// Outlier size as a multiple of the channel fluctuation std.
    #[arg(long, default_value_t = 10.0)]
    outlier_magnitude: f64,
    /// Append a session record to this store directory.
    #[arg(long)]
    session_store: Option<PathBuf>,
    /// Session id for --session-store.
    #[arg(long)]
    session_id: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input trace path.
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    config: ConfigFlags,
    /// Write breath/heart band spectra as CSV next to this prefix.
    #[arg(long)]
    spectra_out: Option<PathBuf>,
    /// Write the selected stream's amplitude series as CSV.
    #[arg(long)]
    amplitude_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Args)]
struct StreamArgs {
    /// Trace source path, or "-" for standard input.
    #[arg(long, default_value = "-")]
    source: String,
    #[command(flatten)]
    config: ConfigFlags,
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario file with a [body] section and [[candidate]] placements.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Args)]
struct EvalArgs {
    /// Manifest of [[entry]] sections: trace, breath_truth, pulse_truth.
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    config: ConfigFlags,
    /// Write the per-window report CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

/// Data-level failure: printed to stderr, exit code 3.
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Stream(args) => cmd_stream(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}

fn load_scene(path: &Option<PathBuf>) -> Result<(Scene, String), CliError> {
    match path {
        Some(p) => {
            let scenario = ScenarioFile::load(p)?;
            Ok((scenario.to_scene()?, p.display().to_string()))
        }
        None => Ok((Scene::default_lab(), "default-lab".to_string())),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let (scene, scenario_name) = load_scene(&args.scenario)?;
    let profile = VitalProfile {
        breath_rate_bpm: args.breath_bpm,
        breath_depth_m: args.breath_depth,
        heart_rate_bpm: args.heart_bpm,
        heart_amplitude_m: args.heart_amp,
        posture: args.posture.into(),
        pulse_shape: if args.sinusoid_pulse {
            PulseShape::Sinusoid
        } else {
            PulseShape::RaisedCosine { duty: 0.3 }
        },
        ..VitalProfile::default()
    };
    let noise = NoiseSpec {
        snr_db: if args.no_noise {
            f64::INFINITY
        } else {
            args.snr_db
        },
        outlier_rate: args.outlier_rate,
        outlier_magnitude: args.outlier_magnitude,
    };
    let trace = csi_vitals::synthesize_trace(&scene, &profile, args.duration, &noise, args.seed)?;
    write_trace(&args.out, &trace)?;
    println!(
        "wrote {} frames ({:.1} s at {} Hz, {} antennas x {} subcarriers) to {}",
        trace.n_frames(),
        trace.duration_s(),
        trace.sample_rate,
        trace.n_antennas,
        trace.n_subcarriers,
        args.out.display()
    );

    match (&args.session_store, &args.session_id) {
        (Some(store), Some(id)) => {
            let record = SessionRecord {
                id: id.clone(),
                scenario: scenario_name,
                trace_path: args.out.display().to_string(),
                estimates: Vec::new(),
            };
            append_session(store, &record)?;
            println!("appended session {id:?} to {}", store.display());
        }
        (None, None) => {}
        _ => {
            return Err(CliError(
                "--session-store and --session-id must be given together".into(),
            ))
        }
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let trace = read_trace(&args.trace)?;
    let config = args.config.resolve(trace.sample_rate)?;
    let analysis = analyze_vitals(&trace, &config.pipeline)?;
    let e = &analysis.estimate;

    match args.format {
        OutputFormat::Text => {
            println!(
                "window   : {:.3} .. {:.3} s (antenna {}, subcarrier {})",
                e.window_start_s, e.window_end_s, e.antenna, e.subcarrier
            );
            println!(
                "breathing: {:.3} bpm  (confidence {:.2}{})",
                e.breath_bpm,
                e.breath_confidence,
                if e.breath_confident {
                    ""
                } else {
                    ", LOW CONFIDENCE"
                }
            );
            println!(
                "heart    : {:.3} bpm  (confidence {:.2}{})",
                e.heart_bpm,
                e.heart_confidence,
                if e.heart_confident {
                    ""
                } else {
                    ", LOW CONFIDENCE"
                }
            );
        }
        OutputFormat::Csv => {
            println!(
                "window_start_s,window_end_s,antenna,subcarrier,breath_bpm,breath_confidence,\
                 breath_confident,heart_bpm,heart_confidence,heart_confident"
            );
            println!(
                "{},{},{},{},{},{},{},{},{},{}",
                e.window_start_s,
                e.window_end_s,
                e.antenna,
                e.subcarrier,
                e.breath_bpm,
                e.breath_confidence,
                e.breath_confident,
                e.heart_bpm,
                e.heart_confidence,
                e.heart_confident
            );
        }
    }

    if let Some(prefix) = &args.spectra_out {
        let breath = with_suffix(prefix, "breath.csv");
        let heart = with_suffix(prefix, "heart.csv");
        export_spectrum_csv(&breath, &analysis.breath_spectrum)?;
        export_spectrum_csv(&heart, &analysis.heart_spectrum)?;
        eprintln!(
            "spectra written to {} and {}",
            breath.display(),
            heart.display()
        );
    }
    if let Some(path) = &args.amplitude_out {
        export_amplitude_csv(path, &trace, e.antenna, e.subcarrier)?;
        eprintln!("amplitude series written to {}", path.display());
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if !name.is_empty() {
        name.push('_');
    }
    name.push_str(suffix);
    prefix.with_file_name(name)
}

fn cmd_stream(args: StreamArgs) -> Result<(), CliError> {
    let reader: Box<dyn Read> = if args.source == "-" {
        Box::new(std::io::stdin().lock())
    } else {
        Box::new(std::io::BufReader::new(std::fs::File::open(&args.source)?))
    };
    let (mut frames, meta) = TraceFrameReader::new(reader)?;
    let config = args.config.resolve(meta.sample_rate)?;
    let mut estimator = StreamingEstimator::new(meta, config)?;
    loop {
        let next = frames.next_frame()?;
        let Some((ts, values)) = next else { break };
        match estimator.push_frame(ts, &values) {
            Ok(Some(e)) => println!(
                "{}, {}, {}, {}, {}",
                e.window_end_s, e.breath_bpm, e.heart_bpm, e.breath_confidence, e.heart_confidence
            ),
            Ok(None) => {}
            Err(e) => {
                return Err(CliError(format!("frame {}: {e}", frames.frames_read() - 1)));
            }
        }
    }
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> Result<(), CliError> {
    let scenario = ScenarioFile::load(&args.scenario)?;
    let plan = scenario.plan_inputs()?;
    if plan.candidates.is_empty() {
        println!("no candidate placements in {}", args.scenario.display());
        return Ok(());
    }
    let mut rows = Vec::new();
    for c in &plan.candidates {
        let score = placement_score(&c.pair, &plan.body_point, &plan.motion)?;
        let zone = zone_index(&c.pair, &plan.body_point);
        let eff = effective_displacement(&c.pair, &plan.body_point, &plan.motion)?;
        rows.push((c.label.clone(), score, zone, eff, zone_parity_factor(zone)));
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));

    match args.format {
        OutputFormat::Text => {
            println!(
                "{:<24} {:>12} {:>10} {:>14} {:>8}",
                "candidate", "score", "zone", "eff_disp_m", "parity"
            );
            for (label, score, zone, eff, parity) in &rows {
                println!("{label:<24} {score:>12.6e} {zone:>10.2} {eff:>14.6e} {parity:>8.3}");
            }
        }
        OutputFormat::Csv => {
            println!("candidate,score,zone_index,effective_displacement_m,parity_factor");
            for (label, score, zone, eff, parity) in &rows {
                println!("{label},{score},{zone},{eff},{parity}");
            }
        }
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let manifest = EvalManifest::load(&args.manifest)?;
    // Windowing needs a sample rate before any trace is open; read the first
    // entry's header for it.
    let first = read_trace(&manifest.entries[0].trace)?;
    let config = args.config.resolve(first.sample_rate)?;
    drop(first);
    let report = csi_vitals::run_manifest(&manifest, &config)?;

    match args.format {
        OutputFormat::Text => print!("{}", report.to_text()),
        OutputFormat::Csv => print!("{}", report.to_csv()),
    }
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_csv())?;
        eprintln!("per-window report written to {}", out.display());
    }
    Ok(())
}
