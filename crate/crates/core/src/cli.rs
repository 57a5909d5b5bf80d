//! Command-line front end: `track`, `synth`, `eval`, `bench`, `count-states`.
//!
//! Everything here runs in-process and returns the text it would print, so the
//! binary only forwards arguments and writes the result.
//!
//! Numeric parameters resolve as flag, then `--config` TOML file, then
//! built-in default.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::{bench_tracker, f_measure, BenchReport, ScoreReport, DEFAULT_TOLERANCE};
use crate::pointer::{count_states, SpaceKind, DEFAULT_P_SWITCH};
use crate::signal::{
    annotations_to_text, beat_times, downbeat_times, parse_activations, parse_annotations, synth_stream,
    ActivationStream, SynthParams,
};
use crate::space::{self, SpaceConfig};
use crate::tracker::{Engine, Tracker, TrackerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum EngineArg {
    #[value(name = "1d", alias = "one-dim")]
    #[serde(rename = "1d")]
    OneDim,
    #[value(name = "2d", alias = "baseline-2d")]
    #[serde(rename = "2d")]
    Baseline2d,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::OneDim => Engine::OneDim,
            EngineArg::Baseline2d => Engine::Baseline2d,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "jumpback", version, about = "Causal beat, downbeat, tempo and meter tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track beats and downbeats in an activation file.
    Track {
        /// Activation file.
        input: PathBuf,
        /// Where to write the annotations; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Generate a synthetic activation file with ground-truth annotations.
    Synth {
        #[arg(long, default_value_t = 120.0)]
        tempo: f64,
        #[arg(long, default_value_t = 4)]
        meter: u32,
        /// Seconds.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        pulse_amp: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long, default_value_t = 0)]
        jitter: u32,
        /// Activation output; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Ground-truth annotation output.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Score estimated annotations against a reference.
    Eval {
        #[arg(long)]
        estimated: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Matching window in seconds.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Time the trackers on activation files or synthetic streams.
    Bench {
        /// Activation files; ignored when --synthetic is set.
        inputs: Vec<PathBuf>,
        /// Number of synthetic streams to generate instead of reading files.
        #[arg(long)]
        synthetic: Option<usize>,
        /// Length of each synthetic stream in seconds.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        /// Run both engines and report the ratios.
        #[arg(long)]
        compare: bool,
        /// Leave out wall-clock figures so the output is reproducible.
        #[arg(long)]
        counts_only: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Print the state counts of every state-space construction.
    CountStates {
        #[command(flatten)]
        model: ModelArgs,
    },
}

/// Model flags shared by every subcommand. `None` means "not given".
#[derive(Debug, Default, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub tempo_min: Option<f64>,
    #[arg(long)]
    pub tempo_max: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub bar_min: Option<usize>,
    #[arg(long)]
    pub bar_max: Option<usize>,
    /// Downbeat gate; defaults to the beat threshold.
    #[arg(long)]
    pub bar_threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML file with any of the keys above (snake_case).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Values accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    delta: Option<f64>,
    tempo_min: Option<f64>,
    tempo_max: Option<f64>,
    epsilon: Option<f64>,
    threshold: Option<f64>,
    lambda: Option<f64>,
    bar_min: Option<usize>,
    bar_max: Option<usize>,
    bar_threshold: Option<f64>,
    engine: Option<EngineArg>,
    seed: Option<u64>,
    format: Option<Format>,
    p_switch: Option<f64>,
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CliConfig {
    pub tracker: TrackerConfig,
    pub format: Format,
}

impl CliConfig {
    pub fn resolve(args: &ModelArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::param(format!("config file {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
            flag.or(file).unwrap_or(default)
        }

        let beat = SpaceConfig {
            delta: pick(args.delta, file.delta, space::DEFAULT_DELTA),
            tempo_min: pick(args.tempo_min, file.tempo_min, space::DEFAULT_TEMPO_MIN),
            tempo_max: pick(args.tempo_max, file.tempo_max, space::DEFAULT_TEMPO_MAX),
            epsilon: pick(args.epsilon, file.epsilon, space::DEFAULT_EPSILON),
            threshold: pick(args.threshold, file.threshold, space::DEFAULT_THRESHOLD),
            lambda: pick(args.lambda, file.lambda, space::DEFAULT_LAMBDA),
            level: space::Level::Beat,
        };
        let tracker = TrackerConfig {
            beat,
            bar_min: pick(args.bar_min, file.bar_min, space::DEFAULT_BAR_MIN),
            bar_max: pick(args.bar_max, file.bar_max, space::DEFAULT_BAR_MAX),
            bar_threshold: pick(args.bar_threshold, file.bar_threshold, beat.threshold),
            engine: pick(args.engine, file.engine, EngineArg::OneDim).into(),
            seed: args.seed.or(file.seed),
            p_switch: file.p_switch.unwrap_or(DEFAULT_P_SWITCH),
        };
        tracker.validate()?;
        Ok(CliConfig {
            tracker,
            format: pick(args.format, file.format, Format::Text),
        })
    }
}

/// What an invocation printed and how it ended.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) => EXIT_USAGE,
        Error::Degenerate(_) => EXIT_NUMERIC,
        Error::Sequencing { .. } | Error::Parse { .. } | Error::Format(_) | Error::Io(_) => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(&cli.command) {
        Ok(stdout) => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: exit_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Track { input, out, model } => cmd_track(&CliConfig::resolve(model)?, input, out.as_deref()),
        Command::Synth {
            tempo,
            meter,
            duration,
            pulse_amp,
            noise_std,
            jitter,
            out,
            annotations,
            model,
        } => {
            let config = CliConfig::resolve(model)?;
            let params = SynthParams {
                tempo: *tempo,
                meter: *meter,
                delta: config.tracker.beat.delta,
                duration: *duration,
                pulse_amp: *pulse_amp,
                noise_std: *noise_std,
                jitter_frames: *jitter,
                seed: config.tracker.seed.unwrap_or(0),
            };
            cmd_synth(&params, out.as_deref(), annotations.as_deref())
        }
        Command::Eval {
            estimated,
            reference,
            tolerance,
            model,
        } => cmd_eval(&CliConfig::resolve(model)?, estimated, reference, *tolerance),
        Command::Bench {
            inputs,
            synthetic,
            duration,
            compare,
            counts_only,
            model,
        } => {
            let config = CliConfig::resolve(model)?;
            let streams = match synthetic {
                Some(n) => synthetic_streams(&config, *n, *duration)?,
                None => inputs.iter().map(parse_activations).collect::<Result<Vec<_>>>()?,
            };
            cmd_bench(&config, &streams, *compare, !counts_only)
        }
        Command::CountStates { model } => cmd_count_states(&CliConfig::resolve(model)?),
    }
}

/// Runs the tracker over an activation file. Annotations go to `out` (or the
/// returned text); a summary line is always returned.
pub fn cmd_track(config: &CliConfig, input: &Path, out: Option<&Path>) -> Result<String> {
    let stream = parse_activations(input)?;
    let mut tracker = Tracker::new(config.tracker)?;
    let summary = tracker.process_stream(&stream)?;

    let body = match config.format {
        Format::Text => annotations_to_text(&summary.annotations()),
        Format::Csv => {
            let mut s = String::from("time,kind,bar_position,tempo,meter,confidence,warmup\n");
            for e in &summary.events {
                let _ = writeln!(
                    s,
                    "{:.6},{},{},{:.3},{},{:.6},{}",
                    e.time,
                    if e.is_downbeat() { "downbeat" } else { "beat" },
                    e.bar_position,
                    e.tempo,
                    e.meter,
                    e.beat_confidence,
                    e.warmup
                );
            }
            s
        }
    };
    let summary_line = format!(
        "tempo={:.3} meter={} frames={} beats={} downbeats={} engine={}",
        summary.tempo,
        summary.meter,
        summary.frames,
        summary.events.len(),
        summary.downbeat_times().len(),
        config.tracker.engine.name()
    );
    match out {
        Some(path) => {
            fs::write(path, body)?;
            Ok(format!("{summary_line}\n"))
        }
        None => Ok(format!("{body}# {summary_line}\n")),
    }
}

pub fn cmd_synth(params: &SynthParams, out: Option<&Path>, annotations: Option<&Path>) -> Result<String> {
    let (stream, truth) = synth_stream(params)?;
    if let Some(path) = annotations {
        fs::write(path, annotations_to_text(&truth))?;
    }
    match out {
        Some(path) => {
            stream.save(path)?;
            Ok(format!(
                "frames={} beats={} downbeats={}\n",
                stream.len(),
                truth.len(),
                truth.iter().filter(|a| a.is_downbeat()).count()
            ))
        }
        None => Ok(stream.to_text()),
    }
}

pub fn cmd_eval(config: &CliConfig, estimated: &Path, reference: &Path, tolerance: f64) -> Result<String> {
    let est = parse_annotations(estimated)?;
    let reference = parse_annotations(reference)?;
    let beats = f_measure(&beat_times(&est), &beat_times(&reference), tolerance)?;
    let downbeats = f_measure(&downbeat_times(&est), &downbeat_times(&reference), tolerance)?;
    Ok(match config.format {
        Format::Text => beats.to_text("beats") + &downbeats.to_text("downbeats"),
        Format::Csv => format!(
            "{}\n{}\n{}\n",
            ScoreReport::CSV_HEADER,
            beats.to_csv_row("beats"),
            downbeats.to_csv_row("downbeats")
        ),
    })
}

fn synthetic_streams(config: &CliConfig, n: usize, duration: f64) -> Result<Vec<ActivationStream>> {
    const TEMPI: [f64; 4] = [120.0, 90.0, 150.0, 70.0];
    let base = config.tracker.seed.unwrap_or(0);
    (0..n)
        .map(|i| {
            let params = SynthParams {
                tempo: TEMPI[i % TEMPI.len()],
                meter: 3 + (i % 2) as u32,
                delta: config.tracker.beat.delta,
                duration,
                pulse_amp: 0.9,
                noise_std: 0.05,
                jitter_frames: 1,
                seed: base.wrapping_add(i as u64),
            };
            synth_stream(&params).map(|(s, _)| s)
        })
        .collect()
}

pub fn cmd_bench(config: &CliConfig, streams: &[ActivationStream], compare: bool, with_timing: bool) -> Result<String> {
    let render = |r: &BenchReport| match config.format {
        Format::Text => r.to_text(with_timing),
        Format::Csv => r.to_csv(with_timing),
    };
    if !compare {
        let report = bench_tracker(streams, config.tracker.engine, &config.tracker)?;
        return Ok(render(&report));
    }
    let one = bench_tracker(streams, Engine::OneDim, &config.tracker)?;
    let two = bench_tracker(streams, Engine::Baseline2d, &config.tracker)?;
    let mut out = render(&one);
    out.push_str(&render(&two));
    if config.format == Format::Text {
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let _ = writeln!(
            out,
            "touched_ratio_1d_over_2d={:.6}",
            ratio(one.touched_per_frame(), two.touched_per_frame())
        );
        let _ = writeln!(
            out,
            "multiply_add_ratio_1d_over_2d={:.6}",
            ratio(one.multiply_adds_per_frame(), two.multiply_adds_per_frame())
        );
        if with_timing {
            let _ = writeln!(out, "speedup_2d_over_1d={:.3}", ratio(two.total_seconds(), one.total_seconds()));
        }
    }
    Ok(out)
}

pub fn cmd_count_states(config: &CliConfig) -> Result<String> {
    let t = &config.tracker;
    let mut out = String::new();
    if config.format == Format::Csv {
        out.push_str("kind,states\n");
    }
    for kind in SpaceKind::ALL {
        let n = count_states(kind, &t.beat, t.bar_min, t.bar_max)?;
        match config.format {
            Format::Text => {
                let _ = writeln!(out, "{}={n}", kind.name());
            }
            Format::Csv => {
                let _ = writeln!(out, "{},{n}", kind.name());
            }
        }
    }
    Ok(out)
}
