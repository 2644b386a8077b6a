//! Command-line front end: argument parsing, dispatch and exit codes.
//!
//! Everything runs through [`run`], which takes the argument list and an
//! output sink so commands can be exercised in-process.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pointpaint::{MatchPolicy, OovPolicy, OverlapStrategy, Snapping};

mod commands;
mod report;

pub use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pointpaint", version, about = "Paint lidar points with image segmentation scores")]
pub struct Cli {
    /// Output style for the summary on stdout.
    #[arg(long, value_enum, default_value_t = Emit::Text, global = true)]
    pub emit: Emit,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Text,
    Kv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append per-camera segmentation scores to every lidar point.
    Paint(PaintArgs),
    /// Relabel bike points near a rider as cyclist, the rest as background.
    Remap(RemapArgs),
    /// Simulate the sensor pipeline and report latency.
    Simulate(SimulateArgs),
    /// Time the painting hot path on a synthetic scene.
    Bench(BenchArgs),
    /// Write a synthetic fixture directory.
    Synth(SynthArgs),
    /// Check a score map, point cloud or rig file.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OverlapArg {
    Random,
    Entropy,
    Margin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OovArg {
    Drop,
    Background,
    Zeros,
}

impl From<OovArg> for OovPolicy {
    fn from(a: OovArg) -> Self {
        match a {
            OovArg::Drop => OovPolicy::Drop,
            OovArg::Background => OovPolicy::Background,
            OovArg::Zeros => OovPolicy::Zeros,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SnapArg {
    Floor,
    #[value(alias = "round_half_up")]
    Round,
}

impl From<SnapArg> for Snapping {
    fn from(a: SnapArg) -> Self {
        match a {
            SnapArg::Floor => Snapping::Floor,
            SnapArg::Round => Snapping::RoundHalfUp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Concurrent,
    Consecutive,
}

impl From<PolicyArg> for MatchPolicy {
    fn from(a: PolicyArg) -> Self {
        match a {
            PolicyArg::Concurrent => MatchPolicy::Concurrent,
            PolicyArg::Consecutive => MatchPolicy::Consecutive,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct PaintOptions {
    #[arg(long, value_enum, default_value_t = OverlapArg::Random)]
    pub overlap: OverlapArg,
    /// Seed for random overlap resolution.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Out-of-view handling; drop for one camera, background otherwise.
    #[arg(long, value_enum)]
    pub oov: Option<OovArg>,
    #[arg(long, value_enum, default_value_t = SnapArg::Floor)]
    pub snap: SnapArg,
}

impl PaintOptions {
    pub fn overlap_strategy(&self) -> OverlapStrategy {
        match self.overlap {
            OverlapArg::Random => OverlapStrategy::Random { seed: self.seed },
            OverlapArg::Entropy => OverlapStrategy::Entropy,
            OverlapArg::Margin => OverlapStrategy::Margin,
        }
    }

    pub fn config(&self, num_cameras: usize) -> pointpaint::PaintConfig {
        pointpaint::PaintConfig {
            overlap: self.overlap_strategy(),
            oov: self.oov.map_or_else(|| OovPolicy::default_for(num_cameras), Into::into),
            snapping: self.snap.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct PaintArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Columns per input point; defaults to the rig's `dims`.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub rig: PathBuf,
    #[command(flatten)]
    pub options: PaintOptions,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; the global pool when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RemapArgs {
    /// Painted cloud with `dims + classes` columns per point.
    #[arg(long)]
    pub cloud: PathBuf,
    /// Columns per point before painting.
    #[arg(long)]
    pub dims: Option<usize>,
    /// Class names in score order, comma or space separated.
    #[arg(long, required_unless_present = "rig", conflicts_with = "rig")]
    pub classes: Option<String>,
    /// Take class names and dims from a rig file instead.
    #[arg(long)]
    pub rig: Option<PathBuf>,
    /// Class relabelled by proximity.
    #[arg(long)]
    pub source: String,
    /// Class whose points define proximity.
    #[arg(long)]
    pub anchor: String,
    #[arg(long, default_value = "cyclist")]
    pub target: String,
    #[arg(long, default_value = "background")]
    pub fallback: String,
    /// Neighbour radius in meters, inclusive.
    #[arg(long, default_value_t = pointpaint::RemapRule::DEFAULT_RADIUS)]
    pub radius: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = PolicyArg::Consecutive)]
    pub policy: PolicyArg,
    /// Segmentation latency (ms).
    #[arg(long, default_value_t = 50.0)]
    pub t_seg: f64,
    /// Projection latency (ms).
    #[arg(long, default_value_t = 0.15)]
    pub t_proj: f64,
    /// Extra encoder latency from the wider input (ms).
    #[arg(long, default_value_t = 0.6)]
    pub t_enc_delta: f64,
    /// Unpainted detector latency (ms).
    #[arg(long, default_value_t = 16.0)]
    pub t_det: f64,
    /// Lidar sweep period (ms).
    #[arg(long, default_value_t = 50.0)]
    pub lidar_period: f64,
    /// Camera frame period (ms).
    #[arg(long, default_value_t = 1000.0 / 12.0)]
    pub camera_period: f64,
    /// Simulated time (s).
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
}

/// `--seed` drives both the synthetic scene and random overlap resolution.
#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    pub points: usize,
    #[arg(long, default_value_t = 6)]
    pub cameras: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 20)]
    pub repeat: usize,
    #[command(flatten)]
    pub options: PaintOptions,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory to write; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub points: usize,
    #[arg(long, default_value_t = 1)]
    pub cameras: usize,
    #[arg(long, default_value_t = 3)]
    pub boxes: usize,
    /// Score noise in [0, 1]; 0 gives one-hot maps.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f32,
    #[arg(long, default_value_t = 4)]
    pub dims: usize,
    /// Class names, background last.
    #[arg(long, default_value = "car,pedestrian,cyclist,background")]
    pub classes: String,
    #[arg(long, default_value_t = 96)]
    pub width: u32,
    #[arg(long, default_value_t = 64)]
    pub height: u32,
    /// Paint settings used for the expected output.
    #[arg(long, value_enum, default_value_t = OverlapArg::Random)]
    pub overlap: OverlapArg,
    #[arg(long, default_value_t = 0)]
    pub overlap_seed: u64,
    #[arg(long, value_enum)]
    pub oov: Option<OovArg>,
    #[arg(long, value_enum, default_value_t = SnapArg::Floor)]
    pub snap: SnapArg,
}

impl SynthArgs {
    pub fn paint_options(&self) -> PaintOptions {
        PaintOptions {
            overlap: self.overlap,
            seed: self.overlap_seed,
            oov: self.oov,
            snap: self.snap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Ppsm,
    Cloud,
    Rig,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub path: PathBuf,
    /// File kind; guessed from the extension and magic bytes when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<FileKind>,
    /// Columns per point, required for clouds.
    #[arg(long)]
    pub dims: Option<usize>,
}

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(pointpaint::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(pointpaint::Error::Io { .. }) => EXIT_IO,
            CliError::Core(_) => EXIT_VALIDATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pointpaint::Error> for CliError {
    fn from(e: pointpaint::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Paint(a) => commands::paint(a),
        Command::Remap(a) => commands::remap(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Bench(a) => commands::bench(a),
        Command::Synth(a) => commands::synth(a),
        Command::Validate(a) => commands::validate(a),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let text = match cli.emit {
                Emit::Text => report.text(),
                Emit::Kv => report.kv(),
            };
            let _ = out.write_all(text.as_bytes());
            if report.failed() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
