//! `geoconsist` command-line tool.
//!
//! Frames are read from directories of still images. Extract them from a
//! video first, for example `ffmpeg -i clip.mp4 frames/%05d.png`.
//!
//! Exit codes: 0 success, 1 I/O or decode error, 2 too few frames for the
//! interval, 3 no valid frame pair, 64 usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoconsist::imageio::DEFAULT_PATTERN;
use geoconsist::metrics::{PipelineParams, DEFAULT_STABILITY_INTERVALS};
use geoconsist::rng::DEFAULT_SEED;
use geoconsist::synth::Preset;
use geoconsist::{MatchParams, RansacParams, SiftParams};

pub const EXIT_IO: u8 = 1;
pub const EXIT_INSUFFICIENT_FRAMES: u8 = 2;
pub const EXIT_ALL_PAIRS_INVALID: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "geoconsist",
    version,
    about = "Geometric-consistency metrics for frame sequences"
)]
struct Cli {
    /// Worker threads (default: one per core). Never changes the results.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// More logging on standard error (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one frame sequence at a fixed sampling interval.
    Score(ScoreArgs),
    /// Keep ratio against frame interval for one or more sequences, as SVG and JSON.
    Stability(StabilityArgs),
    /// Draw the matches of one frame pair, inliers green and rejects red.
    Viz(VizArgs),
    /// Render a synthetic rigid scene to PNG frames plus a ledger of exact projections.
    Synth(SynthArgs),
    /// Score several sequences into one table.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Pipeline {
    /// Glob for frame files inside each directory.
    #[arg(long, default_value = DEFAULT_PATTERN)]
    pattern: String,

    /// RANSAC inlier threshold in pixels.
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    ransac_threshold: f64,

    /// Lowe ratio for the nearest/second-nearest test, in (0, 1].
    #[arg(long, default_value_t = 0.75, value_parser = unit_ratio)]
    ratio: f64,

    /// Keep matches that are not mutual nearest neighbours.
    #[arg(long)]
    no_cross_check: bool,

    /// Master seed for RANSAC sampling.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// SIFT scales per octave.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u16).range(1..))]
    sift_layers: u16,

    /// SIFT base blur.
    #[arg(long, default_value_t = 1.6, value_parser = positive)]
    sift_sigma: f64,

    /// SIFT DoG contrast threshold (divided by the layer count).
    #[arg(long, default_value_t = 0.04, value_parser = positive)]
    sift_contrast: f64,

    /// SIFT principal-curvature ratio limit.
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    sift_edge: f64,

    /// Skip the initial 2x upsampling.
    #[arg(long)]
    sift_no_upsample: bool,
}

impl Pipeline {
    fn params(&self) -> PipelineParams {
        PipelineParams {
            sift: SiftParams {
                octave_layers: self.sift_layers as usize,
                sigma: self.sift_sigma,
                contrast_threshold: self.sift_contrast,
                edge_threshold: self.sift_edge,
                upsample: !self.sift_no_upsample,
                ..SiftParams::default()
            },
            matching: MatchParams {
                ratio: self.ratio,
                cross_check: !self.no_cross_check,
            },
            ransac: RansacParams {
                threshold: self.ransac_threshold,
                seed: self.seed,
                ..RansacParams::default()
            },
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Directory of extracted frames.
    #[arg(long)]
    frames_dir: PathBuf,

    /// Method name for the report (default: empty).
    #[arg(long, default_value = "")]
    label: String,

    /// Video name for the report (default: the directory name).
    #[arg(long)]
    video: Option<String>,

    /// Frames between the two members of each pair.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    interval: u32,

    /// Report file (default: standard output).
    #[arg(long, short)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(flatten)]
    pipeline: Pipeline,
}

#[derive(Debug, Args)]
struct StabilityArgs {
    /// Directory of extracted frames; repeat for several curves.
    #[arg(long, required = true)]
    frames_dir: Vec<PathBuf>,

    /// Curve label, one per --frames-dir (default: the directory name).
    #[arg(long)]
    label: Vec<String>,

    /// Comma-separated frame intervals.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_STABILITY_INTERVALS.to_vec(),
          value_parser = interval)]
    intervals: Vec<usize>,

    /// SVG path; one JSON per curve is written beside it.
    #[arg(long, short, default_value = "stability.svg")]
    output: PathBuf,

    #[command(flatten)]
    pipeline: Pipeline,
}

#[derive(Debug, Args)]
struct VizArgs {
    #[arg(long)]
    frames_dir: PathBuf,

    /// Frame indices `a,b` with a < b, counted in sorted file order.
    #[arg(long, value_parser = frame_pair)]
    pair: (usize, usize),

    /// PNG path.
    #[arg(long, short, default_value = "matches.png")]
    output: PathBuf,

    #[command(flatten)]
    pipeline: Pipeline,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_parser = preset, default_value = "orbit")]
    preset: Preset,

    /// Number of frames.
    #[arg(long, default_value_t = 150, value_parser = clap::value_parser!(u32).range(1..))]
    frames: u32,

    /// Std. dev. of the smooth per-frame warp, pixels (0 keeps the scene rigid).
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    jitter: f64,

    /// Std. dev. of independent per-pixel noise on [0, 1] luminance.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    noise: f64,

    #[arg(long, default_value_t = 320, value_parser = clap::value_parser!(u32).range(16..))]
    width: u32,

    #[arg(long, default_value_t = 240, value_parser = clap::value_parser!(u32).range(16..))]
    height: u32,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output directory, created if missing.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Directory of extracted frames; repeat once per method.
    #[arg(long, required = true)]
    frames_dir: Vec<PathBuf>,

    /// Method name, one per --frames-dir (default: the directory name).
    #[arg(long)]
    label: Vec<String>,

    /// Video name shared by every row (default: each directory name).
    #[arg(long)]
    video: Option<String>,

    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    interval: u32,

    #[arg(long, short)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(flatten)]
    pipeline: Pipeline,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {s}"))
    }
}

fn unit_ratio(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must be in (0, 1], got {s}"))
    }
}

fn interval(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("interval must be an integer >= 1, got `{s}`")),
    }
}

fn frame_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two indices `a,b`")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if b <= a {
        return Err(format!("need a < b (interval >= 1), got {a},{b}"));
    }
    Ok((a, b))
}

fn preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Self::new(EXIT_USAGE, anyhow::anyhow!("{msg}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Score(a) => commands::score(a),
        Command::Stability(a) => commands::stability(a),
        Command::Viz(a) => commands::viz(a),
        Command::Synth(a) => commands::synth(a),
        Command::Compare(a) => commands::compare(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
