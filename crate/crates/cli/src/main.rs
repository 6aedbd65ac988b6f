use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use radex::extractor::Preset;
use radex::synth::{SensorPreset, TrajectoryShape};

mod commands;

/// Radar point-cloud extraction, odometry and evaluation.
#[derive(Parser, Debug)]
#[command(name = "radex", version, about)]
struct Cli {
    /// Worker threads; defaults to the machine's parallelism. Use 1 for
    /// comparable runtime columns.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic sequence: scans, labels, ground truth and manifest.
    Synth(SynthArgs),
    /// Extract point clouds from one scan or every scan of a dataset.
    Extract(ExtractArgs),
    /// Run extraction plus ICP odometry over a sequence.
    Odom(OdomArgs),
    /// Score an estimated trajectory against ground truth.
    EvalOdom(EvalOdomArgs),
    /// Score detections against the labels of a synthetic dataset.
    EvalDetect(EvalDetectArgs),
    /// Coarse-to-fine parameter sweep on training sequences.
    Sweep(SweepArgs),
    /// Compare extractor configs over a dataset, one table row each.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Sensor preset: F1 or F2.
    #[arg(long, value_parser = clap::value_parser!(SensorPreset))]
    preset: SensorPreset,
    /// line, figure8, arc or arc:<curvature>.
    #[arg(long, default_value = "figure8", value_parser = clap::value_parser!(TrajectoryShape))]
    shape: TrajectoryShape,
    /// Travelled distance in meters.
    #[arg(long, default_value_t = 1000.0)]
    length: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    landmarks: usize,
    /// Side of the square world in meters; defaults to the trajectory's
    /// bounding box plus a margin.
    #[arg(long)]
    world_extent: Option<f64>,
    /// Override the preset's maximum range, meters.
    #[arg(long)]
    max_range: Option<f64>,
    /// Azimuth beam width as a multiple of the azimuth spacing.
    #[arg(long)]
    beam: Option<f64>,
    /// Platform speed, m/s.
    #[arg(long, default_value_t = radex::synth::DEFAULT_SPEED)]
    speed: f64,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// A single scan file.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    scan: Option<PathBuf>,
    /// A sequence or a directory of sequences.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Inline config (`"ca T=35"`) or a TOML/JSON config file.
    #[arg(long)]
    extractor: String,
    /// Output CSV for --scan, output directory for --dataset.
    #[arg(long)]
    out: PathBuf,
    /// Print extraction time per scan.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct OdomArgs {
    /// Sequence directory.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    extractor: String,
    /// ICP settings (TOML/JSON); unspecified keys keep their defaults.
    #[arg(long)]
    icp: Option<PathBuf>,
    /// Directory for trajectory.csv and stats.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalOdomArgs {
    /// Ground-truth trajectory CSV, or a sequence directory holding gt.csv.
    #[arg(long)]
    gt: PathBuf,
    /// Estimated trajectory CSV.
    #[arg(long)]
    est: PathBuf,
    #[command(flatten)]
    kitti: KittiArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KittiArgs {
    /// Use every n-th frame as a segment start.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Segment lengths in meters.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct EvalDetectArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    extractor: String,
    /// Bins of slack between a point and a labelled bin.
    #[arg(long, default_value_t = radex::metrics::DEFAULT_DILATION)]
    dilation: usize,
    /// Score every n-th scan.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep spec (TOML/JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    icp: Option<PathBuf>,
    /// Directory for sweep.csv, sweep.json, incumbent.toml and test results.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Shipped parameter set used when no --extractor is given.
    #[arg(long, default_value = "f1-defaults", value_parser = clap::value_parser!(Preset))]
    preset: Preset,
    /// Configs to compare (repeatable); replaces the preset list.
    #[arg(long)]
    extractor: Vec<String>,
    /// Sequences to include, comma separated; defaults to all.
    #[arg(long, value_delimiter = ',')]
    sequences: Option<Vec<String>>,
    #[arg(long)]
    icp: Option<PathBuf>,
    #[command(flatten)]
    kitti: KittiArgs,
    /// Directory for bench.csv, bench_runtime.csv, bench.txt and bench.json.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Extract(a) => commands::extract(a),
        Command::Odom(a) => commands::odom(a),
        Command::EvalOdom(a) => commands::eval_odom(a),
        Command::EvalDetect(a) => commands::eval_detect(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Bad flags or configs are usage errors (2); anything else is a runtime
/// failure (1).
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<radex::Error>() {
        Some(radex::Error::InvalidParameter(_) | radex::Error::Parse(_)) => 2,
        _ => 1,
    }
}
