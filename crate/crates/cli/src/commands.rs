use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use radex::dataset::{Dataset, Sequence};
use radex::extractor::{self, parse_extractor_arg, preset_configs, write_extractor_config, ExtractorConfig};
use radex::io::{read_scan, read_trajectory, write_points, write_trajectory};
use radex::metrics::{kitti_errors_with, KittiOptions, KITTI_LENGTHS};
use radex::odometry::{write_frame_stats, IcpConfig};
use radex::synth::{generate_sequence, make_trajectory_with_speed, make_world, ClutterSpec};
use radex::table::{evaluate_config, render_table, write_table_csv};
use radex::tuning::{evaluate_on_test, run_sweep_on, SweepSpec};

use crate::{BenchArgs, EvalDetectArgs, EvalOdomArgs, ExtractArgs, KittiArgs, OdomArgs, SweepArgs, SynthArgs};

fn parse_extractor(arg: &str) -> Result<ExtractorConfig> {
    let cfg = parse_extractor_arg(arg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn icp(path: Option<&Path>) -> Result<IcpConfig> {
    match path {
        Some(p) => IcpConfig::from_path(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(IcpConfig::default()),
    }
}

fn usage(msg: String) -> anyhow::Error {
    radex::Error::InvalidParameter(msg).into()
}

impl KittiArgs {
    fn options(&self) -> Result<KittiOptions> {
        if self.stride == 0 {
            return Err(usage("--stride must be at least 1".into()));
        }
        let lengths = self.lengths.clone().unwrap_or_else(|| KITTI_LENGTHS.to_vec());
        if lengths.is_empty() || lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(usage("segment lengths must be positive".into()));
        }
        Ok(KittiOptions {
            lengths,
            stride: self.stride,
        })
    }
}

fn write_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut preset = a.preset;
    if let Some(r) = a.max_range {
        preset.max_range = r;
    }
    if let Some(b) = a.beam {
        preset.beam_sigma = b * std::f64::consts::TAU / preset.num_azimuths as f64;
    }
    preset.validate()?;
    let trajectory = make_trajectory_with_speed(a.shape, a.length, preset.rotation_rate, a.speed)?;
    let extent = match a.world_extent {
        Some(e) => e,
        None => default_extent(&trajectory),
    };
    let world = make_world(a.seed, extent, a.landmarks, &ClutterSpec::default())?;
    let manifest = generate_sequence(&world, &trajectory, &preset, a.seed, &a.out)?;
    println!(
        "{}: {} scans, {:.1} m, {} landmarks",
        a.out.display(),
        manifest.num_scans,
        manifest.path_length_m,
        manifest.num_landmarks
    );
    Ok(())
}

/// Twice the largest coordinate the trajectory reaches, plus 20 m.
fn default_extent(trajectory: &radex::Trajectory) -> f64 {
    let reach = trajectory.poses().map(|p| p.x.abs().max(p.y.abs())).fold(0.0, f64::max);
    2.0 * reach + 20.0
}

pub fn extract(a: ExtractArgs) -> Result<()> {
    let cfg = parse_extractor(&a.extractor)?;
    let report = |name: &str, ms: f64, n: usize| {
        if a.timing {
            println!("{name}: {ms:.3} ms, {n} points");
        }
    };
    if let Some(scan_path) = &a.scan {
        let scan = read_scan(scan_path)?;
        let start = Instant::now();
        let cloud = extractor::extract(&scan, &cfg)?;
        report(&scan_path.display().to_string(), start.elapsed().as_secs_f64() * 1e3, cloud.len());
        write_points(&cloud, &a.out)?;
        return Ok(());
    }
    let dataset = Dataset::open(a.dataset.as_ref().expect("clap requires --scan or --dataset"))?;
    for seq in &dataset.sequences {
        let dir = a.out.join(&seq.name);
        fs::create_dir_all(&dir)?;
        for i in 0..seq.len() {
            let scan = seq.scan(i)?;
            let start = Instant::now();
            let cloud = extractor::extract(&scan, &cfg)?;
            report(&format!("{}/{i:06}", seq.name), start.elapsed().as_secs_f64() * 1e3, cloud.len());
            write_points(&cloud, dir.join(format!("{i:06}.csv")))?;
        }
    }
    Ok(())
}

pub fn odom(a: OdomArgs) -> Result<()> {
    let cfg = parse_extractor(&a.extractor)?;
    let icp = icp(a.icp.as_deref())?;
    let seq = Sequence::open(&a.dataset)?;
    let result = seq.run(&cfg, &icp)?;
    fs::create_dir_all(&a.out)?;
    write_trajectory(&result.trajectory, a.out.join("trajectory.csv"))?;
    write_frame_stats(&result.stats, a.out.join("stats.csv"))?;
    println!(
        "{} frames, {} failed, {:.1} points/frame, {:.3} ms/frame extraction",
        result.stats.len(),
        result.failed_frames(),
        result.mean_points(),
        result.mean_extract_ms()
    );
    Ok(())
}

pub fn eval_odom(a: EvalOdomArgs) -> Result<()> {
    let kitti = a.kitti.options()?;
    let gt_path: PathBuf = if a.gt.is_dir() { a.gt.join("gt.csv") } else { a.gt.clone() };
    if !gt_path.is_file() {
        return Err(radex::Error::Precondition(format!("no ground truth at {}", gt_path.display())).into());
    }
    let gt = read_trajectory(&gt_path)?;
    let est = read_trajectory(&a.est)?;
    let report = kitti_errors_with(&gt, &est, &kitti)?;
    if report.empty {
        eprintln!("warning: trajectory is shorter than the shortest segment length");
    }
    write_json(&report, a.out.as_deref())
}

pub fn eval_detect(a: EvalDetectArgs) -> Result<()> {
    let cfg = parse_extractor(&a.extractor)?;
    if a.stride == 0 {
        return Err(usage("--stride must be at least 1".into()));
    }
    let dataset = Dataset::open(&a.dataset)?;
    let reports = dataset
        .sequences
        .iter()
        .map(|s| s.detection(&cfg, a.dilation, a.stride))
        .collect::<radex::Result<Vec<_>>>()?;
    write_json(&radex::metrics::DetectionReport::merge(&reports), a.out.as_deref())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let spec = SweepSpec::from_path(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let icp = icp(a.icp.as_deref())?;
    let dataset = Dataset::open(&a.dataset)?;
    let result = run_sweep_on(&spec, &dataset, &icp)?;
    fs::create_dir_all(&a.out)?;
    result.write_csv(a.out.join("sweep.csv"))?;
    write_json(&result, Some(&a.out.join("sweep.json")))?;
    let incumbent = result.incumbent_config();
    write_extractor_config(incumbent, a.out.join("incumbent.toml"))?;
    let row = result.incumbent_row();
    println!(
        "incumbent: {incumbent} (train ATE {:.3} %, ARE {:.3} mdeg/m)",
        row.ate_percent, row.are_mdeg_per_m
    );
    if !spec.test.is_empty() {
        let test = evaluate_on_test(incumbent, &spec, &dataset, &icp)?;
        write_table_csv(std::slice::from_ref(&test), true, a.out.join("test.csv"))?;
        write_json(&test, Some(&a.out.join("test.json")))?;
        println!("test: ATE {:.3} %, ARE {:.3} mdeg/m", test.ate_percent, test.are_mdeg_per_m);
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let configs = if a.extractor.is_empty() {
        preset_configs(a.preset)
    } else {
        a.extractor.iter().map(|e| parse_extractor(e)).collect::<Result<_>>()?
    };
    let kitti = a.kitti.options()?;
    let icp = icp(a.icp.as_deref())?;
    let dataset = Dataset::open(&a.dataset)?;
    let sequences = match &a.sequences {
        Some(names) => dataset.select(names)?,
        None => dataset.sequences.iter().collect(),
    };
    // Configs run one after another so each one's timing sees the same load.
    let rows = configs
        .iter()
        .map(|cfg| evaluate_config(cfg, &sequences, &icp, &kitti).with_context(|| format!("evaluating {cfg}")))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&a.out)?;
    write_table_csv(&rows, false, a.out.join("bench.csv"))?;
    write_table_csv(&rows, true, a.out.join("bench_runtime.csv"))?;
    let table = render_table(&rows)?;
    fs::write(a.out.join("bench.txt"), &table)?;
    write_json(&rows, Some(&a.out.join("bench.json")))?;
    print!("{table}");
    Ok(())
}
