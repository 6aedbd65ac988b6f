//! Point-to-point ICP odometry against a sliding submap.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::extractor::{extract, ExtractorConfig};
use crate::io::read_scan;
use crate::pose::{Pose2, StampedPose, Trajectory};
use crate::scan::{PointCloud, PolarScan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Correspondences farther apart than this are ignored, meters.
    pub max_correspondence_dist: f64,
    /// Fraction of the worst correspondences dropped each iteration.
    pub trim_fraction: f64,
    /// Stop once an update moves less than this (meters and radians).
    pub convergence_eps: f64,
    /// Number of previous clouds kept as the registration target.
    pub submap_size: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig {
            max_iterations: 50,
            max_correspondence_dist: 2.0,
            trim_fraction: 0.1,
            convergence_eps: 1e-4,
            submap_size: 3,
        }
    }
}

impl IcpConfig {
    /// Reads a partial config (missing keys take defaults): JSON when the
    /// extension is `.json`, TOML otherwise.
    pub fn from_path(path: impl AsRef<Path>) -> Result<IcpConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: IcpConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if !(self.max_correspondence_dist > 0.0 && self.max_correspondence_dist.is_finite()) {
            return bad("max_correspondence_dist must be positive");
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return bad("trim_fraction must lie in [0, 1)");
        }
        if !(self.convergence_eps > 0.0) {
            return bad("convergence_eps must be positive");
        }
        if self.submap_size == 0 {
            return bad("submap_size must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IcpStats {
    pub iterations: usize,
    pub inlier_count: usize,
    /// RMS distance of the kept correspondences after the final update.
    pub rms_residual: f64,
    /// RMS of the kept correspondences at the start of each iteration.
    pub rms_history: Vec<f64>,
}

/// Uniform grid of buckets for fixed-radius nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell: f64,
    points: Vec<[f64; 2]>,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl GridIndex {
    pub fn new(points: Vec<[f64; 2]>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(*p, cell)).or_default().push(i as u32);
        }
        GridIndex { cell, points, buckets }
    }

    fn key(p: [f64; 2], cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Closest point within `max_dist` (index, distance). Requires
    /// `max_dist <= cell`; ties go to the lower index.
    pub fn nearest(&self, p: [f64; 2], max_dist: f64) -> Option<(usize, f64)> {
        debug_assert!(max_dist <= self.cell * (1.0 + 1e-12));
        let (kx, ky) = Self::key(p, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) else {
                    continue;
                };
                for &i in ids {
                    let q = self.points[i as usize];
                    let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                    let better = match best {
                        None => true,
                        Some((j, b)) => d2 < b || (d2 == b && (i as usize) < j),
                    };
                    if better {
                        best = Some((i as usize, d2));
                    }
                }
            }
        }
        best.filter(|&(_, d2)| d2 <= max_dist * max_dist).map(|(i, d2)| (i, d2.sqrt()))
    }
}

/// The last `m` clouds in the odometry frame, oldest first.
#[derive(Debug, Clone)]
pub struct Submap {
    capacity: usize,
    clouds: VecDeque<(f64, Vec<[f64; 2]>)>,
    index: GridIndex,
}

impl Submap {
    pub fn new(capacity: usize, cell: f64) -> Self {
        Submap {
            capacity,
            clouds: VecDeque::new(),
            index: GridIndex::new(Vec::new(), cell),
        }
    }

    /// Adds a cloud already expressed in the odometry frame, evicting the
    /// oldest one when full.
    pub fn push(&mut self, timestamp: f64, points: Vec<[f64; 2]>) {
        if self.clouds.len() == self.capacity {
            self.clouds.pop_front();
        }
        self.clouds.push_back((timestamp, points));
        let all = self.clouds.iter().flat_map(|(_, p)| p.iter().copied()).collect();
        self.index = GridIndex::new(all, self.index.cell);
    }

    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.clouds.iter().map(|(t, _)| *t).collect()
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`.
pub fn solve_rigid(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Pose2 {
    assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let mean = |v: &[[f64; 2]]| {
        let s = v.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / n, s[1] / n]
    };
    let (ms, md) = (mean(src), mean(dst));
    let (mut cross, mut dot) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (sx, sy) = (s[0] - ms[0], s[1] - ms[1]);
        let (dx, dy) = (d[0] - md[0], d[1] - md[1]);
        dot += sx * dx + sy * dy;
        cross += sx * dy - sy * dx;
    }
    let theta = cross.atan2(dot);
    let (sin, cos) = theta.sin_cos();
    Pose2::new(md[0] - (cos * ms[0] - sin * ms[1]), md[1] - (sin * ms[0] + cos * ms[1]), theta)
}

/// Registers `source` (sensor frame) against the points of `target`,
/// starting from `init`.
pub fn icp_align_points(source: &[[f64; 2]], target: &GridIndex, init: Pose2, cfg: &IcpConfig) -> Result<(Pose2, IcpStats)> {
    cfg.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::Precondition("ICP needs non-empty source and target".into()));
    }
    let mut pose = init;
    let mut stats = IcpStats::default();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(source.len());
    let mut src = Vec::with_capacity(source.len());
    let mut dst = Vec::with_capacity(source.len());
    for iteration in 1..=cfg.max_iterations {
        pairs.clear();
        for (i, &p) in source.iter().enumerate() {
            if let Some((j, d)) = target.nearest(pose.transform_point(p), cfg.max_correspondence_dist) {
                pairs.push((d, i, j));
            }
        }
        if pairs.is_empty() {
            return Err(Error::NoCorrespondences { pose, iteration });
        }
        let keep = pairs.len() - (cfg.trim_fraction * pairs.len() as f64).floor() as usize;
        let keep = keep.max(1);
        if keep < pairs.len() {
            let by_dist = |a: &(f64, usize, usize), b: &(f64, usize, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            pairs.select_nth_unstable_by(keep - 1, by_dist);
            pairs.truncate(keep);
            pairs.sort_unstable_by_key(|p| p.1);
        }
        stats.rms_history.push(rms(pairs.iter().map(|p| p.0)));
        src.clear();
        dst.clear();
        for &(_, i, j) in &pairs {
            src.push(source[i]);
            dst.push(target.points()[j]);
        }
        let next = solve_rigid(&src, &dst);
        let step = pose.between(&next);
        pose = next;
        stats.iterations = iteration;
        stats.inlier_count = pairs.len();
        stats.rms_residual = rms(src.iter().zip(&dst).map(|(s, d)| {
            let q = pose.transform_point(*s);
            (q[0] - d[0]).hypot(q[1] - d[1])
        }));
        if step.translation_norm() < cfg.convergence_eps && step.theta.abs() < cfg.convergence_eps {
            break;
        }
    }
    Ok((pose, stats))
}

fn rms(d: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = d.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

pub fn icp_align(source: &PointCloud, target: &Submap, init: Pose2, cfg: &IcpConfig) -> Result<(Pose2, IcpStats)> {
    icp_align_points(&source.xy(), target.index(), init, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameFlag {
    /// Frame 0, fixed at the origin.
    Origin,
    Ok,
    /// ICP failed; the pose is the constant-velocity prediction.
    IcpFailed,
    /// The extractor returned no points; the pose is the prediction.
    EmptyCloud,
}

impl FrameFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrameFlag::Origin => "origin",
            FrameFlag::Ok => "ok",
            FrameFlag::IcpFailed => "icp_failed",
            FrameFlag::EmptyCloud => "empty_cloud",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, FrameFlag::IcpFailed | FrameFlag::EmptyCloud)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame: usize,
    pub extract_ms: f64,
    pub n_points: usize,
    pub icp_iters: usize,
    pub icp_rms: f64,
    pub flag: FrameFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdometryResult {
    pub trajectory: Trajectory,
    pub stats: Vec<FrameStats>,
}

impl OdometryResult {
    pub fn failed_frames(&self) -> usize {
        self.stats.iter().filter(|s| s.flag.is_failure()).count()
    }

    pub fn mean_points(&self) -> f64 {
        self.stats.iter().map(|s| s.n_points as f64).sum::<f64>() / self.stats.len().max(1) as f64
    }

    pub fn mean_extract_ms(&self) -> f64 {
        self.stats.iter().map(|s| s.extract_ms).sum::<f64>() / self.stats.len().max(1) as f64
    }
}

/// Frame-by-frame odometry state.
#[derive(Debug, Clone)]
pub struct Odometry {
    cfg: IcpConfig,
    submap: Submap,
    poses: Vec<StampedPose>,
    stats: Vec<FrameStats>,
}

impl Odometry {
    pub fn new(cfg: IcpConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Odometry {
            cfg,
            submap: Submap::new(cfg.submap_size, cfg.max_correspondence_dist),
            poses: Vec::new(),
            stats: Vec::new(),
        })
    }

    /// Constant-velocity guess for the next frame.
    pub fn predict(&self) -> Pose2 {
        match self.poses.as_slice() {
            [] => Pose2::IDENTITY,
            [only] => only.pose,
            [.., a, b] => b.pose.compose(&a.pose.between(&b.pose)),
        }
    }

    /// Registers one cloud and returns its pose.
    pub fn push(&mut self, cloud: &PointCloud, extract_ms: f64) -> Result<Pose2> {
        let frame = self.poses.len();
        if let Some(last) = self.poses.last() {
            if !(cloud.source_timestamp > last.timestamp) {
                return Err(Error::InvalidParameter(format!(
                    "frame {frame}: timestamp {} does not follow {}",
                    cloud.source_timestamp, last.timestamp
                )));
            }
        }
        let points = cloud.xy();
        let prediction = self.predict();
        let (pose, icp, flag) = if frame == 0 {
            (Pose2::IDENTITY, IcpStats::default(), FrameFlag::Origin)
        } else if points.is_empty() {
            (prediction, IcpStats::default(), FrameFlag::EmptyCloud)
        } else if self.submap.index().is_empty() {
            (prediction, IcpStats::default(), FrameFlag::IcpFailed)
        } else {
            match icp_align_points(&points, self.submap.index(), prediction, &self.cfg) {
                Ok((pose, stats)) => (pose, stats, FrameFlag::Ok),
                Err(Error::NoCorrespondences { .. }) => (prediction, IcpStats::default(), FrameFlag::IcpFailed),
                Err(e) => return Err(e),
            }
        };
        if !points.is_empty() {
            self.submap
                .push(cloud.source_timestamp, points.iter().map(|&p| pose.transform_point(p)).collect());
        }
        self.poses.push(StampedPose {
            timestamp: cloud.source_timestamp,
            pose,
        });
        self.stats.push(FrameStats {
            frame,
            extract_ms,
            n_points: points.len(),
            icp_iters: icp.iterations,
            icp_rms: icp.rms_residual,
            flag,
        });
        Ok(pose)
    }

    pub fn submap(&self) -> &Submap {
        &self.submap
    }

    pub fn finish(self) -> Result<OdometryResult> {
        Ok(OdometryResult {
            trajectory: Trajectory::new(self.poses)?,
            stats: self.stats,
        })
    }
}

/// Odometry over clouds that were extracted elsewhere.
pub fn run_odometry_clouds(clouds: &[PointCloud], icp: &IcpConfig) -> Result<OdometryResult> {
    if clouds.len() < 2 {
        return Err(Error::Precondition(format!("odometry needs at least 2 frames, got {}", clouds.len())));
    }
    let mut odo = Odometry::new(*icp)?;
    for c in clouds {
        odo.push(c, 0.0)?;
    }
    odo.finish()
}

/// Extracts and registers scans one at a time. Scans may be raw or dB.
pub fn run_odometry_scans<'a>(
    scans: impl IntoIterator<Item = Result<std::borrow::Cow<'a, PolarScan>>>,
    extractor: &ExtractorConfig,
    icp: &IcpConfig,
) -> Result<OdometryResult> {
    extractor.validate()?;
    let mut odo = Odometry::new(*icp)?;
    let mut n = 0;
    for scan in scans {
        let scan = scan?;
        let start = Instant::now();
        let cloud = extract(&scan, extractor)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        odo.push(&cloud, ms)?;
        n += 1;
    }
    if n < 2 {
        return Err(Error::Precondition(format!("odometry needs at least 2 frames, got {n}")));
    }
    odo.finish()
}

/// Odometry over scan files, read lazily.
pub fn run_odometry<P: AsRef<Path>>(scan_paths: &[P], extractor: &ExtractorConfig, icp: &IcpConfig) -> Result<OdometryResult> {
    if scan_paths.len() < 2 {
        return Err(Error::Precondition(format!(
            "odometry needs at least 2 frames, got {}",
            scan_paths.len()
        )));
    }
    run_odometry_scans(
        scan_paths.iter().map(|p| read_scan(p).map(std::borrow::Cow::Owned)),
        extractor,
        icp,
    )
}

pub fn write_frame_stats(stats: &[FrameStats], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame", "extract_ms", "n_points", "icp_iters", "icp_rms", "flag"])?;
    for s in stats {
        w.write_record([
            s.frame.to_string(),
            format!("{:.3}", s.extract_ms),
            s.n_points.to_string(),
            s.icp_iters.to_string(),
            crate::io::nine_digits(s.icp_rms),
            s.flag.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
