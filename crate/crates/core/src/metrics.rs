//! Odometry error, detection quality and runtime accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::odometry::FrameStats;
use crate::pose::{wrap_angle, Trajectory};
use crate::scan::PointCloud;
use crate::synth::DetectionLabels;

pub const KITTI_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KittiOptions {
    pub lengths: Vec<f64>,
    /// Use every `stride`-th frame as a segment start.
    pub stride: usize,
}

impl Default for KittiOptions {
    fn default() -> Self {
        KittiOptions {
            lengths: KITTI_LENGTHS.to_vec(),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthError {
    pub length_m: f64,
    pub samples: usize,
    pub ate_percent: f64,
    pub are_deg_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdomErrorReport {
    /// Mean translational error over all (start, length) samples, percent.
    pub ate_percent: f64,
    /// Mean rotational error, deg/m.
    pub are_deg_per_m: f64,
    /// The same in 10^-3 deg/m.
    pub are_mdeg_per_m: f64,
    pub samples: usize,
    pub per_length: Vec<LengthError>,
    /// True when the path was too short for even the shortest segment; the
    /// error fields are then zero and meaningless.
    pub empty: bool,
}

/// Segment-based relative errors. For each start `i` and length `L`, `j` is
/// the first frame whose ground-truth path distance from `i` reaches `L`.
///
/// ```
/// use radex::metrics::kitti_errors;
/// use radex::synth::{make_trajectory, TrajectoryShape};
/// let gt = make_trajectory(TrajectoryShape::Line, 300.0, 4.0).unwrap();
/// let r = kitti_errors(&gt, &gt).unwrap();
/// assert_eq!((r.ate_percent, r.are_deg_per_m), (0.0, 0.0));
/// ```
pub fn kitti_errors(gt: &Trajectory, est: &Trajectory) -> Result<OdomErrorReport> {
    kitti_errors_with(gt, est, &KittiOptions::default())
}

pub fn kitti_errors_with(gt: &Trajectory, est: &Trajectory, opts: &KittiOptions) -> Result<OdomErrorReport> {
    if gt.len() != est.len() {
        return Err(Error::Dimension(format!(
            "ground truth has {} poses, estimate {}",
            gt.len(),
            est.len()
        )));
    }
    for (i, (a, b)) in gt.timestamps().zip(est.timestamps()).enumerate() {
        if (a - b).abs() > 1e-6 * a.abs().max(1.0) {
            return Err(Error::Dimension(format!("timestamp mismatch at frame {i}: {a} vs {b}")));
        }
    }
    if opts.stride == 0 || opts.lengths.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("stride must be >= 1 and lengths positive".into()));
    }
    let dist = gt.path_distances();
    let gt_poses: Vec<_> = gt.poses().collect();
    let est_poses: Vec<_> = est.poses().collect();

    let samples: Vec<(usize, f64, f64)> = (0..gt.len())
        .step_by(opts.stride)
        .collect::<Vec<_>>()
        .par_iter()
        .flat_map_iter(|&i| {
            let dist = &dist;
            let (gt_poses, est_poses) = (&gt_poses, &est_poses);
            opts.lengths.iter().enumerate().filter_map(move |(k, &len)| {
                let target = dist[i] + len;
                let j = i + dist[i..].partition_point(|&d| d < target);
                if j >= dist.len() {
                    return None;
                }
                let gt_rel = gt_poses[i].between(&gt_poses[j]);
                let est_rel = est_poses[i].between(&est_poses[j]);
                // gt_rel^-1 * est_rel, written out so identical inputs give exact zeros.
                let (s, c) = gt_rel.theta.sin_cos();
                let (dx, dy) = (est_rel.x - gt_rel.x, est_rel.y - gt_rel.y);
                let t = (c * dx + s * dy).hypot(-s * dx + c * dy);
                let r = wrap_angle(est_rel.theta - gt_rel.theta).abs();
                Some((k, t / len * 100.0, r.to_degrees() / len))
            })
        })
        .collect();

    let per_length: Vec<LengthError> = opts
        .lengths
        .iter()
        .enumerate()
        .map(|(k, &len)| {
            let (n, t, r) = samples
                .iter()
                .filter(|s| s.0 == k)
                .fold((0usize, 0.0, 0.0), |(n, t, r), s| (n + 1, t + s.1, r + s.2));
            LengthError {
                length_m: len,
                samples: n,
                ate_percent: if n > 0 { t / n as f64 } else { 0.0 },
                are_deg_per_m: if n > 0 { r / n as f64 } else { 0.0 },
            }
        })
        .collect();
    let n = samples.len();
    let (ate, are) = if n == 0 {
        (0.0, 0.0)
    } else {
        let t: f64 = samples.iter().map(|s| s.1).sum();
        let r: f64 = samples.iter().map(|s| s.2).sum();
        (t / n as f64, r / n as f64)
    };
    Ok(OdomErrorReport {
        ate_percent: ate,
        are_deg_per_m: are,
        are_mdeg_per_m: are * 1e3,
        samples: n,
        per_length,
        empty: n == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub pd: f64,
    pub pfa: f64,
    /// True bins with a point within the dilation distance.
    pub true_positives: usize,
    pub false_negatives: usize,
    /// Distinct point bins farther than the dilation from every true bin.
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl DetectionReport {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_negatives + self.false_positives + self.true_negatives
    }

    /// Pools counts from several scans and recomputes the rates.
    pub fn merge(reports: &[DetectionReport]) -> DetectionReport {
        let sum = |f: fn(&DetectionReport) -> usize| reports.iter().map(f).sum::<usize>();
        Self::from_counts(
            sum(|r| r.true_positives),
            sum(|r| r.false_negatives),
            sum(|r| r.false_positives),
            sum(|r| r.true_negatives),
        )
    }

    fn from_counts(tp: usize, fn_: usize, fp: usize, tn: usize) -> DetectionReport {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        DetectionReport {
            pd: ratio(tp, tp + fn_),
            pfa: ratio(fp, fp + tn),
            true_positives: tp,
            false_negatives: fn_,
            false_positives: fp,
            true_negatives: tn,
        }
    }
}

pub const DEFAULT_DILATION: usize = 1;

/// Scores a cloud against per-bin labels, matching along each azimuth with
/// a tolerance of `dilation` bins.
pub fn detection_metrics(cloud: &PointCloud, labels: &DetectionLabels, dilation: usize) -> Result<DetectionReport> {
    let (na, nb) = (labels.num_azimuths, labels.num_bins);
    let mut hits: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); na];
    for p in &cloud.points {
        if p.azimuth_idx >= na || p.range_bin >= nb {
            return Err(Error::OutOfRange(format!(
                "point at ({}, {}) outside {na}x{nb} labels",
                p.azimuth_idx, p.range_bin
            )));
        }
        hits[p.azimuth_idx].insert(p.range_bin);
    }
    let (mut tp, mut fn_, mut fp) = (0, 0, 0);
    for (a, row_hits) in hits.iter().enumerate() {
        let row = labels.row(a);
        let window = |b: usize| b.saturating_sub(dilation)..=(b + dilation).min(nb - 1);
        for (b, &on) in row.iter().enumerate() {
            if on {
                if row_hits.range(window(b)).next().is_some() {
                    tp += 1;
                } else {
                    fn_ += 1;
                }
            }
        }
        fp += row_hits.iter().filter(|&&b| !window(b).any(|c| row[c])).count();
    }
    let total_false = labels.bits.len() - (tp + fn_);
    Ok(DetectionReport::from_counts(tp, fn_, fp, total_false - fp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub frames: usize,
    pub mean_extract_ms: f64,
    pub mean_points: f64,
}

pub fn runtime_report(stats: &[FrameStats]) -> Result<RuntimeReport> {
    if stats.is_empty() {
        return Err(Error::Precondition("runtime report needs at least one frame".into()));
    }
    let n = stats.len() as f64;
    Ok(RuntimeReport {
        frames: stats.len(),
        mean_extract_ms: stats.iter().map(|s| s.extract_ms).sum::<f64>() / n,
        mean_points: stats.iter().map(|s| s.n_points as f64).sum::<f64>() / n,
    })
}
