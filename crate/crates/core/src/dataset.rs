//! Sequences on disk (as written by [`generate_sequence`]) or in memory,
//! and per-sequence evaluation of an extractor.
//!
//! [`generate_sequence`]: crate::synth::generate_sequence

use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extractor::{extract, ExtractorConfig};
use crate::io::{read_mask, read_scan, read_trajectory, scan_from_bytes, scan_to_bytes};
use crate::metrics::{detection_metrics, kitti_errors_with, DetectionReport, KittiOptions, OdomErrorReport};
use crate::odometry::{run_odometry_scans, IcpConfig, OdometryResult};
use crate::pose::Trajectory;
use crate::scan::PolarScan;
use crate::synth::{mask_file_name, scan_file_name, DetectionLabels, Manifest};

#[derive(Debug, Clone)]
enum ScanSource {
    Files(Vec<PathBuf>),
    /// Scan file images; a quarter of the memory of decoded scans.
    Encoded(Arc<Vec<Vec<u8>>>),
}

#[derive(Debug, Clone)]
enum LabelSource {
    None,
    Files(Vec<PathBuf>),
    Memory(Arc<Vec<DetectionLabels>>),
}

/// One recorded drive: scans, ground-truth poses and optional labels.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub gt: Trajectory,
    pub manifest: Option<Manifest>,
    scans: ScanSource,
    labels: LabelSource,
}

impl Sequence {
    /// Opens a directory holding `manifest.json`, `gt.csv`, `scans/` and
    /// optionally `labels/`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Sequence> {
        let dir = dir.as_ref();
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let gt_path = dir.join("gt.csv");
        if !gt_path.is_file() {
            return Err(Error::Precondition(format!("{} has no ground truth", dir.display())));
        }
        let gt = read_trajectory(&gt_path)?;
        if gt.len() != manifest.num_scans {
            return Err(Error::Dimension(format!(
                "manifest lists {} scans but gt.csv has {} poses",
                manifest.num_scans,
                gt.len()
            )));
        }
        let scans: Vec<PathBuf> = (0..manifest.num_scans)
            .map(|i| dir.join("scans").join(scan_file_name(i)))
            .collect();
        if let Some(missing) = scans.iter().find(|p| !p.is_file()) {
            return Err(Error::Precondition(format!("missing scan {}", missing.display())));
        }
        let masks: Vec<PathBuf> = (0..manifest.num_scans)
            .map(|i| dir.join("labels").join(mask_file_name(i)))
            .collect();
        let labels = if masks.iter().all(|p| p.is_file()) {
            LabelSource::Files(masks)
        } else {
            LabelSource::None
        };
        let name = dir
            .canonicalize()?
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".into());
        Ok(Sequence {
            name,
            gt,
            manifest: Some(manifest),
            scans: ScanSource::Files(scans),
            labels,
        })
    }

    /// Wraps rendered scans. They are stored encoded, so dB values must lie
    /// on the half-dB lattice.
    pub fn in_memory(name: impl Into<String>, gt: Trajectory, frames: Vec<(PolarScan, DetectionLabels)>) -> Result<Sequence> {
        if frames.len() != gt.len() {
            return Err(Error::Dimension(format!("{} scans for {} poses", frames.len(), gt.len())));
        }
        let mut encoded = Vec::with_capacity(frames.len());
        let mut labels = Vec::with_capacity(frames.len());
        for (scan, l) in frames {
            encoded.push(scan_to_bytes(&scan)?);
            labels.push(l);
        }
        Ok(Sequence {
            name: name.into(),
            gt,
            manifest: None,
            scans: ScanSource::Encoded(Arc::new(encoded)),
            labels: LabelSource::Memory(Arc::new(labels)),
        })
    }

    pub fn len(&self) -> usize {
        self.gt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gt.is_empty()
    }

    pub fn has_labels(&self) -> bool {
        !matches!(self.labels, LabelSource::None)
    }

    pub fn scan(&self, i: usize) -> Result<PolarScan> {
        if i >= self.len() {
            return Err(Error::OutOfRange(format!("scan {i} of {}", self.len())));
        }
        match &self.scans {
            ScanSource::Files(paths) => read_scan(&paths[i]),
            ScanSource::Encoded(bytes) => scan_from_bytes(&bytes[i]),
        }
    }

    pub fn scans(&self) -> impl Iterator<Item = Result<PolarScan>> + '_ {
        (0..self.len()).map(|i| self.scan(i))
    }

    pub fn labels(&self, i: usize) -> Result<DetectionLabels> {
        match &self.labels {
            LabelSource::None => Err(Error::Precondition(format!("sequence '{}' has no labels", self.name))),
            LabelSource::Memory(l) => l
                .get(i)
                .cloned()
                .ok_or_else(|| Error::OutOfRange(format!("labels {i} of {}", l.len()))),
            LabelSource::Files(paths) => {
                let path = paths.get(i).ok_or_else(|| Error::OutOfRange(format!("labels {i} of {}", paths.len())))?;
                let g = *self.scan(i)?.geometry();
                Ok(DetectionLabels {
                    num_azimuths: g.num_azimuths,
                    num_bins: g.num_bins,
                    bits: read_mask(path, g.num_azimuths * g.num_bins)?,
                })
            }
        }
    }

    pub fn run(&self, extractor: &ExtractorConfig, icp: &IcpConfig) -> Result<OdometryResult> {
        run_odometry_scans(self.scans().map(|s| s.map(Cow::Owned)), extractor, icp)
    }

    /// Runs odometry and scores it against the ground truth.
    pub fn evaluate(&self, extractor: &ExtractorConfig, icp: &IcpConfig, kitti: &KittiOptions) -> Result<SequenceEval> {
        let result = self.run(extractor, icp)?;
        let errors = kitti_errors_with(&self.gt, &result.trajectory, kitti)?;
        Ok(SequenceEval {
            sequence: self.name.clone(),
            ate_percent: errors.ate_percent,
            are_mdeg_per_m: errors.are_mdeg_per_m,
            runtime_ms: result.mean_extract_ms(),
            points: result.mean_points(),
            failed_frames: result.failed_frames(),
            errors,
        })
    }

    /// Pooled detection quality of an extractor over every `stride`-th scan.
    pub fn detection(&self, extractor: &ExtractorConfig, dilation: usize, stride: usize) -> Result<DetectionReport> {
        extractor.validate()?;
        let reports = (0..self.len())
            .step_by(stride.max(1))
            .map(|i| detection_metrics(&extract(&self.scan(i)?, extractor)?, &self.labels(i)?, dilation))
            .collect::<Result<Vec<_>>>()?;
        Ok(DetectionReport::merge(&reports))
    }
}

/// A directory of sequences, one per subdirectory. A directory that is
/// itself a sequence is a dataset of one.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub sequences: Vec<Sequence>,
}

impl Dataset {
    pub fn open(dir: impl AsRef<Path>) -> Result<Dataset> {
        let dir = dir.as_ref();
        if dir.join("manifest.json").is_file() {
            return Ok(Dataset {
                sequences: vec![Sequence::open(dir)?],
            });
        }
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("manifest.json").is_file())
            .collect();
        subdirs.sort();
        if subdirs.is_empty() {
            return Err(Error::Precondition(format!("no sequences under {}", dir.display())));
        }
        Ok(Dataset {
            sequences: subdirs.iter().map(Sequence::open).collect::<Result<_>>()?,
        })
    }

    pub fn get(&self, name: &str) -> Result<&Sequence> {
        self.sequences
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Precondition(format!("dataset has no sequence '{name}'")))
    }

    pub fn names(&self) -> Vec<&str> {
        self.sequences.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn select(&self, names: &[String]) -> Result<Vec<&Sequence>> {
        names.iter().map(|n| self.get(n)).collect()
    }
}

/// One extractor on one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEval {
    pub sequence: String,
    pub ate_percent: f64,
    pub are_mdeg_per_m: f64,
    /// Mean extraction time per frame.
    pub runtime_ms: f64,
    /// Mean points per frame.
    pub points: f64,
    pub failed_frames: usize,
    pub errors: OdomErrorReport,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_sequence, make_trajectory, make_world, render_sequence, ClutterSpec, SensorPreset, TrajectoryShape};

    fn preset() -> SensorPreset {
        SensorPreset {
            max_range: 30.0,
            num_azimuths: 100,
            ..SensorPreset::f1()
        }
    }

    #[test]
    fn disk_and_memory_agree() {
        let world = make_world(3, 120.0, 60, &ClutterSpec::default()).unwrap();
        let traj = make_trajectory(TrajectoryShape::Line, 20.0, 4.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let seq_dir = dir.path().join("seq_a");
        generate_sequence(&world, &traj, &preset(), 5, &seq_dir).unwrap();

        let ds = Dataset::open(dir.path()).unwrap();
        assert_eq!(ds.names(), ["seq_a"]);
        assert_eq!(Dataset::open(&seq_dir).unwrap().names(), ["seq_a"]);
        let disk = ds.get("seq_a").unwrap();
        assert!(ds.get("nope").is_err());

        let frames = render_sequence(&world, &traj, &preset(), 5).unwrap();
        let mem = Sequence::in_memory("m", traj.clone(), frames).unwrap();
        assert_eq!(disk.len(), mem.len());
        for i in [0, disk.len() - 1] {
            assert_eq!(disk.scan(i).unwrap(), mem.scan(i).unwrap());
            assert_eq!(disk.labels(i).unwrap(), mem.labels(i).unwrap());
        }
        let cfg: ExtractorConfig = "kstrongest K=8 z_min=30".parse().unwrap();
        let icp = IcpConfig::default();
        let a = disk.run(&cfg, &icp).unwrap();
        let b = mem.run(&cfg, &icp).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        let det = disk.detection(&cfg, 1, 3).unwrap();
        assert!(det.pd > 0.0);
    }

    #[test]
    fn missing_pieces_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(Dataset::open(dir.path()).is_err());
        let world = make_world(3, 60.0, 10, &ClutterSpec::default()).unwrap();
        let traj = make_trajectory(TrajectoryShape::Line, 5.0, 4.0).unwrap();
        generate_sequence(&world, &traj, &preset(), 1, dir.path()).unwrap();
        fs::remove_file(dir.path().join("gt.csv")).unwrap();
        assert!(matches!(Sequence::open(dir.path()), Err(Error::Precondition(_))));
    }
}
