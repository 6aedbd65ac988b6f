//! On-disk formats: binary scans, point and trajectory CSV, label masks.
//!
//! A scan file is little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4  | magic `RSCN` |
//! | 2  | version (1) |
//! | 2  | azimuth count |
//! | 4  | bins per azimuth |
//! | 8  | range resolution, m |
//! | 8  | angle of azimuth 0, rad |
//! | 8  | rotation rate, Hz |
//! | 8  | timestamp, s |
//!
//! followed by one 8-bit half-dB level per cell, row-major by azimuth.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pose::{Pose2, StampedPose, Trajectory};
use crate::scan::{encode_raw, Point2, PointCloud, PolarScan, PowerUnit, ScanGeometry};

pub const SCAN_MAGIC: &[u8; 4] = b"RSCN";
pub const SCAN_VERSION: u16 = 1;
pub const SCAN_HEADER_LEN: usize = 44;

/// Serializes a raw or Decibel scan; dB values must be on the half-dB lattice.
pub fn scan_to_bytes(scan: &PolarScan) -> Result<Vec<u8>> {
    let g = scan.geometry();
    let azimuths = u16::try_from(g.num_azimuths)
        .map_err(|_| Error::Dimension(format!("{} azimuths do not fit the format", g.num_azimuths)))?;
    let bins = u32::try_from(g.num_bins)
        .map_err(|_| Error::Dimension(format!("{} bins do not fit the format", g.num_bins)))?;
    let levels = encode_raw(scan)?;
    let mut out = Vec::with_capacity(SCAN_HEADER_LEN + levels.len());
    out.extend_from_slice(SCAN_MAGIC);
    out.extend_from_slice(&SCAN_VERSION.to_le_bytes());
    out.extend_from_slice(&azimuths.to_le_bytes());
    out.extend_from_slice(&bins.to_le_bytes());
    for v in [g.range_resolution, g.azimuth_0_angle, g.rotation_rate, scan.timestamp()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&levels);
    Ok(out)
}

/// Parses a scan file image into a [`PowerUnit::RawHalfDb`] scan.
pub fn scan_from_bytes(bytes: &[u8]) -> Result<PolarScan> {
    if bytes.len() < SCAN_HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the {SCAN_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != SCAN_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u16_at(4);
    if version != SCAN_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let azimuths = u16_at(6) as usize;
    let bins = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let geometry = ScanGeometry {
        num_azimuths: azimuths,
        num_bins: bins,
        range_resolution: f64_at(12),
        azimuth_0_angle: f64_at(20),
        rotation_rate: f64_at(28),
    };
    let timestamp = f64_at(36);
    geometry.validate().map_err(|e| Error::Format(e.to_string()))?;
    if !timestamp.is_finite() {
        return Err(Error::Format("timestamp is not finite".into()));
    }
    let payload = &bytes[SCAN_HEADER_LEN..];
    if payload.len() != geometry.len() {
        return Err(Error::Dimension(format!(
            "header declares {azimuths}x{bins} = {} cells, payload holds {}",
            geometry.len(),
            payload.len()
        )));
    }
    PolarScan::new(
        geometry,
        PowerUnit::RawHalfDb,
        timestamp,
        payload.iter().map(|&l| l as f64).collect(),
    )
}

pub fn write_scan(scan: &PolarScan, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, scan_to_bytes(scan)?)?;
    Ok(())
}

pub fn read_scan(path: impl AsRef<Path>) -> Result<PolarScan> {
    scan_from_bytes(&fs::read(path)?)
}

/// Shortest decimal form of `v` rounded to 9 significant digits.
pub fn nine_digits(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

pub fn write_points(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "intensity", "azimuth_idx", "range_bin"])?;
    for p in &cloud.points {
        w.write_record([
            nine_digits(p.x),
            nine_digits(p.y),
            nine_digits(p.intensity),
            p.azimuth_idx.to_string(),
            p.range_bin.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV. The file does not carry the scan timestamp; it is set to 0.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointCloud> {
    let mut r = csv::Reader::from_path(path)?;
    let points = r.deserialize::<Point2>().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(PointCloud::new(points, 0.0))
}

#[derive(Serialize, Deserialize)]
struct PoseRow {
    timestamp: f64,
    x: f64,
    y: f64,
    theta: f64,
}

/// Writes `timestamp,x,y,theta` rows at full precision.
pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in traj.stamped() {
        w.serialize(PoseRow {
            timestamp: p.timestamp,
            x: p.pose.x,
            y: p.pose.y,
            theta: p.pose.theta,
        })?;
    }
    if traj.is_empty() {
        w.write_record(["timestamp", "x", "y", "theta"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path)?;
    let poses = r
        .deserialize::<PoseRow>()
        .map(|row| {
            row.map(|p| StampedPose {
                timestamp: p.timestamp,
                pose: Pose2::new(p.x, p.y, p.theta),
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Trajectory::new(poses)
}

/// Packs flags LSB-first, eight per byte, no header.
pub fn pack_mask(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |b, (i, &on)| b | ((on as u8) << i)))
        .collect()
}

pub fn unpack_mask(bytes: &[u8], len: usize) -> Result<Vec<bool>> {
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::Dimension(format!(
            "mask of {len} cells needs {} bytes, got {}",
            len.div_ceil(8),
            bytes.len()
        )));
    }
    Ok((0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
}

pub fn write_mask(bits: &[bool], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, pack_mask(bits))?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>, len: usize) -> Result<Vec<bool>> {
    unpack_mask(&fs::read(path)?, len)
}
