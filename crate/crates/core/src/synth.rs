//! Seeded synthetic radar worlds, trajectories and labelled scans.
//!
//! Every bin receives exponential clutter; landmarks add a Gaussian range
//! profile whose amplitude is redrawn from an exponential distribution once
//! per scan. Scans are quantized to 8-bit half-dB levels at render time, so
//! extractors see the same encoding as real sensor data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::{write_mask, write_scan, write_trajectory};
use crate::pose::{Pose2, Trajectory};
use crate::scan::{PolarScan, PowerUnit, ScanGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    /// Mean return power above the noise floor, dB.
    pub reflectivity_db: f64,
    /// Standard deviation of the range profile, meters.
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterRegion {
    /// Closed polygon, world frame; the last vertex connects to the first.
    pub polygon: Vec<[f64; 2]>,
    /// Clutter mean raised by this many dB inside the polygon.
    pub gain_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub landmarks: Vec<Landmark>,
    pub clutter_regions: Vec<ClutterRegion>,
}

/// Random clutter patches added by [`make_world`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub count: usize,
    pub gain_db: (f64, f64),
    pub radius_m: (f64, f64),
}

impl Default for ClutterSpec {
    fn default() -> Self {
        ClutterSpec {
            count: 0,
            gain_db: (3.0, 10.0),
            radius_m: (5.0, 20.0),
        }
    }
}

pub const REFLECTIVITY_DB: (f64, f64) = (15.0, 35.0);
pub const EXTENT_M: (f64, f64) = (0.2, 1.0);

/// Landmarks uniform over the square of side `extent_m` centered on the
/// origin, plus optional clutter patches.
pub fn make_world(seed: u64, extent_m: f64, n_landmarks: usize, clutter: &ClutterSpec) -> Result<World> {
    if !(extent_m > 0.0 && extent_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("world extent must be positive, got {extent_m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = extent_m / 2.0;
    let landmarks = (0..n_landmarks)
        .map(|_| Landmark {
            x: rng.random_range(-half..=half),
            y: rng.random_range(-half..=half),
            reflectivity_db: rng.random_range(REFLECTIVITY_DB.0..=REFLECTIVITY_DB.1),
            extent: rng.random_range(EXTENT_M.0..=EXTENT_M.1),
        })
        .collect();
    let clutter_regions = (0..clutter.count)
        .map(|_| {
            let (cx, cy) = (rng.random_range(-half..=half), rng.random_range(-half..=half));
            let r = rng.random_range(clutter.radius_m.0..=clutter.radius_m.1);
            let sides = rng.random_range(3..=8);
            let polygon = (0..sides)
                .map(|k| {
                    let a = TAU * k as f64 / sides as f64;
                    let rk = r * rng.random_range(0.6..=1.0);
                    [cx + rk * a.cos(), cy + rk * a.sin()]
                })
                .collect();
            ClutterRegion {
                polygon,
                gain_db: rng.random_range(clutter.gain_db.0..=clutter.gain_db.1),
            }
        })
        .collect();
    Ok(World {
        landmarks,
        clutter_regions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPreset {
    pub name: String,
    pub range_resolution: f64,
    pub num_azimuths: usize,
    pub rotation_rate: f64,
    pub noise_floor_db: f64,
    /// Multiplier on the clutter mean power (1 = nominal floor).
    pub noise_scale: f64,
    pub max_range: f64,
    /// Standard deviation of the azimuth beam, radians; 0 puts each
    /// landmark on its nearest azimuth only.
    pub beam_sigma: f64,
}

impl SensorPreset {
    pub fn f1() -> Self {
        SensorPreset {
            name: "F1".into(),
            range_resolution: 0.0596,
            num_azimuths: 400,
            rotation_rate: 4.0,
            noise_floor_db: 20.0,
            noise_scale: 1.0,
            max_range: 100.0,
            beam_sigma: 0.0,
        }
    }

    pub fn f2() -> Self {
        SensorPreset {
            name: "F2".into(),
            range_resolution: 0.0438,
            noise_floor_db: 35.0,
            ..Self::f1()
        }
    }

    pub fn num_bins(&self) -> usize {
        // The epsilon keeps exact multiples (e.g. 3360 * 0.0596) from
        // flooring one bin short.
        (self.max_range / self.range_resolution * (1.0 + 1e-12)).floor() as usize
    }

    pub fn geometry(&self) -> Result<ScanGeometry> {
        let g = ScanGeometry {
            num_azimuths: self.num_azimuths,
            num_bins: self.num_bins(),
            range_resolution: self.range_resolution,
            azimuth_0_angle: 0.0,
            rotation_rate: self.rotation_rate,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !self.noise_floor_db.is_finite() {
            return bad("noise floor must be finite".into());
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise scale must be positive, got {}", self.noise_scale));
        }
        if !(self.beam_sigma >= 0.0 && self.beam_sigma.is_finite()) {
            return bad(format!("beam sigma must be >= 0, got {}", self.beam_sigma));
        }
        Ok(())
    }

    /// Mean clutter power in Watts for a region gain in dB.
    pub fn clutter_mean(&self, gain_db: f64) -> f64 {
        self.noise_scale * 10f64.powf((self.noise_floor_db + gain_db) / 10.0)
    }
}

impl FromStr for SensorPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::f1()),
            "f2" => Ok(Self::f2()),
            _ => Err(Error::Parse(format!("unknown sensor preset '{s}' (expected F1 or F2)"))),
        }
    }
}

/// Per-bin ground truth: true where landmark power exceeds the clutter mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionLabels {
    pub num_azimuths: usize,
    pub num_bins: usize,
    pub bits: Vec<bool>,
}

impl DetectionLabels {
    pub fn get(&self, azimuth: usize, bin: usize) -> bool {
        self.bits[azimuth * self.num_bins + bin]
    }

    pub fn row(&self, azimuth: usize) -> &[bool] {
        &self.bits[azimuth * self.num_bins..(azimuth + 1) * self.num_bins]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// The noise-free parts of a rendered scan, in Watts.
#[derive(Debug, Clone)]
pub struct ScanComponents {
    pub clutter_mean: Vec<f64>,
    pub landmark_power: Vec<f64>,
}

/// Renders one scan seen from `pose`. Identical inputs give identical output.
pub fn render_scan(world: &World, pose: &Pose2, preset: &SensorPreset, seed: u64) -> Result<(PolarScan, DetectionLabels)> {
    let (scan, labels, _) = render_scan_with_components(world, pose, preset, seed, 0.0)?;
    Ok((scan, labels))
}

/// [`render_scan`] with an explicit timestamp, also returning the clutter
/// mean and realized landmark power per bin.
pub fn render_scan_with_components(
    world: &World,
    pose: &Pose2,
    preset: &SensorPreset,
    seed: u64,
    timestamp: f64,
) -> Result<(PolarScan, DetectionLabels, ScanComponents)> {
    preset.validate()?;
    let g = preset.geometry()?;
    let (na, nb) = (g.num_azimuths, g.num_bins);
    let res = g.range_resolution;
    let spacing = TAU / na as f64;
    let to_sensor = pose.inverse();

    // One fluctuation per landmark per scan, on its own stream.
    let mut amp_rng = ChaCha8Rng::seed_from_u64(seed);
    amp_rng.set_stream(na as u64);
    let amplitudes: Vec<f64> = world
        .landmarks
        .iter()
        .map(|l| {
            let e: f64 = amp_rng.sample(Exp1);
            e * 10f64.powf((preset.noise_floor_db + l.reflectivity_db) / 10.0)
        })
        .collect();

    let mut landmark_power = vec![0.0; na * nb];
    for (l, &amp) in world.landmarks.iter().zip(&amplitudes) {
        let [sx, sy] = to_sensor.transform_point([l.x, l.y]);
        let rho = sx.hypot(sy);
        if rho - 4.0 * l.extent > g.max_range() {
            continue;
        }
        let u = (sy.atan2(sx) - g.azimuth_0_angle) / spacing;
        let nearest = u.round();
        let reach = if preset.beam_sigma > 0.0 {
            (3.0 * preset.beam_sigma / spacing).ceil() as i64
        } else {
            0
        };
        let lo_bin = ((rho - 4.0 * l.extent) / res - 0.5).floor().max(0.0) as usize;
        let hi_bin = (((rho + 4.0 * l.extent) / res - 0.5).ceil().max(0.0) as usize).min(nb - 1);
        for d in -reach..=reach {
            let a_f = nearest + d as f64;
            let w_az = if preset.beam_sigma > 0.0 {
                let delta = (a_f - u) * spacing;
                (-0.5 * (delta / preset.beam_sigma).powi(2)).exp()
            } else {
                1.0
            };
            let a = (a_f as i64).rem_euclid(na as i64) as usize;
            let row = &mut landmark_power[a * nb..(a + 1) * nb];
            for (b, cell) in row.iter_mut().enumerate().take(hi_bin + 1).skip(lo_bin) {
                let r = (b as f64 + 0.5) * res;
                *cell += amp * w_az * (-0.5 * ((r - rho) / l.extent).powi(2)).exp();
            }
        }
    }

    let mut clutter_mean = vec![preset.clutter_mean(0.0); na * nb];
    if !world.clutter_regions.is_empty() {
        clutter_mean.par_chunks_mut(nb).enumerate().for_each(|(a, row)| {
            let theta = pose.theta + g.azimuth_angle(a);
            let dir = [theta.cos(), theta.sin()];
            let mut gains = vec![f64::NEG_INFINITY; nb];
            for region in &world.clutter_regions {
                for (t0, t1) in ray_polygon_intervals([pose.x, pose.y], dir, &region.polygon) {
                    let b0 = (t0 / res - 0.5).ceil().max(0.0) as usize;
                    let b1 = ((t1 / res - 0.5).floor().min(nb as f64 - 1.0)).max(-1.0);
                    if b1 < 0.0 {
                        continue;
                    }
                    for gain in gains.iter_mut().take(b1 as usize + 1).skip(b0) {
                        *gain = gain.max(region.gain_db);
                    }
                }
            }
            for (c, gain) in row.iter_mut().zip(gains) {
                if gain > f64::NEG_INFINITY {
                    *c = preset.clutter_mean(gain);
                }
            }
        });
    }

    let mut values = vec![0.0; na * nb];
    values.par_chunks_mut(nb).enumerate().for_each(|(a, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(a as u64);
        for (b, v) in row.iter_mut().enumerate() {
            let i = a * nb + b;
            let e: f64 = rng.sample(Exp1);
            let power = clutter_mean[i] * e + landmark_power[i];
            *v = quantize_db(10.0 * power.log10());
        }
    });
    let bits = landmark_power.iter().zip(&clutter_mean).map(|(l, c)| l > c).collect();

    let scan = PolarScan::new(g, PowerUnit::Decibel, timestamp, values)?;
    let labels = DetectionLabels {
        num_azimuths: na,
        num_bins: nb,
        bits,
    };
    Ok((
        scan,
        labels,
        ScanComponents {
            clutter_mean,
            landmark_power,
        },
    ))
}

/// Nearest half-dB level in `[0, 127.5]`.
pub fn quantize_db(db: f64) -> f64 {
    ((2.0 * db).round().clamp(0.0, 255.0)) / 2.0
}

/// Parameter intervals `[t0, t1]` (t ≥ 0) where the ray `o + t·dir` lies
/// inside the polygon, by even-odd crossing.
fn ray_polygon_intervals(o: [f64; 2], dir: [f64; 2], poly: &[[f64; 2]]) -> Vec<(f64, f64)> {
    let mut ts = Vec::new();
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let e = [q[0] - p[0], q[1] - p[1]];
        let denom = dir[0] * e[1] - dir[1] * e[0];
        if denom == 0.0 {
            continue;
        }
        let w = [p[0] - o[0], p[1] - o[1]];
        let t = (w[0] * e[1] - w[1] * e[0]) / denom;
        let s = (w[0] * dir[1] - w[1] * dir[0]) / denom;
        if t >= 0.0 && (0.0..1.0).contains(&s) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    let mut inside = point_in_polygon(o, poly);
    let mut out = Vec::new();
    let mut start = 0.0;
    for t in ts {
        if inside {
            out.push((start, t));
        } else {
            start = t;
        }
        inside = !inside;
    }
    if inside {
        out.push((start, f64::INFINITY));
    }
    out
}

pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + n - 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
    }
    inside
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum TrajectoryShape {
    Line,
    /// Constant curvature in 1/m; 0 is a straight line.
    Arc { curvature: f64 },
    /// A lemniscate through the origin whose curvature changes smoothly,
    /// so the heading rate never jumps.
    Figure8,
}

impl FromStr for TrajectoryShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "line" => Ok(TrajectoryShape::Line),
            "figure8" | "figure-8" | "figure_eight" => Ok(TrajectoryShape::Figure8),
            _ => match lower.strip_prefix("arc") {
                Some("") => Ok(TrajectoryShape::Arc { curvature: 0.01 }),
                Some(rest) => rest
                    .trim_start_matches([':', '='])
                    .parse()
                    .map(|curvature| TrajectoryShape::Arc { curvature })
                    .map_err(|_| Error::Parse(format!("bad arc curvature in '{s}'"))),
                None => Err(Error::Parse(format!("unknown trajectory shape '{s}'"))),
            },
        }
    }
}

pub const DEFAULT_SPEED: f64 = 10.0;

/// Pose at arc length `s` along a shape whose nominal length is `length`.
/// Arc-length table of the unit lemniscate of Gerono, `(sin t, sin t cos t)`,
/// used to walk the figure-eight at constant speed.
struct Lemniscate {
    t: Vec<f64>,
    s: Vec<f64>,
}

impl Lemniscate {
    const SAMPLES: usize = 1 << 14;

    fn new() -> Self {
        let speed = |t: f64| t.cos().hypot((2.0 * t).cos());
        let h = TAU / Self::SAMPLES as f64;
        let t: Vec<f64> = (0..=Self::SAMPLES).map(|i| i as f64 * h).collect();
        let mut s = vec![0.0; t.len()];
        for i in 1..t.len() {
            // Simpson on each interval.
            let (a, b) = (t[i - 1], t[i]);
            s[i] = s[i - 1] + (b - a) / 6.0 * (speed(a) + 4.0 * speed(0.5 * (a + b)) + speed(b));
        }
        Lemniscate { t, s }
    }

    fn perimeter(&self) -> f64 {
        *self.s.last().expect("non-empty table")
    }

    /// Pose at arc length `s` on the curve scaled by `a`.
    fn pose(&self, a: f64, s: f64) -> Pose2 {
        let u = (s / a).rem_euclid(self.perimeter());
        let i = self.s.partition_point(|&x| x <= u).clamp(1, self.s.len() - 1);
        let f = (u - self.s[i - 1]) / (self.s[i] - self.s[i - 1]);
        let t = self.t[i - 1] + f * (self.t[i] - self.t[i - 1]);
        Pose2::new(a * t.sin(), a * t.sin() * t.cos(), (2.0 * t).cos().atan2(t.cos()))
    }
}

fn shape_pose(shape: TrajectoryShape, length: f64, s: f64, lemniscate: &Lemniscate) -> Pose2 {
    match shape {
        TrajectoryShape::Line => Pose2::new(s, 0.0, 0.0),
        TrajectoryShape::Arc { curvature } if curvature == 0.0 => Pose2::new(s, 0.0, 0.0),
        TrajectoryShape::Arc { curvature: k } => Pose2::new((k * s).sin() / k, (1.0 - (k * s).cos()) / k, k * s),
        TrajectoryShape::Figure8 => lemniscate.pose(length / lemniscate.perimeter(), s),
    }
}

/// One pose per rotation at 10 m/s.
pub fn make_trajectory(shape: TrajectoryShape, length_m: f64, rotation_rate: f64) -> Result<Trajectory> {
    make_trajectory_with_speed(shape, length_m, rotation_rate, DEFAULT_SPEED)
}

/// Poses sampled every `speed / rotation_rate` meters of arc length until
/// the travelled (chord) distance reaches `length_m`.
pub fn make_trajectory_with_speed(shape: TrajectoryShape, length_m: f64, rotation_rate: f64, speed: f64) -> Result<Trajectory> {
    if !(length_m > 0.0 && length_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("trajectory length must be positive, got {length_m}")));
    }
    if !(rotation_rate > 0.0 && speed > 0.0) {
        return Err(Error::InvalidParameter("rotation rate and speed must be positive".into()));
    }
    if let TrajectoryShape::Arc { curvature } = shape {
        if !curvature.is_finite() {
            return Err(Error::InvalidParameter("arc curvature must be finite".into()));
        }
    }
    let step = speed / rotation_rate;
    let lemniscate = Lemniscate::new();
    let mut poses = vec![shape_pose(shape, length_m, 0.0, &lemniscate)];
    let mut travelled = 0.0;
    let mut i = 0usize;
    // Spacing in arc length is exact; the relative tolerance absorbs
    // rounding in `i * step` without adding a spurious extra pose.
    while travelled < length_m * (1.0 - 1e-12) {
        i += 1;
        let p = shape_pose(shape, length_m, i as f64 * step, &lemniscate);
        let q = poses.last().expect("non-empty");
        travelled += (p.x - q.x).hypot(p.y - q.y);
        poses.push(p);
    }
    let timestamps: Vec<f64> = (0..poses.len()).map(|k| k as f64 / rotation_rate).collect();
    Trajectory::from_parts(&timestamps, &poses)
}

/// Seed used for scan `index` of a sequence.
pub fn scan_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Renders every pose of a trajectory in memory.
pub fn render_sequence(
    world: &World,
    trajectory: &Trajectory,
    preset: &SensorPreset,
    seed: u64,
) -> Result<Vec<(PolarScan, DetectionLabels)>> {
    trajectory
        .stamped()
        .par_iter()
        .enumerate()
        .map(|(i, sp)| {
            render_scan_with_components(world, &sp.pose, preset, scan_seed(seed, i), sp.timestamp)
                .map(|(scan, labels, _)| (scan, labels))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub preset: SensorPreset,
    pub seed: u64,
    pub num_scans: usize,
    pub num_azimuths: usize,
    pub num_bins: usize,
    pub num_landmarks: usize,
    pub path_length_m: f64,
}

pub fn scan_file_name(index: usize) -> String {
    format!("{index:06}.rscn")
}

pub fn mask_file_name(index: usize) -> String {
    format!("{index:06}.mask")
}

/// Writes `scans/`, `labels/`, `gt.csv` and `manifest.json` under `out_dir`.
pub fn generate_sequence(
    world: &World,
    trajectory: &Trajectory,
    preset: &SensorPreset,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    let out = out_dir.as_ref();
    let geometry = preset.geometry()?;
    fs::create_dir_all(out.join("scans"))?;
    fs::create_dir_all(out.join("labels"))?;
    trajectory
        .stamped()
        .par_iter()
        .enumerate()
        .try_for_each(|(i, sp)| -> Result<()> {
            let (scan, labels, _) =
                render_scan_with_components(world, &sp.pose, preset, scan_seed(seed, i), sp.timestamp)?;
            write_scan(&scan, out.join("scans").join(scan_file_name(i)))?;
            write_mask(&labels.bits, out.join("labels").join(mask_file_name(i)))
        })?;
    write_trajectory(trajectory, out.join("gt.csv"))?;
    let manifest = Manifest {
        preset: preset.clone(),
        seed,
        num_scans: trajectory.len(),
        num_azimuths: geometry.num_azimuths,
        num_bins: geometry.num_bins,
        num_landmarks: world.landmarks.len(),
        path_length_m: trajectory.path_length(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_preset() -> SensorPreset {
        SensorPreset {
            max_range: 40.0,
            ..SensorPreset::f1()
        }
    }

    #[test]
    fn worlds_are_seeded_and_bounded() {
        let spec = ClutterSpec::default();
        assert!(make_world(1, 100.0, 0, &spec).unwrap().landmarks.is_empty());
        let a = make_world(7, 200.0, 200, &spec).unwrap();
        assert_eq!(a, make_world(7, 200.0, 200, &spec).unwrap());
        assert_ne!(a, make_world(8, 200.0, 200, &spec).unwrap());
        assert!(a.landmarks.iter().all(|l| l.x.abs() <= 100.0 && l.y.abs() <= 100.0));
        assert!(a.landmarks.iter().all(|l| l.extent > 0.0 && l.reflectivity_db > 0.0));
        assert!(make_world(1, 0.0, 3, &spec).is_err());
    }

    #[test]
    fn empty_world_is_floor_noise() {
        let preset = small_preset();
        let (scan, labels) = render_scan(&World::default(), &Pose2::IDENTITY, &preset, 3).unwrap();
        assert!(scan.values().len() >= 100_000);
        assert_eq!(labels.count(), 0);
        let mean_w = scan.values().iter().map(|&db| 10f64.powf(db / 10.0)).sum::<f64>() / scan.values().len() as f64;
        assert!((10.0 * mean_w.log10() - preset.noise_floor_db).abs() < 1.0);
        // Values sit on the half-dB lattice.
        assert!(scan.values().iter().all(|v| (v * 2.0).fract() == 0.0));
    }

    #[test]
    fn clutter_mean_matches_exponential() {
        let preset = SensorPreset {
            max_range: 160.0,
            ..SensorPreset::f1()
        };
        let mut total = 0.0;
        let mut n = 0usize;
        for seed in 0..2 {
            let (scan, _) = render_scan(&World::default(), &Pose2::IDENTITY, &preset, seed).unwrap();
            total += scan.values().iter().map(|&db| 10f64.powf(db / 10.0)).sum::<f64>();
            n += scan.values().len();
        }
        assert!(n >= 1_000_000);
        let rel = (total / n as f64) / preset.clutter_mean(0.0) - 1.0;
        assert!(rel.abs() < 0.02, "relative error {rel}");
    }

    #[test]
    fn landmark_dead_ahead() {
        let preset = small_preset();
        let world = World {
            landmarks: vec![Landmark {
                x: 30.0,
                y: 0.0,
                reflectivity_db: 25.0,
                extent: 0.3,
            }],
            clutter_regions: vec![],
        };
        let (_, labels) = render_scan(&world, &Pose2::IDENTITY, &preset, 11).unwrap();
        let on: Vec<(usize, usize)> = (0..labels.num_azimuths)
            .flat_map(|a| (0..labels.num_bins).map(move |b| (a, b)))
            .filter(|&(a, b)| labels.get(a, b))
            .collect();
        assert!(!on.is_empty());
        assert!(on.iter().all(|&(a, _)| a == 0));
        let bins: Vec<usize> = on.iter().map(|&(_, b)| b).collect();
        assert!(bins.windows(2).all(|w| w[1] == w[0] + 1), "not contiguous: {bins:?}");
        let center = (30.0 / preset.range_resolution - 0.5).round() as usize;
        let mid = (bins[0] + bins[bins.len() - 1]) / 2;
        assert!(mid.abs_diff(center) <= 1, "{mid} vs {center}");
    }

    #[test]
    fn labels_are_sound() {
        let world = make_world(
            5,
            80.0,
            60,
            &ClutterSpec {
                count: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let preset = small_preset();
        let pose = Pose2::new(3.0, -2.0, 0.4);
        let (scan, labels, parts) = render_scan_with_components(&world, &pose, &preset, 9, 1.0).unwrap();
        assert!(labels.count() > 0);
        for (i, &on) in labels.bits.iter().enumerate() {
            assert_eq!(on, parts.landmark_power[i] > parts.clutter_mean[i]);
        }
        assert!(parts.clutter_mean.iter().any(|&c| c > preset.clutter_mean(0.0)));
        let again = render_scan_with_components(&world, &pose, &preset, 9, 1.0).unwrap();
        assert_eq!(again.0, scan);
        assert_eq!(again.1, labels);
    }

    #[test]
    fn beam_spread_reaches_neighbours() {
        let world = World {
            landmarks: vec![Landmark {
                x: 20.0,
                y: 0.0,
                reflectivity_db: 30.0,
                extent: 0.5,
            }],
            clutter_regions: vec![],
        };
        let preset = SensorPreset {
            beam_sigma: TAU / 400.0,
            ..small_preset()
        };
        let (_, labels) = render_scan(&world, &Pose2::IDENTITY, &preset, 1).unwrap();
        let az: std::collections::BTreeSet<usize> =
            (0..400).filter(|&a| labels.row(a).iter().any(|&b| b)).collect();
        assert!(az.contains(&0) && az.contains(&1) && az.contains(&399), "{az:?}");
    }

    #[test]
    fn polygon_intervals() {
        let square = [[1.0, -1.0], [3.0, -1.0], [3.0, 1.0], [1.0, 1.0]];
        let iv = ray_polygon_intervals([0.0, 0.0], [1.0, 0.0], &square);
        assert_eq!(iv, vec![(1.0, 3.0)]);
        let iv = ray_polygon_intervals([2.0, 0.0], [0.0, 1.0], &square);
        assert_eq!(iv, vec![(0.0, 1.0)]);
        assert!(ray_polygon_intervals([0.0, 0.0], [-1.0, 0.0], &square).is_empty());
        assert!(point_in_polygon([2.0, 0.5], &square) && !point_in_polygon([0.0, 0.0], &square));
    }

    #[test]
    fn line_trajectory() {
        let t = make_trajectory(TrajectoryShape::Line, 100.0, 4.0).unwrap();
        assert_eq!(t.len(), 41);
        assert!((t.pose(1).x - 2.5).abs() < 1e-12);
        assert_eq!(t.stamped()[1].timestamp, 0.25);
        assert!(t.path_length() >= 100.0);
        let arc0 = make_trajectory(TrajectoryShape::Arc { curvature: 0.0 }, 100.0, 4.0).unwrap();
        assert_eq!(arc0, t);
    }

    #[test]
    fn figure8_closes() {
        let t = make_trajectory(TrajectoryShape::Figure8, 1000.0, 4.0).unwrap();
        assert!(t.path_length() >= 1000.0);
        let (first, last) = (t.pose(0), t.pose(t.len() - 1));
        // One step of arc length, a hair more as a chord sum falls short.
        assert!(first.between(&last).translation_norm() <= 2.5 * (1.0 + 1e-3));
        // Both loops are visited.
        assert!(t.poses().any(|p| p.x > 100.0) && t.poses().any(|p| p.x < -100.0));
        // Heading changes smoothly: no jump in turn rate between frames.
        let turn: Vec<f64> = t.poses().collect::<Vec<_>>().windows(2).map(|w| w[0].between(&w[1]).theta).collect();
        assert!(turn.windows(2).all(|w| (w[1] - w[0]).abs() < 5e-3));
    }

    #[test]
    fn arc_keeps_speed() {
        let t = make_trajectory(TrajectoryShape::Arc { curvature: 0.02 }, 200.0, 4.0).unwrap();
        let d = t.path_distances();
        for w in d.windows(2) {
            assert!((w[1] - w[0] - 2.5).abs() < 1e-3);
        }
        assert!(t.path_length() >= 200.0);
        assert!(make_trajectory(TrajectoryShape::Line, -1.0, 4.0).is_err());
    }

    #[test]
    fn shape_names() {
        assert_eq!("figure8".parse::<TrajectoryShape>().unwrap(), TrajectoryShape::Figure8);
        assert_eq!("arc:0.05".parse::<TrajectoryShape>().unwrap(), TrajectoryShape::Arc { curvature: 0.05 });
        assert!("spiral".parse::<TrajectoryShape>().is_err());
    }

    #[test]
    fn presets_differ() {
        let (f1, f2) = (SensorPreset::f1(), SensorPreset::f2());
        assert_eq!(f1.num_bins(), 1677);
        assert_eq!(f2.num_bins(), 2283);
        assert!(f2.noise_floor_db > f1.noise_floor_db);
        let exact = SensorPreset {
            max_range: 3360.0 * 0.0596,
            ..f1
        };
        assert_eq!(exact.num_bins(), 3360);
    }
}
