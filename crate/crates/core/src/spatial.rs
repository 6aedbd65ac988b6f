//! Extractors that look across neighbouring azimuths: C19 and CFEAR.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::scan::{Point2, PointCloud, PolarScan, PowerUnit};
use crate::signal::{extract_kstrongest, reflect_index, stronger_first};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C19Config {
    /// Maximum number of regions grown before stopping.
    pub l_max: usize,
    /// A neighbour joins a region while its intensity is at least this
    /// fraction of the seed's.
    pub region_drop: f64,
}

impl Default for C19Config {
    fn default() -> Self {
        C19Config {
            l_max: 400,
            region_drop: 0.5,
        }
    }
}

impl C19Config {
    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 {
            return Err(Error::InvalidParameter("l_max must be >= 1".into()));
        }
        if !(self.region_drop > 0.0 && self.region_drop < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "region_drop must lie in (0, 1), got {}",
                self.region_drop
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfearConfig {
    pub k: usize,
    pub z_min_db: f64,
    /// Cluster radius in meters.
    pub r: f64,
    /// Grid cell side in meters.
    pub grid_side: f64,
    pub p_min: usize,
}

impl Default for CfearConfig {
    fn default() -> Self {
        CfearConfig {
            k: 20,
            z_min_db: 31.875,
            r: 0.5,
            grid_side: 0.5,
            p_min: 5,
        }
    }
}

impl CfearConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if self.z_min_db.is_nan() {
            return bad("z_min must be a number".into());
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("r must be positive, got {}", self.r));
        }
        if !(self.grid_side > 0.0 && self.grid_side.is_finite()) {
            return bad(format!("grid side must be positive, got {}", self.grid_side));
        }
        if self.p_min < 2 {
            return bad(format!("p_min must be >= 2, got {}", self.p_min));
        }
        Ok(())
    }
}

/// A contiguous run of bins on one azimuth, `bin_lo..=bin_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthRegion {
    pub azimuth_idx: usize,
    pub bin_lo: usize,
    pub bin_hi: usize,
    pub peak_bin: usize,
    pub peak_score: f64,
}

impl AzimuthRegion {
    pub fn overlaps(&self, other: &AzimuthRegion) -> bool {
        self.bin_lo <= other.bin_hi && other.bin_lo <= self.bin_hi
    }
}

/// Magnitude of the unnormalized 3x3 Prewitt response per cell, row-major
/// like the scan. Azimuth wraps around; range reflects at both ends.
pub fn prewitt_gradient(scan: &PolarScan) -> Result<Vec<f64>> {
    scan.expect_unit(PowerUnit::Decibel)?;
    let (na, nb) = (scan.num_azimuths(), scan.num_bins());
    let mut out = vec![0.0; na * nb];
    out.par_chunks_mut(nb).enumerate().for_each(|(a, row_out)| {
        let rows = [scan.row((a + na - 1) % na), scan.row(a), scan.row((a + 1) % na)];
        for (b, g) in row_out.iter_mut().enumerate() {
            let bl = reflect_index(b as i64 - 1, nb);
            let br = reflect_index(b as i64 + 1, nb);
            let gx: f64 = rows.iter().map(|r| r[br] - r[bl]).sum();
            let gy: f64 = [bl, b, br].iter().map(|&c| rows[2][c] - rows[0][c]).sum();
            *g = gx.hypot(gy);
        }
    });
    Ok(out)
}

/// Cell scores `I * (1 - g)` with `g` the min-max normalized gradient.
pub fn c19_scores(scan: &PolarScan) -> Result<Vec<f64>> {
    let grad = prewitt_gradient(scan)?;
    let (lo, hi) = grad
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)));
    let span = hi - lo;
    Ok(scan
        .values()
        .iter()
        .zip(&grad)
        .map(|(&i, &g)| {
            let gn = if span > 0.0 { (g - lo) / span } else { 0.0 };
            i * (1.0 - gn)
        })
        .collect())
}

/// Grows up to `l_max` regions from the highest-scoring unmasked cells.
pub fn c19_regions(scan: &PolarScan, cfg: &C19Config) -> Result<Vec<AzimuthRegion>> {
    cfg.validate()?;
    let scores = c19_scores(scan)?;
    let nb = scan.num_bins();
    let values = scan.values();
    let mut masked = vec![false; values.len()];
    let mut regions = Vec::new();

    // Rank lazily: most seeds come from the top of the order, so sort a
    // prefix first and only sort the remainder if it runs out.
    let mut order: Vec<usize> = (0..values.len()).collect();
    let by_score = |a: &usize, b: &usize| stronger_first((scores[*a], *a), (scores[*b], *b));
    let prefix = (cfg.l_max * 8).max(1024).min(order.len());
    if prefix < order.len() {
        order.select_nth_unstable_by(prefix - 1, by_score);
    }
    order[..prefix].sort_unstable_by(by_score);
    let mut sorted_upto = prefix;

    let mut pos = 0;
    while regions.len() < cfg.l_max && pos < order.len() {
        if pos == sorted_upto {
            order[sorted_upto..].sort_unstable_by(by_score);
            sorted_upto = order.len();
        }
        let seed = order[pos];
        pos += 1;
        if masked[seed] {
            continue;
        }
        let (a, b) = (seed / nb, seed % nb);
        let row = &values[a * nb..(a + 1) * nb];
        let floor = cfg.region_drop * row[b];
        let joins = |c: usize| !masked[a * nb + c] && row[c] >= floor;
        let mut lo = b;
        while lo > 0 && joins(lo - 1) {
            lo -= 1;
        }
        let mut hi = b;
        while hi + 1 < nb && joins(hi + 1) {
            hi += 1;
        }
        masked[a * nb + lo..=a * nb + hi].fill(true);
        let peak_bin = (lo..=hi).fold(lo, |best, c| if row[c] > row[best] { c } else { best });
        regions.push(AzimuthRegion {
            azimuth_idx: a,
            bin_lo: lo,
            bin_hi: hi,
            peak_bin,
            peak_score: scores[a * nb + peak_bin],
        });
    }
    Ok(regions)
}

/// Peaks of regions that overlap a region on a neighbouring azimuth.
pub fn extract_c19(scan: &PolarScan, cfg: &C19Config) -> Result<PointCloud> {
    let regions = c19_regions(scan, cfg)?;
    let na = scan.num_azimuths();
    let mut by_azimuth: HashMap<usize, Vec<&AzimuthRegion>> = HashMap::new();
    for r in &regions {
        by_azimuth.entry(r.azimuth_idx).or_default().push(r);
    }
    let has_neighbour = |r: &AzimuthRegion| {
        [(r.azimuth_idx + 1) % na, (r.azimuth_idx + na - 1) % na]
            .iter()
            .filter_map(|n| by_azimuth.get(n))
            .flatten()
            .any(|o| o.overlaps(r))
    };
    let mut cells: Vec<(usize, usize)> = regions
        .iter()
        .filter(|r| has_neighbour(r))
        .map(|r| (r.azimuth_idx, r.peak_bin))
        .collect();
    cells.sort_unstable();
    let g = scan.geometry();
    let points = cells
        .into_iter()
        .map(|(a, b)| Point2::from_polar(a, b, scan.get(a, b), g))
        .collect();
    Ok(PointCloud::new(points, scan.timestamp()))
}

/// K-strongest seeds clustered on a square grid; one mean point per cluster
/// that is large enough and not lined up along a single azimuth.
pub fn extract_cfear(scan: &PolarScan, cfg: &CfearConfig) -> Result<PointCloud> {
    cfg.validate()?;
    let seeds = extract_kstrongest(scan, cfg.k, cfg.z_min_db)?.points;

    let cell_of = |x: f64, y: f64, side: f64| ((x / side).floor() as i64, (y / side).floor() as i64);
    let mut occupied = BTreeMap::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in seeds.iter().enumerate() {
        occupied.insert(cell_of(p.x, p.y, cfg.grid_side), ());
        buckets.entry(cell_of(p.x, p.y, cfg.r)).or_default().push(i);
    }

    let mut points = Vec::new();
    let mut members = Vec::new();
    for &(ix, iy) in occupied.keys() {
        let cx = (ix as f64 + 0.5) * cfg.grid_side;
        let cy = (iy as f64 + 0.5) * cfg.grid_side;
        let (bx, by) = cell_of(cx, cy, cfg.r);
        members.clear();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = buckets.get(&(bx + dx, by + dy)) {
                    members.extend(
                        ids.iter()
                            .copied()
                            .filter(|&i| (seeds[i].x - cx).hypot(seeds[i].y - cy) <= cfg.r),
                    );
                }
            }
        }
        if members.len() < cfg.p_min {
            continue;
        }
        members.sort_unstable();
        let first_az = seeds[members[0]].azimuth_idx;
        if members.iter().all(|&i| seeds[i].azimuth_idx == first_az) {
            continue;
        }
        let n = members.len() as f64;
        let mean = |f: fn(&Point2) -> f64| members.iter().map(|&i| f(&seeds[i])).sum::<f64>() / n;
        let strongest = members
            .iter()
            .map(|&i| &seeds[i])
            .reduce(|best, p| {
                let better = p.intensity > best.intensity
                    || (p.intensity == best.intensity
                        && (p.azimuth_idx, p.range_bin) < (best.azimuth_idx, best.range_bin));
                if better {
                    p
                } else {
                    best
                }
            })
            .expect("cluster has members");
        points.push(Point2 {
            x: mean(|p| p.x),
            y: mean(|p| p.y),
            intensity: mean(|p| p.intensity),
            azimuth_idx: strongest.azimuth_idx,
            range_bin: strongest.range_bin,
        });
    }
    Ok(PointCloud::new(points, scan.timestamp()))
}
