//! Azimuth-wise extractors that work in dB: K-strongest and C18.

use rayon::prelude::*;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scan::{Point2, PointCloud, PolarScan, PowerUnit};

/// Per azimuth, the `k` strongest bins above `z_min_db`.
///
/// Ties prefer the nearer bin. Points are ordered by azimuth, then range.
pub fn extract_kstrongest(scan: &PolarScan, k: usize, z_min_db: f64) -> Result<PointCloud> {
    scan.expect_unit(PowerUnit::Decibel)?;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    if z_min_db.is_nan() {
        return Err(Error::InvalidParameter("z_min must be a number".into()));
    }
    let geometry = scan.geometry();
    let rows: Vec<&[f64]> = scan.rows().collect();
    let per_row: Vec<Vec<Point2>> = rows
        .par_iter()
        .enumerate()
        .map(|(a, row)| {
            kstrongest_row(row, k, z_min_db)
                .into_iter()
                .map(|bin| Point2::from_polar(a, bin, row[bin], geometry))
                .collect()
        })
        .collect();
    Ok(PointCloud::new(per_row.into_iter().flatten().collect(), scan.timestamp()))
}

/// Selected bins of one azimuth, in increasing order.
pub fn kstrongest_row(row: &[f64], k: usize, z_min: f64) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..row.len()).filter(|&i| row[i] > z_min).collect();
    if cand.len() > k {
        let by_strength = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
        cand.select_nth_unstable_by(k - 1, by_strength);
        cand.truncate(k);
    }
    cand.sort_unstable();
    cand
}

/// Normalized Gaussian taps for standard deviation `sigma`, truncated at
/// `4 sigma` (radius rounded to the nearest bin).
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma + 0.5) as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Index into `[0, n)` under half-sample symmetric reflection
/// (`... c b a | a b c ... x y z | z y x ...`).
pub(crate) fn reflect_index(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Gaussian smoothing with reflective boundaries.
pub fn gaussian_smooth(signal: &[f64], sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let n = signal.len();
    (0..n as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * signal[reflect_index(i + k as i64 - radius, n)])
                .sum()
        })
        .collect()
}

/// Intermediate signals of C18 on one azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct C18Trace {
    pub smoothed: Vec<f64>,
    pub noise_sigma: f64,
    pub peaks: Vec<usize>,
}

/// C18 on one azimuth: remove the azimuth mean, smooth with a Gaussian of
/// standard deviation `w_binom / 2`, estimate the noise level from the
/// negative excursions, and keep local maxima above `z_q` times that level.
pub fn c18_row(row: &[f64], w_binom: f64, z_q: f64) -> C18Trace {
    let n = row.len();
    let mean = row.iter().sum::<f64>() / n as f64;
    let unbiased: Vec<f64> = row.iter().map(|v| v - mean).collect();
    let smoothed = gaussian_smooth(&unbiased, w_binom / 2.0);

    let (sq, count) = smoothed
        .iter()
        .filter(|&&s| s < 0.0)
        .fold((0.0, 0usize), |(acc, c), s| (acc + s * s, c + 1));
    let noise_sigma = if count == 0 { 0.0 } else { (sq / count as f64).sqrt() };

    let mut peaks = Vec::new();
    if noise_sigma > 0.0 {
        let level = z_q * noise_sigma;
        for i in 0..n {
            let s = smoothed[i];
            let rising = i == 0 || s > smoothed[i - 1];
            let not_falling = i + 1 == n || s >= smoothed[i + 1];
            if s > level && rising && not_falling {
                peaks.push(i);
            }
        }
    }
    C18Trace {
        smoothed,
        noise_sigma,
        peaks,
    }
}

pub fn extract_c18(scan: &PolarScan, w_binom: f64, z_q: f64) -> Result<PointCloud> {
    scan.expect_unit(PowerUnit::Decibel)?;
    if !(w_binom >= 1.0 && w_binom.is_finite()) {
        return Err(Error::InvalidParameter(format!("w_binom must be >= 1, got {w_binom}")));
    }
    if !(z_q > 0.0 && z_q.is_finite()) {
        return Err(Error::InvalidParameter(format!("z_q must be positive, got {z_q}")));
    }
    let geometry = scan.geometry();
    let rows: Vec<&[f64]> = scan.rows().collect();
    let per_row: Vec<Vec<Point2>> = rows
        .par_iter()
        .enumerate()
        .map(|(a, row)| {
            c18_row(row, w_binom, z_q)
                .peaks
                .into_iter()
                .map(|bin| Point2::from_polar(a, bin, row[bin], geometry))
                .collect()
        })
        .collect();
    Ok(PointCloud::new(per_row.into_iter().flatten().collect(), scan.timestamp()))
}

/// Total order used to rank cells: stronger first, then lower index.
pub(crate) fn stronger_first(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}
