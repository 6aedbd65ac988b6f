//! Naive per-CUT CFAR: every window statistic is recomputed from scratch.
//!
//! Slow, but every line maps onto one clutter estimator, which makes it the
//! yardstick for [`super::run_cfar`].

use super::{clutter_estimate, gather_half_windows, CfarParams, CfarWindow};
use crate::error::Result;
use crate::scan::{watts_squared_to_db, Point2, PointCloud, PolarScan, PowerUnit};

/// Detection flags for one azimuth.
pub fn detect_row_naive(row: &[f64], params: &CfarParams, window: CfarWindow) -> Vec<bool> {
    let offset = params.offset();
    (0..row.len())
        .map(|cut| {
            let hw = gather_half_windows(row, cut, window);
            match clutter_estimate(&params.variant, &hw, row[cut]) {
                Some(z) => row[cut] > params.t * z + offset,
                None => false,
            }
        })
        .collect()
}

pub fn run_cfar_naive(scan: &PolarScan, params: &CfarParams, window: CfarWindow) -> Result<PointCloud> {
    scan.expect_unit(PowerUnit::WattSquared)?;
    params.validate(&window)?;
    let geometry = scan.geometry();
    let mut points = Vec::new();
    for (a, row) in scan.rows().enumerate() {
        for (bin, hit) in detect_row_naive(row, params, window).into_iter().enumerate() {
            if hit {
                points.push(Point2::from_polar(a, bin, watts_squared_to_db(row[bin]), geometry));
            }
        }
    }
    Ok(PointCloud::new(points, scan.timestamp()))
}
