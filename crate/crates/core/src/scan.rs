//! Polar radar scans, power units and the polar/Cartesian mapping.
//!
//! A scan is one rotation of a spinning FMCW radar: `num_azimuths` rays, each
//! holding `num_bins` power readings. The sensor reports 8-bit half-dB levels;
//! extractors work in dB, Watts or squared Watts depending on the method, so
//! every [`PolarScan`] carries its [`PowerUnit`] and conversions check it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Unit of the values stored in a [`PolarScan`].
///
/// The conversion chain `RawHalfDb -> Decibel -> Watt -> WattSquared` is
/// strictly monotone at every step, so the ordering of bins never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerUnit {
    /// 8-bit sensor levels, one level per half dB.
    RawHalfDb,
    Decibel,
    Watt,
    /// Output of a simulated square-law detector.
    WattSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    pub num_azimuths: usize,
    pub num_bins: usize,
    /// Meters per range bin.
    pub range_resolution: f64,
    /// Angle of azimuth 0 in radians.
    pub azimuth_0_angle: f64,
    /// Rotations per second.
    pub rotation_rate: f64,
}

impl ScanGeometry {
    pub fn new(num_azimuths: usize, num_bins: usize, range_resolution: f64) -> Result<Self> {
        let g = ScanGeometry {
            num_azimuths,
            num_bins,
            range_resolution,
            azimuth_0_angle: 0.0,
            rotation_rate: 4.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_azimuths < 3 {
            return Err(Error::InvalidParameter(format!(
                "num_azimuths must be >= 3, got {}",
                self.num_azimuths
            )));
        }
        if self.num_bins < 1 {
            return Err(Error::InvalidParameter("num_bins must be >= 1".into()));
        }
        if !(self.range_resolution > 0.0 && self.range_resolution.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "range_resolution must be positive, got {}",
                self.range_resolution
            )));
        }
        if !(self.rotation_rate > 0.0 && self.rotation_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rotation_rate must be positive, got {}",
                self.rotation_rate
            )));
        }
        if !self.azimuth_0_angle.is_finite() {
            return Err(Error::InvalidParameter("azimuth_0_angle must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.num_azimuths * self.num_bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointing angle of azimuth `i`.
    pub fn azimuth_angle(&self, i: usize) -> f64 {
        self.azimuth_0_angle + 2.0 * PI * i as f64 / self.num_azimuths as f64
    }

    /// Range of the center of bin `i`.
    pub fn bin_range(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.range_resolution
    }

    pub fn max_range(&self) -> f64 {
        self.num_bins as f64 * self.range_resolution
    }
}

/// One radar rotation: a dense azimuth-major grid of power values.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarScan {
    geometry: ScanGeometry,
    unit: PowerUnit,
    timestamp: f64,
    values: Vec<f64>,
}

impl PolarScan {
    pub fn new(geometry: ScanGeometry, unit: PowerUnit, timestamp: f64, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.len() {
            return Err(Error::Dimension(format!(
                "{}x{} geometry needs {} values, got {}",
                geometry.num_azimuths,
                geometry.num_bins,
                geometry.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "scan values must be finite and non-negative, found {v}"
            )));
        }
        Ok(PolarScan {
            geometry,
            unit,
            timestamp,
            values,
        })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn unit(&self) -> PowerUnit {
        self.unit
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_azimuths(&self) -> usize {
        self.geometry.num_azimuths
    }

    pub fn num_bins(&self) -> usize {
        self.geometry.num_bins
    }

    pub fn row(&self, azimuth: usize) -> &[f64] {
        let n = self.geometry.num_bins;
        &self.values[azimuth * n..(azimuth + 1) * n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.geometry.num_bins)
    }

    pub fn get(&self, azimuth: usize, bin: usize) -> f64 {
        self.values[azimuth * self.geometry.num_bins + bin]
    }

    pub fn expect_unit(&self, expected: PowerUnit) -> Result<()> {
        if self.unit != expected {
            return Err(Error::WrongUnit {
                expected,
                found: self.unit,
            });
        }
        Ok(())
    }

    /// Applies `f` elementwise and relabels the unit.
    pub fn map(&self, unit: PowerUnit, f: impl Fn(f64) -> f64) -> Result<PolarScan> {
        PolarScan::new(
            self.geometry,
            unit,
            self.timestamp,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Multiplies every value by `gamma`, keeping the unit.
    pub fn scaled(&self, gamma: f64) -> Result<PolarScan> {
        self.map(self.unit, |v| v * gamma)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A grid of 8-bit half-dB levels as delivered by the sensor.
pub fn decode_raw(levels: &[u8], geometry: ScanGeometry, timestamp: f64) -> Result<PolarScan> {
    if levels.len() != geometry.len() {
        return Err(Error::Dimension(format!(
            "{}x{} geometry needs {} levels, got {}",
            geometry.num_azimuths,
            geometry.num_bins,
            geometry.len(),
            levels.len()
        )));
    }
    PolarScan::new(
        geometry,
        PowerUnit::Decibel,
        timestamp,
        levels.iter().map(|&l| level_to_db(l)).collect(),
    )
}

pub fn level_to_db(level: u8) -> f64 {
    level as f64 / 2.0
}

/// Inverse of [`decode_raw`]: dB values must sit on the half-dB lattice in `[0, 127.5]`.
pub fn encode_raw(scan: &PolarScan) -> Result<Vec<u8>> {
    let to_level = |v: f64| -> Result<u8> {
        let l = v * 2.0;
        if l.fract() != 0.0 || !(0.0..=255.0).contains(&l) {
            return Err(Error::InvalidParameter(format!(
                "{v} dB is not representable as an 8-bit half-dB level"
            )));
        }
        Ok(l as u8)
    };
    match scan.unit() {
        PowerUnit::Decibel => scan.values().iter().map(|&v| to_level(v)).collect(),
        PowerUnit::RawHalfDb => scan.values().iter().map(|&v| to_level(v / 2.0)).collect(),
        other => Err(Error::WrongUnit {
            expected: PowerUnit::Decibel,
            found: other,
        }),
    }
}

/// Relabels a raw-level scan as dB.
pub fn raw_to_decibel(scan: &PolarScan) -> Result<PolarScan> {
    scan.expect_unit(PowerUnit::RawHalfDb)?;
    scan.map(PowerUnit::Decibel, |l| l / 2.0)
}

/// `p_W = 10^(p_dB / 10)`.
pub fn to_watts(scan: &PolarScan) -> Result<PolarScan> {
    scan.expect_unit(PowerUnit::Decibel)?;
    scan.map(PowerUnit::Watt, db_to_watts)
}

pub fn square_law(scan: &PolarScan) -> Result<PolarScan> {
    scan.expect_unit(PowerUnit::Watt)?;
    scan.map(PowerUnit::WattSquared, |w| w * w)
}

/// Decibel straight to squared Watts, the working unit of every CFAR variant.
pub fn to_watts_squared(scan: &PolarScan) -> Result<PolarScan> {
    scan.expect_unit(PowerUnit::Decibel)?;
    // Scans on the half-dB lattice hit a table of the same values.
    let table: &[f64; 256] = HALF_DB_WATTS_SQUARED.get_or_init(|| {
        std::array::from_fn(|l| {
            let w = db_to_watts(l as f64 / 2.0);
            w * w
        })
    });
    scan.map(PowerUnit::WattSquared, |db| {
        let l = db * 2.0;
        if l.fract() == 0.0 && (0.0..=255.0).contains(&l) {
            table[l as usize]
        } else {
            let w = db_to_watts(db);
            w * w
        }
    })
}

static HALF_DB_WATTS_SQUARED: std::sync::OnceLock<[f64; 256]> = std::sync::OnceLock::new();

pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Power in dB of a squared-Watt value.
pub fn watts_squared_to_db(w2: f64) -> f64 {
    5.0 * w2.log10()
}

/// Bin-center Cartesian position of `(azimuth_idx, range_bin)` in the sensor frame.
pub fn polar_to_cartesian(azimuth_idx: usize, range_bin: usize, geometry: &ScanGeometry) -> Result<(f64, f64)> {
    if azimuth_idx >= geometry.num_azimuths || range_bin >= geometry.num_bins {
        return Err(Error::OutOfRange(format!(
            "({azimuth_idx}, {range_bin}) outside {}x{}",
            geometry.num_azimuths, geometry.num_bins
        )));
    }
    Ok(polar_to_cartesian_unchecked(azimuth_idx, range_bin, geometry))
}

pub(crate) fn polar_to_cartesian_unchecked(azimuth_idx: usize, range_bin: usize, geometry: &ScanGeometry) -> (f64, f64) {
    let r = geometry.bin_range(range_bin);
    let (s, c) = geometry.azimuth_angle(azimuth_idx).sin_cos();
    (r * c, r * s)
}

/// One extracted point with its polar provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
    /// Power in dB, whatever unit the extractor worked in.
    pub intensity: f64,
    pub azimuth_idx: usize,
    pub range_bin: usize,
}

impl Point2 {
    /// Point at the center of a polar cell.
    pub fn from_polar(azimuth_idx: usize, range_bin: usize, intensity: f64, geometry: &ScanGeometry) -> Self {
        let (x, y) = polar_to_cartesian_unchecked(azimuth_idx, range_bin, geometry);
        Point2 {
            x,
            y,
            intensity,
            azimuth_idx,
            range_bin,
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point2>,
    pub source_timestamp: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point2>, source_timestamp: f64) -> Self {
        PointCloud {
            points,
            source_timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorted `(azimuth_idx, range_bin)` provenance pairs.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut c: Vec<_> = self.points.iter().map(|p| (p.azimuth_idx, p.range_bin)).collect();
        c.sort_unstable();
        c
    }

    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(Point2::xy).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(a: usize, b: usize, res: f64) -> ScanGeometry {
        ScanGeometry::new(a, b, res).unwrap()
    }

    #[test]
    fn decode_levels_are_half_db() {
        let g = geom(3, 1, 0.0596);
        let s = decode_raw(&[0, 255, 64], g, 0.0).unwrap();
        assert_eq!(s.unit(), PowerUnit::Decibel);
        assert_eq!(s.values(), &[0.0, 127.5, 32.0]);
    }

    #[test]
    fn decode_dimension_mismatch() {
        let g = geom(3, 2, 0.0596);
        assert!(matches!(decode_raw(&[0; 5], g, 0.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn watt_conversions() {
        let g = geom(3, 1, 1.0);
        let db = PolarScan::new(g, PowerUnit::Decibel, 0.0, vec![0.0, 10.0, 30.0]).unwrap();
        let w = to_watts(&db).unwrap();
        assert_eq!(w.values()[0], 1.0);
        assert!((w.values()[1] - 10.0).abs() < 1e-12);
        assert!((w.values()[2] - 1000.0).abs() < 1e-9);

        let w = PolarScan::new(g, PowerUnit::Watt, 0.0, vec![1.0, 3.0, 0.0]).unwrap();
        assert_eq!(square_law(&w).unwrap().values(), &[1.0, 9.0, 0.0]);
    }

    #[test]
    fn conversions_check_units() {
        let g = geom(3, 1, 1.0);
        let w = PolarScan::new(g, PowerUnit::Watt, 0.0, vec![1.0; 3]).unwrap();
        assert!(matches!(to_watts(&w), Err(Error::WrongUnit { .. })));
        let db = PolarScan::new(g, PowerUnit::Decibel, 0.0, vec![1.0; 3]).unwrap();
        assert!(matches!(square_law(&db), Err(Error::WrongUnit { .. })));
    }

    #[test]
    fn polar_to_cartesian_bin_centers() {
        let g = geom(400, 3360, 0.0596);
        let (x, y) = polar_to_cartesian(0, 0, &g).unwrap();
        assert!((x - 0.0298).abs() < 1e-15 && y == 0.0);
        let (x, y) = polar_to_cartesian(100, 99, &g).unwrap();
        assert!(x.abs() < 1e-12);
        assert!((y - 5.9302).abs() < 1e-12);
        assert!(polar_to_cartesian(400, 0, &g).is_err());
        assert!(polar_to_cartesian(0, 3360, &g).is_err());
    }

    #[test]
    fn opposite_azimuths_reflect() {
        let g = geom(4, 10, 0.5);
        let (x0, y0) = polar_to_cartesian(0, 7, &g).unwrap();
        let (x2, y2) = polar_to_cartesian(2, 7, &g).unwrap();
        assert!((x0 + x2).abs() < 1e-12 && (y0 + y2).abs() < 1e-12);
    }

    #[test]
    fn geometry_validation() {
        assert!(ScanGeometry::new(2, 10, 0.1).is_err());
        assert!(ScanGeometry::new(3, 0, 0.1).is_err());
        assert!(ScanGeometry::new(3, 1, 0.0).is_err());
    }

    #[test]
    fn rejects_negative_values() {
        let g = geom(3, 1, 1.0);
        assert!(PolarScan::new(g, PowerUnit::Watt, 0.0, vec![1.0, -1.0, 0.0]).is_err());
        assert!(PolarScan::new(g, PowerUnit::Watt, 0.0, vec![1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn encode_rejects_off_lattice() {
        let g = geom(3, 1, 1.0);
        let s = PolarScan::new(g, PowerUnit::Decibel, 0.0, vec![0.25, 1.0, 1.0]).unwrap();
        assert!(encode_raw(&s).is_err());
        let s = PolarScan::new(g, PowerUnit::Decibel, 0.0, vec![128.0, 1.0, 1.0]).unwrap();
        assert!(encode_raw(&s).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn raw_roundtrip(levels in proptest::collection::vec(any::<u8>(), 12)) {
                let g = geom(4, 3, 0.0438);
                let s = decode_raw(&levels, g, 1.5).unwrap();
                prop_assert_eq!(encode_raw(&s).unwrap(), levels);
            }

            #[test]
            fn conversions_preserve_order(a in 0u8..=255, b in 0u8..=255) {
                let g = geom(3, 1, 1.0);
                let s = decode_raw(&[a, b, 0], g, 0.0).unwrap();
                let w = to_watts(&s).unwrap();
                let w2 = square_law(&w).unwrap();
                let ord = |v: &[f64]| v[0].partial_cmp(&v[1]).unwrap();
                prop_assert_eq!(ord(s.values()), a.cmp(&b));
                prop_assert_eq!(ord(w.values()), a.cmp(&b));
                prop_assert_eq!(ord(w2.values()), a.cmp(&b));
            }

            #[test]
            fn cartesian_range_bounded(az in 0usize..400, bin in 0usize..500) {
                let g = geom(400, 500, 0.0596);
                let (x, y) = polar_to_cartesian(az, bin, &g).unwrap();
                let r = x.hypot(y);
                prop_assert!(r >= 0.0 && r <= g.max_range() + 1e-9);
            }
        }
    }
}
