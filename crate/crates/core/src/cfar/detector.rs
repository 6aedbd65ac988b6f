use rayon::prelude::*;
use std::cmp::Ordering;
use std::ops::Range;

use super::{clutter_estimate, gather_half_windows, quantile_index, vi_from_sums, CfarParams, CfarVariant, CfarWindow};
use crate::error::Result;
use crate::scan::{watts_squared_to_db, Point2, PointCloud, PolarScan, PowerUnit};

/// Runs a CFAR variant over every azimuth of a squared-Watt scan.
///
/// CUTs whose leading or lagging half-window is empty are not tested.
/// Detections carry their CUT power in dB.
pub fn run_cfar(scan: &PolarScan, params: &CfarParams, window: CfarWindow) -> Result<PointCloud> {
    scan.expect_unit(PowerUnit::WattSquared)?;
    params.validate(&window)?;
    let geometry = scan.geometry();
    let rows: Vec<&[f64]> = scan.rows().collect();
    let per_row: Vec<Vec<Point2>> = rows
        .par_iter()
        .enumerate()
        .map(|(a, row)| {
            let mut hits = Vec::new();
            detect_row(row, params, window, &mut hits);
            hits.into_iter()
                .map(|bin| Point2::from_polar(a, bin, watts_squared_to_db(row[bin]), geometry))
                .collect()
        })
        .collect();
    Ok(PointCloud::new(per_row.into_iter().flatten().collect(), scan.timestamp()))
}

// The sliding statistics below are plain f64 running sums that carry a
// bound on their rounding error. A CUT whose value clears the approximate
// threshold by more than the bound is decided on the spot; the rare CUT
// inside the band goes to the reference estimator, which sums exactly. The
// result is bit-identical to the reference at close to plain-float cost.

const U: f64 = f64::EPSILON / 2.0;
/// Relative slack covering the handful of roundings between a window sum
/// and the final comparison.
const SLACK: f64 = 1e-12;

/// Appends the detected bins of one azimuth to `hits`, in increasing order.
pub(crate) fn detect_row(row: &[f64], params: &CfarParams, window: CfarWindow, hits: &mut Vec<usize>) {
    let mut state = RowState::new(row, &params.variant);
    let offset = params.offset();
    for cut in 0..row.len() {
        let (lead, lag) = window.bounds(row.len(), cut);
        if lead.is_empty() || lag.is_empty() {
            continue;
        }
        let detected = match state.estimate(cut, lead, lag) {
            Estimate::Exact(Some(z)) => row[cut] > params.t * z + offset,
            Estimate::Exact(None) => false,
            Estimate::Bounded { z, err } => match decide(row[cut], params.t, offset, z, err) {
                Some(d) => d,
                None => reference(row, cut, params, window, offset),
            },
            Estimate::Undecided => reference(row, cut, params, window, offset),
        };
        if detected {
            hits.push(cut);
        }
    }
}

fn reference(row: &[f64], cut: usize, params: &CfarParams, window: CfarWindow, offset: f64) -> bool {
    let hw = gather_half_windows(row, cut, window);
    match clutter_estimate(&params.variant, &hw, row[cut]) {
        Some(z) => row[cut] > params.t * z + offset,
        None => false,
    }
}

/// `Some(detected)` when `cut` lies clearly on one side of `t * z + offset`
/// for every `z` within `err` of the estimate.
fn decide(cut: f64, t: f64, offset: f64, z: f64, err: f64) -> Option<bool> {
    let thr = t * z + offset;
    let slack = t * err + SLACK * (t * z.abs() + offset.abs());
    if cut > thr + slack {
        Some(true)
    } else if cut < thr - slack {
        Some(false)
    } else {
        None
    }
}

enum Estimate {
    /// Bit-identical to the reference estimator; `None` means the CUT is
    /// not tested.
    Exact(Option<f64>),
    /// Within `err` of the reference value, before rounding slack.
    Bounded { z: f64, err: f64 },
    /// The estimator's own branch could not be settled.
    Undecided,
}

/// Running sum over a forward-moving index range with an error bound.
#[derive(Debug, Default)]
struct BoundedSum {
    start: usize,
    end: usize,
    value: f64,
    err: f64,
}

impl BoundedSum {
    fn advance(&mut self, data: &[f64], start: usize, end: usize) {
        let end = end.max(start);
        if start >= self.end {
            *self = BoundedSum {
                start,
                end: start,
                value: 0.0,
                err: 0.0,
            };
        }
        while self.start < start {
            self.value -= data[self.start];
            self.err += 2.0 * U * self.value.abs();
            self.start += 1;
        }
        while self.end < end {
            self.value += data[self.end];
            self.err += 2.0 * U * self.value.abs();
            self.end += 1;
        }
        // A large value leaving the window strands its rounding error on a
        // small remainder; start over.
        if self.err > 1e-9 * self.value.abs() {
            let cells = &data[self.start..self.end];
            self.value = cells.iter().sum();
            self.err = bounded_sum(cells).1;
        }
    }

    fn len(&self) -> usize {
        self.end - self.start
    }

    fn mean(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (self.value / n, self.err / n)
    }

    /// True when the exact sum is known to be zero.
    fn exactly_zero(&self) -> bool {
        self.value == 0.0 && self.err == 0.0
    }
}

/// Sequential sum with a bound on its error.
fn bounded_sum(cells: &[f64]) -> (f64, f64) {
    let (s, abs) = cells.iter().fold((0.0, 0.0), |(s, a), &x| (s + x, a + x.abs()));
    (s, 2.0 * (cells.len() as f64 + 1.0) * U * abs)
}

fn combine(parts: &[(f64, f64)], n: usize) -> Estimate {
    let (s, e) = parts.iter().fold((0.0, 0.0), |(s, e), p| (s + p.0, e + p.1));
    Estimate::Bounded {
        z: s / n as f64,
        err: e / n as f64,
    }
}

/// Three-way comparison of an uncertain `x` against `bound`:
/// `Some(Less)` means certainly below, `None` too close to call.
fn compare(x: f64, err: f64, bound: f64) -> Option<Ordering> {
    let slack = err + SLACK * (x.abs() + bound.abs());
    if x + slack < bound {
        Some(Ordering::Less)
    } else if x - slack > bound {
        Some(Ordering::Greater)
    } else {
        None
    }
}

/// Incremental window statistics for one azimuth.
struct RowState<'a> {
    row: &'a [f64],
    variant: CfarVariant,
    lead: BoundedSum,
    lag: BoundedSum,
    // VI: squared cells with their own sums.
    squares: Vec<f64>,
    lead_sq: BoundedSum,
    lag_sq: BoundedSum,
    // OS / TM.
    sorted: SortedWindow,
    // MSCA: min of the two edge cells for every sub-window placement.
    pair_mins: Vec<f64>,
    lead_pairs: BoundedSum,
    lag_pairs: BoundedSum,
    scratch: Vec<f64>,
}

impl<'a> RowState<'a> {
    fn new(row: &'a [f64], variant: &CfarVariant) -> Self {
        let squares = match variant {
            CfarVariant::Vi { .. } => row.iter().map(|x| x * x).collect(),
            _ => Vec::new(),
        };
        let pair_mins = match *variant {
            CfarVariant::Msca { m } if row.len() >= m => row.windows(m).map(|w| w[0].min(w[m - 1])).collect(),
            _ => Vec::new(),
        };
        RowState {
            row,
            variant: *variant,
            lead: BoundedSum::default(),
            lag: BoundedSum::default(),
            squares,
            lead_sq: BoundedSum::default(),
            lag_sq: BoundedSum::default(),
            sorted: SortedWindow::default(),
            pair_mins,
            lead_pairs: BoundedSum::default(),
            lag_pairs: BoundedSum::default(),
            scratch: Vec::new(),
        }
    }

    fn slide(&mut self, lead: &Range<usize>, lag: &Range<usize>) {
        self.lead.advance(self.row, lead.start, lead.end);
        self.lag.advance(self.row, lag.start, lag.end);
    }

    fn union(&self) -> Estimate {
        combine(
            &[(self.lead.value, self.lead.err), (self.lag.value, self.lag.err)],
            self.lead.len() + self.lag.len(),
        )
    }

    fn estimate(&mut self, cut: usize, lead: Range<usize>, lag: Range<usize>) -> Estimate {
        let n = lead.len() + lag.len();
        match self.variant {
            CfarVariant::Ca | CfarVariant::Bfar { .. } => {
                self.slide(&lead, &lag);
                self.union()
            }
            CfarVariant::Cago | CfarVariant::Caso => {
                self.slide(&lead, &lag);
                let (ml, el) = self.lead.mean();
                let (mg, eg) = self.lag.mean();
                let z = if matches!(self.variant, CfarVariant::Cago) {
                    ml.max(mg)
                } else {
                    ml.min(mg)
                };
                Estimate::Bounded { z, err: el.max(eg) }
            }
            CfarVariant::Is { alpha, max_interferers } => {
                self.slide(&lead, &lag);
                let level = alpha * self.row[cut];
                let lead_cells = &self.row[lead];
                let lag_cells = &self.row[lag];
                let lead_hits = lead_cells.iter().filter(|&&x| x > level).count();
                let lag_hits = lag_cells.iter().filter(|&&x| x > level).count();
                match (lead_hits > max_interferers, lag_hits > max_interferers) {
                    (false, false) if lead_hits + lag_hits == 0 || lead_hits + lag_hits == n => self.union(),
                    (false, false) => {
                        self.scratch.clear();
                        self.scratch
                            .extend(lead_cells.iter().chain(lag_cells).filter(|&&x| x <= level));
                        combine(&[bounded_sum(&self.scratch)], self.scratch.len())
                    }
                    (true, false) => combine(&[(self.lead.value, self.lead.err)], self.lead.len()),
                    (false, true) => combine(&[(self.lag.value, self.lag.err)], self.lag.len()),
                    (true, true) => self.union(),
                }
            }
            CfarVariant::Vi { v, r } => {
                self.slide(&lead, &lag);
                self.lead_sq.advance(&self.squares, lead.start, lead.end);
                self.lag_sq.advance(&self.squares, lag.start, lag.end);
                self.vi(v, r).unwrap_or(Estimate::Undecided)
            }
            CfarVariant::Os { quantile } => {
                self.sorted.advance(self.row, lead, lag);
                Estimate::Exact(Some(self.sorted.cells[quantile_index(n, quantile)]))
            }
            CfarVariant::Tm { trim } => {
                self.sorted.advance(self.row, lead, lag);
                if 2 * trim >= n {
                    return Estimate::Exact(None);
                }
                combine(&[bounded_sum(&self.sorted.cells[trim..n - trim])], n - 2 * trim)
            }
            CfarVariant::Msca { m } => self.msca(m, lead, lag),
        }
    }

    /// Settles the VI branch from bounded sums, or `None` if any of its
    /// comparisons is too close to call.
    fn vi(&self, v: f64, r: f64) -> Option<Estimate> {
        let homogeneous = |s1: &BoundedSum, s2: &BoundedSum| -> Option<bool> {
            if s1.exactly_zero() {
                return Some(true);
            }
            let lo = s1.value - s1.err;
            if !(lo > 0.0 && s2.value > 0.0) {
                return None;
            }
            let vi = vi_from_sums(s1.len(), s1.value, s2.value);
            let rel = s2.err / s2.value + 3.0 * s1.err / lo;
            Some(compare(vi, vi * rel, v)? != Ordering::Greater)
        };
        let lead_h = homogeneous(&self.lead, &self.lead_sq)?;
        let lag_h = homogeneous(&self.lag, &self.lag_sq)?;
        let (ml, el) = self.lead.mean();
        let (mg, eg) = self.lag.mean();
        let lead_part = [(self.lead.value, self.lead.err)];
        let lag_part = [(self.lag.value, self.lag.err)];
        Some(match (lead_h, lag_h) {
            (true, true) => {
                let similar = if self.lag.exactly_zero() {
                    false
                } else {
                    let (lo_l, lo_g) = (ml - el, mg - eg);
                    if !(lo_g > 0.0 && lo_l >= 0.0) {
                        return None;
                    }
                    let ratio = ml / mg;
                    let err = ratio * (el / lo_l.max(f64::MIN_POSITIVE) + eg / lo_g);
                    let err = if ml == 0.0 && el == 0.0 { 0.0 } else { err };
                    compare(ratio, err, 1.0 / r)? == Ordering::Greater && compare(ratio, err, r)? == Ordering::Less
                };
                if similar {
                    self.union()
                } else {
                    Estimate::Bounded {
                        z: ml.max(mg),
                        err: el.max(eg),
                    }
                }
            }
            (true, false) => combine(&lead_part, self.lead.len()),
            (false, true) => combine(&lag_part, self.lag.len()),
            (false, false) => Estimate::Bounded {
                z: ml.min(mg),
                err: el.max(eg),
            },
        })
    }

    // Edge pairs fully inside one half come from sliding sums over the
    // precomputed pair minima; the (at most m - 1) pairs straddling the guard
    // gap are summed per CUT.
    fn msca(&mut self, m: usize, lead: Range<usize>, lag: Range<usize>) -> Estimate {
        let (nl, ng) = (lead.len(), lag.len());
        let n = nl + ng;
        if n < m {
            return Estimate::Exact(None);
        }
        let pair_end = |r: &Range<usize>| (r.end + 1).saturating_sub(m).max(r.start);
        self.lead_pairs.advance(&self.pair_mins, lead.start, pair_end(&lead));
        self.lag_pairs.advance(&self.pair_mins, lag.start, pair_end(&lag));

        self.scratch.clear();
        let first_cross = (nl + 1).saturating_sub(m);
        let last_cross = nl.min(n + 1 - m);
        for j in first_cross..last_cross {
            let a = self.row[lead.start + j];
            let b = self.row[lag.start + (j + m - 1 - nl)];
            self.scratch.push(a.min(b));
        }
        let total = self.lead_pairs.len() + self.lag_pairs.len() + self.scratch.len();
        debug_assert_eq!(total, n + 1 - m);
        combine(
            &[
                (self.lead_pairs.value, self.lead_pairs.err),
                (self.lag_pairs.value, self.lag_pairs.err),
                bounded_sum(&self.scratch),
            ],
            total,
        )
    }
}

/// Sorted multiset of the cells in the current reference window.
#[derive(Default)]
struct SortedWindow {
    cells: Vec<f64>,
    lead: Range<usize>,
    lag: Range<usize>,
}

impl SortedWindow {
    fn advance(&mut self, row: &[f64], lead: Range<usize>, lag: Range<usize>) {
        let old_lead = std::mem::replace(&mut self.lead, lead.clone());
        let old_lag = std::mem::replace(&mut self.lag, lag.clone());
        self.shift(row, old_lead, lead);
        self.shift(row, old_lag, lag);
    }

    fn shift(&mut self, row: &[f64], old: Range<usize>, new: Range<usize>) {
        for i in old.start..new.start.min(old.end) {
            let pos = self.cells.partition_point(|x| x.total_cmp(&row[i]) == Ordering::Less);
            debug_assert_eq!(self.cells[pos].to_bits(), row[i].to_bits());
            self.cells.remove(pos);
        }
        for i in old.end.max(new.start)..new.end {
            let pos = self.cells.partition_point(|x| x.total_cmp(&row[i]) == Ordering::Less);
            self.cells.insert(pos, row[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_sum_tracks_exact_value() {
        let data = [1.0, 3e25, 0.5, 2.0, 7.0, 1e-3];
        let mut s = BoundedSum::default();
        for start in 0..data.len() {
            let end = (start + 3).min(data.len());
            s.advance(&data, start, end);
            let exact = crate::exact::fsum(&data[start..end]);
            assert!((s.value - exact).abs() <= s.err, "{start}: {} vs {exact} (err {})", s.value, s.err);
            assert!(s.err <= 1e-9 * exact);
        }
    }

    #[test]
    fn decide_defers_near_threshold() {
        assert_eq!(decide(10.0, 2.0, 0.0, 4.0, 0.0), Some(true));
        assert_eq!(decide(7.0, 2.0, 0.0, 4.0, 0.0), Some(false));
        assert_eq!(decide(8.0, 2.0, 0.0, 4.0, 0.0), None);
        assert_eq!(decide(8.5, 2.0, 0.0, 4.0, 0.5), None);
    }
}
