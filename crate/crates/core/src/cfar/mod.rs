//! Constant false alarm rate detectors.
//!
//! Every variant thresholds a cell under test (CUT) against `S = T * Z + b`,
//! where `Z` is a clutter-power estimate taken from a reference window of
//! `N` cells split into a leading and a lagging half, separated from the CUT
//! by `g` guard cells on each side. The variants differ only in how `Z` is
//! formed. `b` is zero for everything except BFAR.
//!
//! All estimators here work on squared Watts (a simulated square-law
//! detector). The `clutter_*` functions compute `Z` from scratch for one CUT
//! and are what [`reference::run_cfar_naive`] is built from; [`run_cfar`]
//! produces the same detections with sliding-window bookkeeping.

mod detector;
pub mod reference;

pub use detector::run_cfar;

use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::exact::fsum;

/// Reference-window geometry shared by all CFAR variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfarWindow {
    /// Total reference cells `N`, split evenly between the two halves.
    pub size: usize,
    /// Guard cells on each side of the CUT.
    pub guard: usize,
}

impl Default for CfarWindow {
    fn default() -> Self {
        CfarWindow { size: 100, guard: 5 }
    }
}

impl CfarWindow {
    pub fn new(size: usize, guard: usize) -> Result<Self> {
        let w = CfarWindow { size, guard };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 || self.size % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "reference window size must be even and >= 2, got {}",
                self.size
            )));
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        self.size / 2
    }

    /// Index ranges of the leading and lagging halves for `cut` on an azimuth
    /// of `len` cells, clipped to the array.
    pub fn bounds(&self, len: usize, cut: usize) -> (Range<usize>, Range<usize>) {
        let h = self.half();
        let lead = cut.saturating_sub(self.guard + h)..cut.saturating_sub(self.guard);
        let lag_start = (cut + self.guard + 1).min(len);
        let lag = lag_start..(cut + self.guard + h + 1).min(len);
        (lead, lag)
    }
}

/// The two halves of a reference window, in squared Watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWindows<'a> {
    pub lead: &'a [f64],
    pub lag: &'a [f64],
}

impl<'a> HalfWindows<'a> {
    pub fn len(&self) -> usize {
        self.lead.len() + self.lag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CUTs with an empty half are not tested.
    pub fn both_nonempty(&self) -> bool {
        !self.lead.is_empty() && !self.lag.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = f64> + Clone + 'a {
        self.lead.iter().chain(self.lag.iter()).copied()
    }
}

/// Lead cells `[cut - g - N/2, cut - g)` and lag cells `(cut + g, cut + g + N/2]`,
/// clipped to the azimuth.
pub fn gather_half_windows(row: &[f64], cut_idx: usize, window: CfarWindow) -> HalfWindows<'_> {
    let (lead, lag) = window.bounds(row.len(), cut_idx);
    HalfWindows {
        lead: &row[lead],
        lag: &row[lag],
    }
}

/// Threshold scale for a target false-alarm probability in homogeneous
/// exponential clutter: `T = N (P_fa^(-1/N) - 1)`.
pub fn threshold_scale_from_pfa(p_fa: f64, n: usize) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa <= 1.0) {
        return Err(Error::InvalidParameter(format!("P_fa must lie in (0, 1], got {p_fa}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("reference window size must be >= 1".into()));
    }
    let n = n as f64;
    Ok(n * (p_fa.powf(-1.0 / n) - 1.0))
}

/// Inverse of [`threshold_scale_from_pfa`].
pub fn pfa_from_threshold_scale(t: f64, n: usize) -> f64 {
    let n = n as f64;
    (1.0 + t / n).powf(-n)
}

fn mean(cells: &[f64]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::Precondition("empty reference half-window".into()));
    }
    Ok(fsum(cells) / cells.len() as f64)
}

fn require_both(hw: &HalfWindows) -> Result<()> {
    if !hw.both_nonempty() {
        return Err(Error::Precondition("reference window has an empty half".into()));
    }
    Ok(())
}

/// Arithmetic mean over both halves, using the actual cell count.
pub fn clutter_ca(hw: &HalfWindows) -> Result<f64> {
    if hw.is_empty() {
        return Err(Error::Precondition("empty reference window".into()));
    }
    Ok(fsum_cells(hw) / hw.len() as f64)
}

fn fsum_cells(hw: &HalfWindows) -> f64 {
    crate::exact::fsum_iter(hw.cells())
}

/// Greater of the two half-window means.
pub fn clutter_cago(hw: &HalfWindows) -> Result<f64> {
    require_both(hw)?;
    Ok(mean(hw.lead)?.max(mean(hw.lag)?))
}

/// Smaller of the two half-window means.
pub fn clutter_caso(hw: &HalfWindows) -> Result<f64> {
    require_both(hw)?;
    Ok(mean(hw.lead)?.min(mean(hw.lag)?))
}

/// Interference-switching estimate.
///
/// Cells brighter than `alpha * cut_value` are interferers. If neither half
/// holds more than `max_interferers` of them, `Z` averages the non-interfering
/// cells (all cells if every one interferes). If exactly one half exceeds the
/// limit, `Z` is the mean of that whole half. If both do, `Z` is the plain
/// mean of the window.
pub fn clutter_is(hw: &HalfWindows, cut_value: f64, alpha: f64, max_interferers: usize) -> Result<f64> {
    if hw.is_empty() {
        return Err(Error::Precondition("empty reference window".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let level = alpha * cut_value;
    let lead_hits = hw.lead.iter().filter(|&&x| x > level).count();
    let lag_hits = hw.lag.iter().filter(|&&x| x > level).count();
    match (lead_hits > max_interferers, lag_hits > max_interferers) {
        (false, false) => {
            let kept: Vec<f64> = hw.cells().filter(|&x| x <= level).collect();
            if kept.is_empty() {
                clutter_ca(hw)
            } else {
                Ok(fsum(&kept) / kept.len() as f64)
            }
        }
        (true, false) => mean(hw.lead),
        (false, true) => mean(hw.lag),
        (true, true) => clutter_ca(hw),
    }
}

/// `V_i = n * sum(x^2) / (sum x)^2` over the `n` given cells.
pub fn variability_index(cells: &[f64]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::Precondition("variability index of no cells".into()));
    }
    let s1 = fsum(cells);
    if s1 == 0.0 {
        return Err(Error::Precondition("variability index of all-zero cells".into()));
    }
    let s2 = crate::exact::fsum_iter(cells.iter().map(|x| x * x));
    Ok(vi_from_sums(cells.len(), s1, s2))
}

pub(crate) fn vi_from_sums(n: usize, s1: f64, s2: f64) -> f64 {
    n as f64 * s2 / (s1 * s1)
}

/// Which estimator a VI-CFAR window dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViPath {
    /// Both halves homogeneous with similar means: mean of the whole window.
    Ca,
    /// Only the lead half is homogeneous.
    LeadOnly,
    /// Only the lag half is homogeneous.
    LagOnly,
    /// Both homogeneous but the means differ: clutter edge.
    Cago,
    /// Neither half is homogeneous.
    Caso,
}

/// Classifies from per-half sums. An all-zero half counts as homogeneous.
pub(crate) fn vi_path(
    (n_lead, s1_lead, s2_lead): (usize, f64, f64),
    (n_lag, s1_lag, s2_lag): (usize, f64, f64),
    v: f64,
    r: f64,
) -> ViPath {
    let homogeneous = |n, s1: f64, s2| s1 == 0.0 || vi_from_sums(n, s1, s2) <= v;
    let lead_h = homogeneous(n_lead, s1_lead, s2_lead);
    let lag_h = homogeneous(n_lag, s1_lag, s2_lag);
    let mean_lead = s1_lead / n_lead as f64;
    let mean_lag = s1_lag / n_lag as f64;
    let similar = mean_lag != 0.0 && {
        let ratio = mean_lead / mean_lag;
        1.0 / r < ratio && ratio < r
    };
    match (lead_h, lag_h) {
        (true, true) if similar => ViPath::Ca,
        (true, true) => ViPath::Cago,
        (true, false) => ViPath::LeadOnly,
        (false, true) => ViPath::LagOnly,
        (false, false) => ViPath::Caso,
    }
}

/// Variability-index estimate; `v` bounds homogeneity, `r` bounds the ratio of
/// half-window means.
pub fn clutter_vi(hw: &HalfWindows, v: f64, r: f64) -> Result<f64> {
    require_both(hw)?;
    let sums = |cells: &[f64]| {
        (
            cells.len(),
            fsum(cells),
            crate::exact::fsum_iter(cells.iter().map(|x| x * x)),
        )
    };
    let lead = sums(hw.lead);
    let lag = sums(hw.lag);
    Ok(match vi_path(lead, lag, v, r) {
        ViPath::Ca => clutter_ca(hw)?,
        ViPath::LeadOnly => lead.1 / lead.0 as f64,
        ViPath::LagOnly => lag.1 / lag.0 as f64,
        ViPath::Cago => (lead.1 / lead.0 as f64).max(lag.1 / lag.0 as f64),
        ViPath::Caso => (lead.1 / lead.0 as f64).min(lag.1 / lag.0 as f64),
    })
}

pub(crate) fn quantile_index(n: usize, quantile: f64) -> usize {
    ((quantile * (n - 1) as f64).floor() as usize).min(n - 1)
}

/// Order statistic at `floor(quantile * (n - 1))` of the sorted window; the
/// lower median for even `n` at 0.5.
pub fn clutter_os(hw: &HalfWindows, quantile: f64) -> Result<f64> {
    if hw.is_empty() {
        return Err(Error::Precondition("empty reference window".into()));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile must lie in (0, 1), got {quantile}")));
    }
    let mut cells: Vec<f64> = hw.cells().collect();
    cells.sort_by(f64::total_cmp);
    Ok(cells[quantile_index(cells.len(), quantile)])
}

/// Mean of the sorted window after dropping `trim` cells from each end.
pub fn clutter_tm(hw: &HalfWindows, trim: usize) -> Result<f64> {
    let n = hw.len();
    if 2 * trim >= n {
        return Err(Error::Precondition(format!("cannot trim {trim} cells from each end of {n}")));
    }
    let mut cells: Vec<f64> = hw.cells().collect();
    cells.sort_by(f64::total_cmp);
    Ok(fsum(&cells[trim..n - trim]) / (n - 2 * trim) as f64)
}

/// Minimum-selected cell averaging: a sub-window of `m` cells slides over the
/// concatenated halves, keeping the smaller of its two edge cells at each
/// placement; `Z` is the mean of the kept cells.
pub fn clutter_msca(hw: &HalfWindows, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("sub-window size must be >= 2, got {m}")));
    }
    let u: Vec<f64> = hw.cells().collect();
    if u.len() < m {
        return Err(Error::Precondition(format!(
            "reference window of {} cells is shorter than the sub-window {m}",
            u.len()
        )));
    }
    let mins: Vec<f64> = u.windows(m).map(|w| w[0].min(w[m - 1])).collect();
    Ok(fsum(&mins) / mins.len() as f64)
}

/// CFAR variants and their estimator-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CfarVariant {
    Ca,
    Cago,
    Caso,
    Is { alpha: f64, max_interferers: usize },
    Vi { v: f64, r: f64 },
    Os { quantile: f64 },
    Tm { trim: usize },
    Msca { m: usize },
    /// Static offset in dB, applied as squared Watts.
    Bfar { b_db: f64 },
}

/// A CFAR variant with its scale factor `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarParams {
    pub t: f64,
    pub variant: CfarVariant,
}

impl CfarParams {
    pub fn new(t: f64, variant: CfarVariant) -> Self {
        CfarParams { t, variant }
    }

    /// Additive threshold term in squared Watts.
    pub fn offset(&self) -> f64 {
        match self.variant {
            CfarVariant::Bfar { b_db } => {
                let w = crate::scan::db_to_watts(b_db);
                w * w
            }
            _ => 0.0,
        }
    }

    pub fn validate(&self, window: &CfarWindow) -> Result<()> {
        window.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad(format!("T must be positive, got {}", self.t));
        }
        match self.variant {
            CfarVariant::Is { alpha, .. } if !(alpha > 0.0 && alpha.is_finite()) => {
                bad(format!("alpha must be positive, got {alpha}"))
            }
            CfarVariant::Vi { v, r } if !(v > 0.0 && r > 1.0) => bad(format!("VI needs V > 0 and R > 1, got V={v} R={r}")),
            CfarVariant::Os { quantile } if !(quantile > 0.0 && quantile < 1.0) => {
                bad(format!("quantile must lie in (0, 1), got {quantile}"))
            }
            CfarVariant::Tm { trim } if 2 * trim >= window.size => {
                bad(format!("N_T must be < N/2 = {}, got {trim}", window.half()))
            }
            CfarVariant::Msca { m } if m < 2 || m > window.half() => {
                bad(format!("M must lie in [2, {}], got {m}", window.half()))
            }
            CfarVariant::Bfar { b_db } if b_db.is_nan() || b_db == f64::INFINITY => bad(format!("invalid b = {b_db} dB")),
            _ => Ok(()),
        }
    }
}

/// `Z` for one CUT, or `None` when the CUT is not tested.
pub fn clutter_estimate(variant: &CfarVariant, hw: &HalfWindows, cut_value: f64) -> Option<f64> {
    if !hw.both_nonempty() {
        return None;
    }
    let z = match *variant {
        CfarVariant::Ca | CfarVariant::Bfar { .. } => clutter_ca(hw),
        CfarVariant::Cago => clutter_cago(hw),
        CfarVariant::Caso => clutter_caso(hw),
        CfarVariant::Is { alpha, max_interferers } => clutter_is(hw, cut_value, alpha, max_interferers),
        CfarVariant::Vi { v, r } => clutter_vi(hw, v, r),
        CfarVariant::Os { quantile } => clutter_os(hw, quantile),
        CfarVariant::Tm { trim } => clutter_tm(hw, trim),
        CfarVariant::Msca { m } => clutter_msca(hw, m),
    };
    z.ok()
}
