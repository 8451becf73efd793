//! Cost metrics for comparing fits across nested windows.
//!
//! For a fixed right end point `t2`, each calibration window `[t1, t2]` yields
//! a residual vector. Three costs are derived from it:
//!
//! * `chi2`: the plain sum of squared residuals,
//! * `chi2_np`: `chi2 / (n - p)` with `n` points and `p` degrees of freedom,
//! * `chi2_lambda`: `chi2_np - lambda * n`, where `lambda` is the linear drift
//!   of `chi2_np` against window length estimated from the scan itself.
//!
//! Subtracting the drift makes the costs of windows of different sizes
//! comparable, and the window start minimising `chi2_lambda` is the selected
//! regime start `tau`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer position on the observation axis (trading days, sample index).
pub type TimeIndex = i64;

/// Residuals `y_data - y_model` over the inclusive window `[t1, t2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    values: Vec<f64>,
    t1: TimeIndex,
    t2: TimeIndex,
}

impl ResidualVector {
    pub fn new(values: Vec<f64>, t1: TimeIndex, t2: TimeIndex) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyResiduals);
        }
        if t2 < t1 || (t2 - t1 + 1) as usize != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} residuals for window [{t1}, {t2}]",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("residuals"));
        }
        Ok(Self { values, t1, t2 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window(&self) -> (TimeIndex, TimeIndex) {
        (self.t1, self.t2)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cost(&self, p: usize) -> Result<CostTriple> {
        CostTriple::from_residuals(&self.values, p)
    }
}

/// Sum of squared residuals.
pub fn chi2(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    let mut acc = 0.0;
    for &r in residuals {
        if !r.is_finite() {
            return Err(Error::NonFinite("residuals"));
        }
        acc += r * r;
    }
    Ok(acc)
}

/// Sum of squared residuals divided by `n - p`.
pub fn chi2_np(residuals: &[f64], p: usize) -> Result<f64> {
    let n = residuals.len();
    if n <= p {
        return Err(Error::DegenerateWindow { n, p });
    }
    Ok(chi2(residuals)? / (n - p) as f64)
}

/// Regularised cost `chi2_np - lambda * window_len`.
pub fn chi2_lambda(chi2_np_value: f64, lambda: f64, window_len: usize) -> Result<f64> {
    if window_len == 0 {
        return Err(Error::Domain("window length must be positive".into()));
    }
    if !chi2_np_value.is_finite() || !lambda.is_finite() {
        return Err(Error::NonFinite("chi2_lambda inputs"));
    }
    Ok(chi2_np_value - lambda * window_len as f64)
}

/// The three cost values of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTriple {
    pub chi2: f64,
    pub chi2_np: f64,
    pub n: usize,
    pub p: usize,
}

impl CostTriple {
    pub fn from_residuals(residuals: &[f64], p: usize) -> Result<Self> {
        let n = residuals.len();
        if n <= p {
            return Err(Error::DegenerateWindow { n, p });
        }
        let chi2 = chi2(residuals)?;
        Ok(Self {
            chi2,
            chi2_np: chi2 / (n - p) as f64,
            n,
            p,
        })
    }

    /// Cost recorded for a window whose fit did not produce residuals.
    pub fn failed(n: usize, p: usize) -> Self {
        Self {
            chi2: f64::INFINITY,
            chi2_np: f64::INFINITY,
            n,
            p,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.chi2.is_finite() && self.chi2_np.is_finite()
    }
}

/// Outcome of fitting one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    /// Converged fit that passed every qualification check.
    Ok,
    /// Fit produced costs but was rejected by the model's filters.
    Filtered,
    /// No usable fit (optimizer failure, degenerate basis).
    Failed,
}

impl EntryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryStatus::Ok => "ok",
            EntryStatus::Filtered => "filtered",
            EntryStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry<P = ()> {
    pub t1: TimeIndex,
    pub window_len: usize,
    pub cost: CostTriple,
    pub status: EntryStatus,
    pub payload: Option<P>,
}

impl<P> ScanEntry<P> {
    /// Whether the entry takes part in drift estimation and minimisation.
    pub fn is_usable(&self) -> bool {
        self.status == EntryStatus::Ok && self.cost.is_finite()
    }
}

/// Costs of every window `[t1, t2]` of one scan, ordered by `t1` ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCurve<P = ()> {
    t2: TimeIndex,
    p: usize,
    entries: Vec<ScanEntry<P>>,
}

impl ScanCurve {
    /// Build a curve from bare `(t1, chi2_np)` pairs; `chi2` is back-computed.
    pub fn from_chi2_np(t2: TimeIndex, p: usize, points: &[(TimeIndex, f64)]) -> Result<Self> {
        let entries = points
            .iter()
            .map(|&(t1, np)| {
                let n = (t2 - t1 + 1).max(0) as usize;
                ScanEntry {
                    t1,
                    window_len: n,
                    cost: CostTriple {
                        chi2: np * n.saturating_sub(p) as f64,
                        chi2_np: np,
                        n,
                        p,
                    },
                    status: EntryStatus::Ok,
                    payload: None,
                }
            })
            .collect();
        Self::new(t2, p, entries)
    }
}

impl<P> ScanCurve<P> {
    pub fn new(t2: TimeIndex, p: usize, entries: Vec<ScanEntry<P>>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].t1 >= w[1].t1 {
                return Err(Error::GridMismatch(format!(
                    "t1 values not strictly ascending at {} -> {}",
                    w[0].t1, w[1].t1
                )));
            }
        }
        for e in &entries {
            if e.t1 > t2 || (t2 - e.t1 + 1) as usize != e.window_len {
                return Err(Error::GridMismatch(format!(
                    "entry t1 = {} has window_len {} for t2 = {t2}",
                    e.t1, e.window_len
                )));
            }
            if e.window_len <= p {
                return Err(Error::DegenerateWindow { n: e.window_len, p });
            }
        }
        Ok(Self { t2, p, entries })
    }

    pub fn t2(&self) -> TimeIndex {
        self.t2
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn entries(&self) -> &[ScanEntry<P>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_usable(&self) -> usize {
        self.entries.iter().filter(|e| e.is_usable()).count()
    }

    pub fn t1_values(&self) -> impl Iterator<Item = TimeIndex> + '_ {
        self.entries.iter().map(|e| e.t1)
    }

    pub fn signature(&self) -> GridSignature {
        GridSignature {
            t2: self.t2,
            t1_first: self.entries.first().map_or(self.t2, |e| e.t1),
            t1_last: self.entries.last().map_or(self.t2, |e| e.t1),
            n_entries: self.entries.len(),
        }
    }
}

/// Identifies the `t1` grid a lambda estimate was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSignature {
    pub t2: TimeIndex,
    pub t1_first: TimeIndex,
    pub t1_last: TimeIndex,
    pub n_entries: usize,
}

/// Abscissa and intercept convention for the drift regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// Ordinary least squares of `chi2_np` on window length, with intercept.
    #[default]
    Intercept,
    /// Least squares through the origin of `chi2_np` on the entry's position
    /// in the scan (0, 1, 2, ... in `t1` order).
    ZeroIntercept,
}

impl std::str::FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intercept" | "with-intercept" => Ok(Self::Intercept),
            "zero-intercept" => Ok(Self::ZeroIntercept),
            other => Err(Error::InvalidConfig(format!(
                "unknown lambda mode `{other}`"
            ))),
        }
    }
}

/// Drift of `chi2_np` across a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub intercept: f64,
    /// Sum of squared residuals of the drift regression.
    pub residual_of_fit: f64,
    pub n_points: usize,
    pub mode: LambdaMode,
    pub grid: GridSignature,
}

impl LambdaEstimate {
    /// A zero drift, used to reduce `chi2_lambda` to `chi2_np`.
    pub fn zero<P>(curve: &ScanCurve<P>) -> Self {
        Self {
            lambda: 0.0,
            intercept: 0.0,
            residual_of_fit: 0.0,
            n_points: curve.n_usable(),
            mode: LambdaMode::Intercept,
            grid: curve.signature(),
        }
    }
}

/// Estimate the drift `lambda` of `chi2_np` over the usable entries of `curve`.
///
/// In [`LambdaMode::Intercept`] the slope is taken against `window_len`, so
/// `chi2_np - lambda * window_len` has zero linear trend. Using `window_len`
/// rather than `t2 - t1` shifts the abscissa by one, which leaves the slope
/// unchanged.
pub fn estimate_lambda<P>(curve: &ScanCurve<P>, mode: LambdaMode) -> Result<LambdaEstimate> {
    let points: Vec<(f64, f64)> = curve
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_usable())
        .map(|(i, e)| {
            let x = match mode {
                LambdaMode::Intercept => e.window_len as f64,
                LambdaMode::ZeroIntercept => i as f64,
            };
            (x, e.cost.chi2_np)
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let (lambda, intercept) = match mode {
        LambdaMode::Intercept => {
            let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
            let my = points.iter().map(|p| p.1).sum::<f64>() / n;
            let (mut sxx, mut sxy) = (0.0, 0.0);
            for &(x, y) in &points {
                sxx += (x - mx) * (x - mx);
                sxy += (x - mx) * (y - my);
            }
            if sxx == 0.0 {
                return Err(Error::Singular("all usable windows share one length"));
            }
            let slope = sxy / sxx;
            (slope, my - slope * mx)
        }
        LambdaMode::ZeroIntercept => {
            let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
            if sxx == 0.0 {
                return Err(Error::Singular("zero abscissa"));
            }
            (sxy / sxx, 0.0)
        }
    };
    let residual_of_fit = points
        .iter()
        .map(|&(x, y)| {
            let r = y - intercept - lambda * x;
            r * r
        })
        .sum();
    Ok(LambdaEstimate {
        lambda,
        intercept,
        residual_of_fit,
        n_points: points.len(),
        mode,
        grid: curve.signature(),
    })
}

/// A scan curve together with its drift and regularised costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularisedCurve<P = ()> {
    pub curve: ScanCurve<P>,
    pub lambda: LambdaEstimate,
    /// `chi2_np - lambda * window_len` per entry; NaN for unusable entries.
    pub chi2_lambda: Vec<f64>,
}

pub fn detrend_curve<P>(
    curve: ScanCurve<P>,
    lambda: LambdaEstimate,
) -> Result<RegularisedCurve<P>> {
    if lambda.grid != curve.signature() {
        return Err(Error::GridMismatch(format!(
            "lambda estimated on {:?}, curve is {:?}",
            lambda.grid,
            curve.signature()
        )));
    }
    let chi2_lambda = curve
        .entries
        .iter()
        .map(|e| {
            if e.is_usable() {
                chi2_lambda(e.cost.chi2_np, lambda.lambda, e.window_len)
            } else {
                Ok(f64::NAN)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularisedCurve {
        curve,
        lambda,
        chi2_lambda,
    })
}

/// Index of the smallest finite value; ties go to the first occurrence.
pub fn argmin_first(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

impl<P> RegularisedCurve<P> {
    /// Window start with the smallest regularised cost.
    ///
    /// Entries are in ascending `t1`, so ties resolve to the earliest start,
    /// i.e. the largest window.
    pub fn select_tau(&self) -> Result<(TimeIndex, f64)> {
        argmin_first(self.chi2_lambda.iter().copied())
            .map(|(i, v)| (self.curve.entries[i].t1, v))
            .ok_or(Error::InsufficientData { needed: 1, got: 0 })
    }

    /// Window start with the smallest unregularised `chi2_np`.
    pub fn select_tau_np(&self) -> Result<(TimeIndex, f64)> {
        argmin_first(self.curve.entries.iter().map(|e| {
            if e.is_usable() {
                e.cost.chi2_np
            } else {
                f64::NAN
            }
        }))
        .map(|(i, v)| (self.curve.entries[i].t1, v))
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CURVE_CSV_HEADER)?;
        for (e, &lam) in self.curve.entries.iter().zip(&self.chi2_lambda) {
            out.write_record([
                e.t1.to_string(),
                e.window_len.to_string(),
                fmt_cell(e.cost.chi2),
                fmt_cell(e.cost.chi2_np),
                fmt_cell(lam),
                e.status.as_str().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_document(&self) -> CurveDocument {
        CurveDocument {
            t2: self.curve.t2,
            p: self.curve.p,
            lambda: self.lambda,
            tau: self.select_tau().ok().map(|t| t.0),
            entries: self
                .curve
                .entries
                .iter()
                .zip(&self.chi2_lambda)
                .map(|(e, &lam)| CurveRow {
                    t1: e.t1,
                    window_len: e.window_len,
                    chi2: finite_or_none(e.cost.chi2),
                    chi2_np: finite_or_none(e.cost.chi2_np),
                    chi2_lambda: finite_or_none(lam),
                    status: e.status,
                })
                .collect(),
        }
    }
}

/// Column layout of the scan-curve CSV.
pub const CURVE_CSV_HEADER: [&str; 6] = [
    "t1",
    "window_len",
    "chi2",
    "chi2_np",
    "chi2_lambda",
    "status",
];

/// JSON form of a regularised scan curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub t2: TimeIndex,
    pub p: usize,
    pub lambda: LambdaEstimate,
    pub tau: Option<TimeIndex>,
    pub entries: Vec<CurveRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t1: TimeIndex,
    pub window_len: usize,
    pub chi2: Option<f64>,
    pub chi2_np: Option<f64>,
    pub chi2_lambda: Option<f64>,
    pub status: EntryStatus,
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Non-finite values are written as empty cells.
pub(crate) fn fmt_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Scale values by the largest magnitude so they fit in `[-1, 1]`
/// (`[0, 1]` for nonnegative costs). Plot output only.
pub fn normalize_curve(values: &[f64]) -> Result<Vec<f64>> {
    let scale = values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Domain("cannot normalise an all-zero curve".into()));
    }
    Ok(values.iter().map(|v| v / scale).collect())
}
