//! Shrinking-window scans at a fixed pseudo-present time `t2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    detrend_curve, estimate_lambda, CostTriple, EntryStatus, LambdaEstimate, LambdaMode,
    RegularisedCurve, ScanCurve, ScanEntry, TimeIndex,
};
use crate::series::PriceSeries;

/// Window starts for one scan, ascending, all sharing the end point `t2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanGrid {
    t2: TimeIndex,
    t1_values: Vec<TimeIndex>,
    min_window: usize,
    step: usize,
}

/// Grid of windows `[t1, t2]` whose lengths run from `min_window` upward in
/// increments of `step`, stopping at `max_window`.
///
/// The grid is anchored on the shortest window, so `max_window` itself is
/// only present when `max_window - min_window` is a multiple of `step`.
pub fn build_grid(
    t2: TimeIndex,
    max_window: usize,
    min_window: usize,
    step: usize,
) -> Result<ScanGrid> {
    if step == 0 {
        return Err(Error::InvalidConfig("grid step must be at least 1".into()));
    }
    if min_window == 0 || max_window < min_window {
        return Err(Error::InvalidConfig(format!(
            "window bounds min = {min_window}, max = {max_window} are inconsistent"
        )));
    }
    let n = (max_window - min_window) / step + 1;
    let t1_values = (0..n)
        .rev()
        .map(|k| t2 - (min_window + k * step) as TimeIndex + 1)
        .collect();
    Ok(ScanGrid {
        t2,
        t1_values,
        min_window,
        step,
    })
}

impl ScanGrid {
    pub fn t2(&self) -> TimeIndex {
        self.t2
    }

    pub fn t1_values(&self) -> &[TimeIndex] {
        &self.t1_values
    }

    pub fn min_window(&self) -> usize {
        self.min_window
    }

    pub fn max_window(&self) -> usize {
        self.t1_values
            .first()
            .map_or(0, |&t1| (self.t2 - t1 + 1) as usize)
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn len(&self) -> usize {
        self.t1_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t1_values.is_empty()
    }

    /// Drop window starts before `first`, keeping the short end intact.
    pub fn clipped_to(&self, first: TimeIndex) -> ScanGrid {
        ScanGrid {
            t2: self.t2,
            t1_values: self
                .t1_values
                .iter()
                .copied()
                .filter(|&t1| t1 >= first)
                .collect(),
            min_window: self.min_window,
            step: self.step,
        }
    }
}

/// Data handed to a fitter for one window.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub t1: TimeIndex,
    pub t2: TimeIndex,
    /// Time index of each observation, as `f64`.
    pub times: &'a [f64],
    pub values: &'a [f64],
}

impl Window<'_> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A fitted window: the model's parameters and its residuals on the window.
#[derive(Debug, Clone)]
pub struct WindowFit<P> {
    pub params: P,
    pub residuals: Vec<f64>,
    /// `false` when the fit is valid numerically but fails the model's
    /// qualification filters.
    pub accepted: bool,
}

/// A model that can be calibrated on one window.
pub trait ModelFitter: Sync {
    type Params: Send;

    /// Degrees of freedom `p` used in `chi2_np`.
    fn dof(&self) -> usize;

    /// Fit one window. Must be a pure function of `window` and `seed`.
    fn fit(&self, window: &Window<'_>, seed: u64) -> Result<WindowFit<Self::Params>>;
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-task seed derived from a base seed and a task key (window start,
/// Monte Carlo run number). Stable across releases.
pub fn derive_seed(base: u64, key: i64) -> u64 {
    mix64(base ^ mix64(key as u64))
}

/// Fit every window of `grid` and assemble the curve in `t1` order.
///
/// Windows are fitted in parallel on the current rayon pool; results do not
/// depend on the pool size.
pub fn run_scan<F: ModelFitter>(
    series: &PriceSeries,
    grid: &ScanGrid,
    fitter: &F,
    base_seed: u64,
) -> Result<ScanCurve<F::Params>> {
    let p = fitter.dof();
    if grid.min_window < p + 2 {
        return Err(Error::InvalidConfig(format!(
            "minimum window {} must be at least p + 2 = {}",
            grid.min_window,
            p + 2
        )));
    }
    let Some(&first) = grid.t1_values.first() else {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    };
    let t2 = grid.t2;
    let values = series.segment(first, t2)?;
    let times: Vec<f64> = (first..=t2).map(|t| t as f64).collect();

    let entries: Vec<ScanEntry<F::Params>> = grid
        .t1_values
        .par_iter()
        .map(|&t1| {
            let off = (t1 - first) as usize;
            let window = Window {
                t1,
                t2,
                times: &times[off..],
                values: &values[off..],
            };
            let n = window.len();
            let fitted = fitter
                .fit(&window, derive_seed(base_seed, t1))
                .and_then(|fit| Ok((CostTriple::from_residuals(&fit.residuals, p)?, fit)));
            match fitted {
                Ok((cost, fit)) => ScanEntry {
                    t1,
                    window_len: n,
                    cost,
                    status: if fit.accepted {
                        EntryStatus::Ok
                    } else {
                        EntryStatus::Filtered
                    },
                    payload: Some(fit.params),
                },
                Err(_) => ScanEntry {
                    t1,
                    window_len: n,
                    cost: CostTriple::failed(n, p),
                    status: EntryStatus::Failed,
                    payload: None,
                },
            }
        })
        .collect();
    ScanCurve::new(t2, p, entries)
}

/// Everything produced while selecting the window start for one `t2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Endogenised<P> {
    pub tau: TimeIndex,
    pub tau_cost: f64,
    pub lambda: LambdaEstimate,
    pub curve: RegularisedCurve<P>,
}

/// Detrend a finished scan and select the window start.
pub fn regularise<P>(curve: ScanCurve<P>, mode: LambdaMode) -> Result<Endogenised<P>> {
    let lambda = estimate_lambda(&curve, mode)?;
    let curve = detrend_curve(curve, lambda)?;
    let (tau, tau_cost) = curve.select_tau()?;
    Ok(Endogenised {
        tau,
        tau_cost,
        lambda,
        curve,
    })
}

/// Scan, estimate the drift, detrend and select `tau`.
pub fn endogenise_t1<F: ModelFitter>(
    series: &PriceSeries,
    grid: &ScanGrid,
    fitter: &F,
    mode: LambdaMode,
    base_seed: u64,
) -> Result<Endogenised<F::Params>> {
    regularise(run_scan(series, grid, fitter, base_seed)?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ConstantModel;

    impl ModelFitter for ConstantModel {
        type Params = f64;

        fn dof(&self) -> usize {
            1
        }

        fn fit(&self, w: &Window<'_>, _seed: u64) -> Result<WindowFit<f64>> {
            let mean = w.values.iter().sum::<f64>() / w.len() as f64;
            Ok(WindowFit {
                params: mean,
                residuals: w.values.iter().map(|v| v - mean).collect(),
                accepted: true,
            })
        }
    }

    /// Fails on even window starts, rejects multiples of three.
    struct Picky;

    impl ModelFitter for Picky {
        type Params = ();

        fn dof(&self) -> usize {
            1
        }

        fn fit(&self, w: &Window<'_>, _seed: u64) -> Result<WindowFit<()>> {
            if w.t1 % 2 == 0 {
                return Err(Error::Singular("test"));
            }
            Ok(WindowFit {
                params: (),
                residuals: vec![1.0; w.len()],
                accepted: w.t1 % 3 != 0,
            })
        }
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(1, 202, 4, 1).unwrap();
        assert_eq!(g.len(), 199);
        assert_eq!(g.t1_values()[0], -200);
        assert_eq!(*g.t1_values().last().unwrap(), -2);

        let g = build_grid(0, 1600, 30, 3).unwrap();
        assert_eq!(g.len(), 524);
        assert_eq!(*g.t1_values().last().unwrap(), -29);
        assert_eq!(g.max_window(), 1599);
        assert!(g.t1_values().windows(2).all(|w| w[1] - w[0] == 3));

        let g = build_grid(10, 50, 50, 3).unwrap();
        assert_eq!(g.t1_values(), &[-39]);

        assert!(build_grid(0, 10, 20, 1).is_err());
        assert!(build_grid(0, 20, 10, 0).is_err());
    }

    #[test]
    fn constant_series_scans_to_zero_cost() {
        let s = PriceSeries::from_values(0, vec![2.5; 40]).unwrap();
        let g = build_grid(39, 40, 5, 2).unwrap();
        let c = run_scan(&s, &g, &ConstantModel, 0).unwrap();
        assert_eq!(c.len(), g.len());
        assert!(c
            .entries()
            .iter()
            .all(|e| e.cost.chi2 == 0.0 && e.status == EntryStatus::Ok));
        assert!(c
            .entries()
            .iter()
            .all(|e| e.t1 + e.window_len as i64 - 1 == 39));
    }

    #[test]
    fn failures_are_kept_and_flagged() {
        let s = PriceSeries::from_values(0, vec![0.0; 30]).unwrap();
        let g = build_grid(29, 30, 5, 1).unwrap();
        let c = run_scan(&s, &g, &Picky, 0).unwrap();
        assert_eq!(c.len(), g.len());
        for e in c.entries() {
            let expect = if e.t1 % 2 == 0 {
                EntryStatus::Failed
            } else if e.t1 % 3 == 0 {
                EntryStatus::Filtered
            } else {
                EntryStatus::Ok
            };
            assert_eq!(e.status, expect, "t1 = {}", e.t1);
        }
    }

    #[test]
    fn scan_rejects_short_series_and_tiny_windows() {
        let s = PriceSeries::from_values(0, vec![0.0; 30]).unwrap();
        let g = build_grid(29, 40, 5, 1).unwrap();
        assert!(matches!(
            run_scan(&s, &g, &ConstantModel, 0),
            Err(Error::SeriesTooShort { .. })
        ));
        let g = build_grid(29, 20, 2, 1).unwrap();
        assert!(matches!(
            run_scan(&s, &g, &ConstantModel, 0),
            Err(Error::InvalidConfig(_))
        ));
        let clipped = build_grid(29, 40, 5, 1).unwrap().clipped_to(0);
        assert_eq!(clipped.max_window(), 30);
        assert!(run_scan(&s, &clipped, &ConstantModel, 0).is_ok());
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, -3), derive_seed(7, -3));
        assert_ne!(derive_seed(7, -3), derive_seed(7, -2));
        assert_ne!(derive_seed(7, -3), derive_seed(8, -3));
        // pinned: changing this breaks reproducibility of published runs
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
    }
}
