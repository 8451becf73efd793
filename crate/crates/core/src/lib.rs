//! Lagrange-regularised selection of calibration windows.
//!
//! Goodness-of-fit values from windows of different lengths are not directly
//! comparable: shorter windows overfit more easily. Scanning the window start
//! `t1` at a fixed end `t2`, the normalised cost `chi2_np` drifts roughly
//! linearly with window length. Estimating that drift (`lambda`) from the scan
//! and subtracting it gives `chi2_lambda`, whose minimum marks the start of
//! the regime the model describes.
//!
//! * [`metrics`]: cost definitions, drift estimation, detrending, selection.
//! * [`scan`]: generic shrinking-window scan over any [`scan::ModelFitter`].
//! * [`linreg`]: change-point benchmark with a no-intercept regression.
//! * [`lppls`]: LPPLS model, enslaved linear solve, calibration, bubble scan.
//! * [`synthetic`]: synthetic bubbles with a mirrored prefix.
//! * [`io`]: CSV ingestion, scan requests and output artifacts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod linreg;
pub mod lppls;
pub mod metrics;
pub mod optimize;
pub mod scan;
pub mod series;
pub mod synthetic;

pub use error::{Error, Result};
pub use metrics::{LambdaMode, ScanCurve, TimeIndex};
pub use series::PriceSeries;
