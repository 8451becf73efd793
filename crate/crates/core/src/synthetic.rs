//! Synthetic LPPLS bubbles with a known start.
//!
//! An LPPLS path plus Gaussian noise is generated on `t = 1..=n_bubble`; its
//! first `n_mirror` points are reversed and prepended, so the series falls
//! into the junction and then follows the bubble. The bubble start is index
//! `n_mirror` of the concatenated series.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppls::{lppls_eval, LpplsParams};
use crate::metrics::TimeIndex;
use crate::series::{weekday_calendar, PriceSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBubbleConfig {
    /// Parameters on the bubble's own clock, `t = 1..=n_bubble`.
    pub params: LpplsParams,
    /// Standard deviation of the log-price noise.
    pub sigma: f64,
    pub n_bubble: usize,
    pub n_mirror: usize,
    /// Calendar label of the bubble start (index `n_mirror`).
    pub origin: NaiveDate,
}

impl Default for SyntheticBubbleConfig {
    fn default() -> Self {
        Self {
            params: LpplsParams::black_monday(),
            sigma: 0.03,
            n_bubble: 1100,
            n_mirror: 500,
            origin: NaiveDate::from_ymd_opt(1911, 7, 1).expect("valid date"),
        }
    }
}

impl SyntheticBubbleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mirror > self.n_bubble {
            return Err(Error::InvalidConfig(format!(
                "mirror length {} exceeds bubble length {}",
                self.n_mirror, self.n_bubble
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig("sigma must be nonnegative".into()));
        }
        if !(self.params.tc > self.n_bubble as f64) {
            return Err(Error::Domain(format!(
                "critical time {} must lie beyond the last bubble day {}",
                self.params.tc, self.n_bubble
            )));
        }
        Ok(())
    }

    /// Index of the bubble start in the concatenated series.
    pub fn true_start_index(&self) -> TimeIndex {
        self.n_mirror as TimeIndex
    }

    /// Bubble-clock `t` maps to series index `t + n_mirror - 1`.
    pub fn params_on_series_axis(&self) -> LpplsParams {
        self.params.shifted(self.n_mirror as f64 - 1.0)
    }
}

/// `lppls(t) + sigma * eps(t)` for `t = 1..=n_bubble`.
///
/// Noise: ChaCha8 seeded with `seed`, one `StandardNormal` draw per day in
/// time order.
pub fn generate_bubble_path(config: &SyntheticBubbleConfig, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=config.n_bubble)
        .map(|t| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            Ok(lppls_eval(&config.params, t as f64)? + config.sigma * eps)
        })
        .collect()
}

/// `reverse(bubble[..n_mirror]) ++ bubble`.
pub fn mirror_and_concatenate(bubble: &[f64], n_mirror: usize) -> Result<Vec<f64>> {
    if n_mirror > bubble.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot mirror {n_mirror} of {} points",
            bubble.len()
        )));
    }
    Ok(bubble[..n_mirror]
        .iter()
        .rev()
        .chain(bubble)
        .copied()
        .collect())
}

/// The full synthetic series on indices `0..n_mirror + n_bubble`, with a
/// weekday calendar placing `config.origin` at the bubble start.
pub fn synthetic_bubble(config: &SyntheticBubbleConfig, seed: u64) -> Result<PriceSeries> {
    let path = generate_bubble_path(config, seed)?;
    let values = mirror_and_concatenate(&path, config.n_mirror)?;
    let dates = weekday_calendar(config.origin, config.n_mirror, values.len())
        .ok_or_else(|| Error::InvalidConfig("calendar out of range".into()))?;
    PriceSeries::with_dates(dates, values)
}
