use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::error::{Error, Result};
use crate::metrics::TimeIndex;

/// Observations on a consecutive integer time axis.
///
/// Element `k` sits at time index `origin + k`. Series loaded from market data
/// use `origin = 0` so the index counts trading days; calendar gaps collapse.
/// Dates are optional because synthetic experiments live on a bare index axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    origin: TimeIndex,
    values: Vec<f64>,
    dates: Option<Vec<NaiveDate>>,
}

impl PriceSeries {
    pub fn from_values(origin: TimeIndex, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series values"));
        }
        Ok(Self {
            origin,
            values,
            dates: None,
        })
    }

    pub fn with_dates(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidConfig(format!(
                "{} dates for {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let mut s = Self::from_values(0, values)?;
        s.dates = Some(dates);
        Ok(s)
    }

    /// Shift the index axis so the first observation sits at `origin`.
    pub fn with_origin(mut self, origin: TimeIndex) -> Self {
        self.origin = origin;
        self
    }

    /// Attach dates to an undated series.
    pub fn attach_dates(self, dates: Vec<NaiveDate>) -> Result<Self> {
        let origin = self.origin;
        Ok(Self::with_dates(dates, self.values)?.with_origin(origin))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn origin(&self) -> TimeIndex {
        self.origin
    }

    pub fn first_index(&self) -> TimeIndex {
        self.origin
    }

    pub fn last_index(&self) -> TimeIndex {
        self.origin + self.values.len() as TimeIndex - 1
    }

    pub fn contains(&self, t: TimeIndex) -> bool {
        !self.is_empty() && t >= self.first_index() && t <= self.last_index()
    }

    /// Values on the inclusive range `[t1, t2]`.
    pub fn segment(&self, t1: TimeIndex, t2: TimeIndex) -> Result<&[f64]> {
        if t1 > t2 || !self.contains(t1) || !self.contains(t2) {
            return Err(Error::SeriesTooShort {
                need_lo: t1,
                need_hi: t2,
                have_lo: self.first_index(),
                have_hi: self.last_index(),
            });
        }
        let lo = (t1 - self.origin) as usize;
        let hi = (t2 - self.origin) as usize;
        Ok(&self.values[lo..=hi])
    }

    pub fn value_at(&self, t: TimeIndex) -> Option<f64> {
        self.contains(t)
            .then(|| self.values[(t - self.origin) as usize])
    }

    pub fn date_at(&self, t: TimeIndex) -> Option<NaiveDate> {
        let dates = self.dates.as_ref()?;
        self.contains(t).then(|| dates[(t - self.origin) as usize])
    }

    /// Index of an observed date. Dates that are not observations are an
    /// error; no snapping to a neighbouring day is done.
    pub fn index_of(&self, date: NaiveDate) -> Result<TimeIndex> {
        let dates = self
            .dates
            .as_ref()
            .ok_or_else(|| Error::UnknownDate(format!("{date} (series has no calendar)")))?;
        dates
            .binary_search(&date)
            .map(|k| self.origin + k as TimeIndex)
            .map_err(|_| Error::UnknownDate(date.to_string()))
    }

    /// Calendar date for a possibly fractional or out-of-range index.
    ///
    /// Inside the series this is the observed date of the rounded index.
    /// Beyond either end the calendar is extended by weekdays.
    pub fn date_for_index(&self, t: f64) -> Option<NaiveDate> {
        let dates = self.dates.as_ref()?;
        if !t.is_finite() || dates.is_empty() {
            return None;
        }
        let k = (t.round() as TimeIndex) - self.origin;
        let last = dates.len() as TimeIndex - 1;
        if k < 0 {
            step_weekdays(dates[0], k)
        } else if k > last {
            step_weekdays(dates[last as usize], k - last)
        } else {
            Some(dates[k as usize])
        }
    }
}

fn is_weekday(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Move `steps` weekdays forward (positive) or backward (negative).
pub fn step_weekdays(from: NaiveDate, steps: i64) -> Option<NaiveDate> {
    let mut d = from;
    let mut left = steps.unsigned_abs();
    while left > 0 {
        d = if steps > 0 {
            d.checked_add_days(Days::new(1))?
        } else {
            d.checked_sub_days(Days::new(1))?
        };
        if is_weekday(d) {
            left -= 1;
        }
    }
    Some(d)
}

/// A Monday-to-Friday calendar of `len` dates in which position `anchor_pos`
/// falls on the first weekday on or after `anchor`.
pub fn weekday_calendar(
    anchor: NaiveDate,
    anchor_pos: usize,
    len: usize,
) -> Option<Vec<NaiveDate>> {
    let mut a = anchor;
    while !is_weekday(a) {
        a = a.succ_opt()?;
    }
    (0..len)
        .map(|k| step_weekdays(a, k as i64 - anchor_pos as i64))
        .collect()
}
