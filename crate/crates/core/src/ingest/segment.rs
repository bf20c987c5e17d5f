use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SeriesFrame;

/// Training / context / forecast layout in calendar dates. The context
/// block is the `context_days` trading rows immediately before
/// `forecast_start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationSpec {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub context_days: usize,
    pub forecast_start: NaiveDate,
    pub forecast_end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segments {
    pub train: Range<usize>,
    pub context: Range<usize>,
    pub forecast: Range<usize>,
}

impl Segments {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.context.len(), self.forecast.len())
    }
}

/// Index of the first trading date on or after `date`.
pub fn snap_to_trading_day(dates: &[NaiveDate], date: NaiveDate) -> Option<usize> {
    let i = dates.partition_point(|d| *d < date);
    (i < dates.len()).then_some(i)
}

/// Index of the last trading date on or before `date`.
fn snap_back(dates: &[NaiveDate], date: NaiveDate) -> Option<usize> {
    dates.partition_point(|d| *d <= date).checked_sub(1)
}

pub fn segment(frame: &SeriesFrame, spec: &SegmentationSpec) -> Result<Segments> {
    if spec.train_start > spec.train_end {
        return Err(Error::invalid("train_start is after train_end"));
    }
    if spec.train_end >= spec.forecast_start {
        return Err(Error::invalid(format!(
            "train_end {} must precede forecast_start {}",
            spec.train_end, spec.forecast_start
        )));
    }
    if spec.forecast_start > spec.forecast_end {
        return Err(Error::invalid("forecast_start is after forecast_end"));
    }
    let dates = frame.dates();
    let no_rows = |what: &str| Error::invalid(format!("{what} segment has no trading dates in frame"));

    let train_lo = snap_to_trading_day(dates, spec.train_start).ok_or_else(|| no_rows("train"))?;
    let train_hi = snap_back(dates, spec.train_end).ok_or_else(|| no_rows("train"))? + 1;
    if train_lo >= train_hi {
        return Err(no_rows("train"));
    }
    let fc_lo = snap_to_trading_day(dates, spec.forecast_start).ok_or_else(|| no_rows("forecast"))?;
    let fc_hi = snap_back(dates, spec.forecast_end).map(|i| i + 1).unwrap_or(0);
    if fc_lo >= fc_hi {
        return Err(no_rows("forecast"));
    }
    let ctx_lo = fc_lo.checked_sub(spec.context_days).ok_or_else(|| {
        Error::invalid(format!(
            "context of {} rows does not fit before forecast start (row {fc_lo})",
            spec.context_days
        ))
    })?;
    if ctx_lo < train_hi {
        return Err(Error::invalid(format!(
            "context rows {ctx_lo}..{fc_lo} overlap training rows {train_lo}..{train_hi}"
        )));
    }
    Ok(Segments {
        train: train_lo..train_hi,
        context: ctx_lo..fc_lo,
        forecast: fc_lo..fc_hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;

    fn frame(n: usize) -> SeriesFrame {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..n).map(|i| start + Days::new(i as u64)).collect();
        SeriesFrame::new(dates, vec!["x".into()], vec![vec![0.0; n]]).unwrap()
    }

    #[test]
    fn hundred_rows_split() {
        let f = frame(100);
        let dt = |i: usize| f.dates()[i];
        let spec = SegmentationSpec {
            train_start: dt(0),
            train_end: dt(69),
            context_days: 15,
            forecast_start: dt(85),
            forecast_end: dt(99),
        };
        let s = segment(&f, &spec).unwrap();
        assert_eq!(s.sizes(), (70, 15, 15));
        assert_eq!(s.context.end, s.forecast.start);
    }

    #[test]
    fn train_end_after_forecast_start_is_error() {
        let f = frame(100);
        let dt = |i: usize| f.dates()[i];
        let spec = SegmentationSpec {
            train_start: dt(0),
            train_end: dt(90),
            context_days: 0,
            forecast_start: dt(85),
            forecast_end: dt(99),
        };
        assert!(segment(&f, &spec).is_err());
    }

    #[test]
    fn overlapping_context_is_error() {
        let f = frame(100);
        let dt = |i: usize| f.dates()[i];
        let spec = SegmentationSpec {
            train_start: dt(0),
            train_end: dt(79),
            context_days: 15,
            forecast_start: dt(85),
            forecast_end: dt(99),
        };
        assert!(segment(&f, &spec).is_err());
    }

    #[test]
    fn long_layout_is_accepted() {
        // 1520 training rows, 300 context rows, 155 forecast rows.
        let f = frame(1520 + 300 + 155);
        let dt = |i: usize| f.dates()[i];
        let spec = SegmentationSpec {
            train_start: dt(0),
            train_end: dt(1519),
            context_days: 300,
            forecast_start: dt(1820),
            forecast_end: dt(1974),
        };
        let s = segment(&f, &spec).unwrap();
        assert_eq!(s.sizes(), (1520, 300, 155));
    }

    #[test]
    fn dates_between_rows_snap_forward() {
        // Weekday-only calendar: Mon 2024-01-01 .. Fri 2024-01-12.
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let dates: Vec<NaiveDate> = (0..12)
            .map(|i| start + Days::new(i))
            .filter(|d| chrono::Datelike::weekday(d).number_from_monday() <= 5)
            .collect();
        let n = dates.len();
        let f = SeriesFrame::new(dates, vec!["x".into()], vec![vec![0.0; n]]).unwrap();
        let sat = NaiveDate::from_ymd_opt(2024, 1, 6).unwrap();
        assert_eq!(snap_to_trading_day(f.dates(), sat), Some(5));
        let spec = SegmentationSpec {
            train_start: start,
            train_end: sat,
            context_days: 0,
            forecast_start: NaiveDate::from_ymd_opt(2024, 1, 7).unwrap(),
            forecast_end: NaiveDate::from_ymd_opt(2024, 1, 12).unwrap(),
        };
        let s = segment(&f, &spec).unwrap();
        assert_eq!(s.sizes(), (5, 0, 5));
    }
}
