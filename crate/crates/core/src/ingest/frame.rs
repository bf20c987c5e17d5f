use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

/// Dated, aligned multivariate series. Missing cells hold `NaN` and are
/// flagged in a parallel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    missing: Vec<Vec<bool>>,
}

impl SeriesFrame {
    /// Builds a complete frame (no missing cells). Non-finite values are
    /// rejected.
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let missing = columns.iter().map(|c| vec![false; c.len()]).collect();
        for (name, col) in names.iter().zip(&columns) {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column {name}")));
            }
        }
        Self::with_missing(dates, names, columns, missing)
    }

    pub fn with_missing(
        dates: Vec<NaiveDate>,
        names: Vec<String>,
        mut columns: Vec<Vec<f64>>,
        missing: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if names.len() != columns.len() || names.len() != missing.len() {
            return Err(Error::Shape(format!(
                "{} names, {} columns, {} masks",
                names.len(),
                columns.len(),
                missing.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate column name {name}")));
            }
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate(w[1]));
            }
            if w[1] < w[0] {
                return Err(Error::invalid("dates must be strictly increasing"));
            }
        }
        for ((name, col), mask) in names.iter().zip(&mut columns).zip(&missing) {
            if col.len() != dates.len() || mask.len() != dates.len() {
                return Err(Error::Shape(format!(
                    "column {name} has {} values for {} dates",
                    col.len(),
                    dates.len()
                )));
            }
            for (v, &m) in col.iter_mut().zip(mask) {
                if m {
                    *v = f64::NAN;
                }
            }
        }
        Ok(Self {
            dates,
            names,
            columns,
            missing,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, idx: usize) -> &[f64] {
        &self.columns[idx]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[col][row]
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        (!self.missing[col][row]).then(|| self.columns[col][row])
    }

    pub fn is_complete(&self) -> bool {
        self.missing.iter().all(|m| m.iter().all(|&x| !x))
    }

    /// Row-major copy of one row.
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn select(&self, names: &[impl AsRef<str>]) -> Result<Self> {
        let mut cols = Vec::with_capacity(names.len());
        let mut masks = Vec::with_capacity(names.len());
        let mut out_names = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let idx = self
                .column_index(name)
                .ok_or_else(|| Error::invalid(format!("unknown column {name}")))?;
            cols.push(self.columns[idx].clone());
            masks.push(self.missing[idx].clone());
            out_names.push(name.to_string());
        }
        Self::with_missing(self.dates.clone(), out_names, cols, masks)
    }

    pub fn slice_rows(&self, rows: Range<usize>) -> Self {
        Self {
            dates: self.dates[rows.clone()].to_vec(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[rows.clone()].to_vec()).collect(),
            missing: self.missing.iter().map(|m| m[rows.clone()].to_vec()).collect(),
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.dates.len() {
            return Err(Error::Shape(format!(
                "column {name} has {} values for {} dates",
                values.len(),
                self.dates.len()
            )));
        }
        if self.column_index(&name).is_some() {
            return Err(Error::invalid(format!("duplicate column name {name}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("column {name}")));
        }
        self.missing.push(vec![false; values.len()]);
        self.columns.push(values);
        self.names.push(name);
        Ok(())
    }

    /// Frame with the same dates and columns from `other` appended.
    pub fn hstack(&self, other: &SeriesFrame) -> Result<Self> {
        if self.dates != other.dates {
            return Err(Error::Shape("hstack requires identical dates".into()));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut cols = self.columns.clone();
        cols.extend(other.columns.iter().cloned());
        let mut masks = self.missing.clone();
        masks.extend(other.missing.iter().cloned());
        Self::with_missing(self.dates.clone(), names, cols, masks)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (r, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.format("%Y-%m-%d").to_string()];
            for c in 0..self.columns.len() {
                rec.push(match self.value(r, c) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::invalid(format!("csv flush: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Loads a CSV with a header row. `value_columns = None` takes every column
/// other than the date column.
pub fn load_series_csv(
    path: &Path,
    date_column: &str,
    value_columns: Option<&[&str]>,
) -> Result<SeriesFrame> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series_csv(file, path, date_column, value_columns)
}

pub fn read_series_csv<R: Read>(
    reader: R,
    source: &Path,
    date_column: &str,
    value_columns: Option<&[&str]>,
) -> Result<SeriesFrame> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| parse_err(1, format!("missing date column {date_column}")))?;
    let selected: Vec<(usize, String)> = match value_columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers
                    .iter()
                    .position(|h| h == *c)
                    .map(|i| (i, c.to_string()))
                    .ok_or_else(|| parse_err(1, format!("missing column {c}")))
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };

    let mut rows: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let raw_date = rec
            .get(date_idx)
            .ok_or_else(|| parse_err(line, "missing date field".into()))?;
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date {raw_date:?}: {e}")))?;
        let mut values = Vec::with_capacity(selected.len());
        for (i, name) in &selected {
            let raw = rec
                .get(*i)
                .ok_or_else(|| parse_err(line, format!("missing field {name}")))?;
            if raw.is_empty() {
                values.push(None);
            } else {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad number {raw:?} in column {name}")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("non-finite value in column {name}")));
                }
                values.push(Some(v));
            }
        }
        if rows.insert(date, values).is_some() {
            return Err(Error::DuplicateDate(date));
        }
    }

    let dates: Vec<NaiveDate> = rows.keys().copied().collect();
    let mut columns = vec![Vec::with_capacity(dates.len()); selected.len()];
    let mut missing = vec![Vec::with_capacity(dates.len()); selected.len()];
    for values in rows.values() {
        for (j, v) in values.iter().enumerate() {
            columns[j].push(v.unwrap_or(f64::NAN));
            missing[j].push(v.is_none());
        }
    }
    SeriesFrame::with_missing(
        dates,
        selected.into_iter().map(|(_, n)| n).collect(),
        columns,
        missing,
    )
}

pub fn write_series_csv(frame: &SeriesFrame, path: &Path) -> Result<()> {
    write_atomic(path, frame.to_csv_string()?.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    /// Union of dates; gaps carry the previous value. Leading rows that
    /// cannot be filled are dropped.
    ForwardFill,
    /// Only dates where every column has a value.
    DropIncomplete,
}

pub fn align_and_fill(frames: &[SeriesFrame], policy: FillPolicy) -> Result<SeriesFrame> {
    if frames.is_empty() {
        return Err(Error::invalid("align_and_fill needs at least one frame"));
    }
    let all_dates: BTreeSet<NaiveDate> = frames.iter().flat_map(|f| f.dates.iter().copied()).collect();
    let all_dates: Vec<NaiveDate> = all_dates.into_iter().collect();

    let mut names = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for f in frames {
        for (c, name) in f.names.iter().enumerate() {
            let mut col = Vec::with_capacity(all_dates.len());
            let mut src = 0usize;
            for d in &all_dates {
                while src < f.dates.len() && f.dates[src] < *d {
                    src += 1;
                }
                if src < f.dates.len() && f.dates[src] == *d {
                    col.push(f.value(src, c));
                } else {
                    col.push(None);
                }
            }
            names.push(name.clone());
            columns.push(col);
        }
    }

    if policy == FillPolicy::ForwardFill {
        for col in &mut columns {
            let mut last = None;
            for v in col.iter_mut() {
                match v {
                    Some(x) => last = Some(*x),
                    None => *v = last,
                }
            }
        }
    }

    let keep: Vec<usize> = (0..all_dates.len())
        .filter(|&r| columns.iter().all(|c| c[r].is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("aligned frame is empty: no date has every column"));
    }
    let dates = keep.iter().map(|&r| all_dates[r]).collect();
    let cols = columns
        .iter()
        .map(|c| keep.iter().map(|&r| c[r].expect("kept rows are complete")).collect())
        .collect();
    SeriesFrame::new(dates, names, cols)
}

/// Per-column min/max fitted on a row range. Constant columns map to 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(frame: &SeriesFrame, fit_rows: Range<usize>) -> Result<Self> {
        if fit_rows.is_empty() || fit_rows.end > frame.len() {
            return Err(Error::invalid(format!(
                "fit rows {fit_rows:?} invalid for frame of {} rows",
                frame.len()
            )));
        }
        let mut min = Vec::with_capacity(frame.n_columns());
        let mut max = Vec::with_capacity(frame.n_columns());
        for c in 0..frame.n_columns() {
            let (lo, hi) = fit_rows
                .clone()
                .filter_map(|r| frame.value(r, c))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            min.push(lo);
            max.push(hi);
        }
        Ok(Self {
            names: frame.names.clone(),
            min,
            max,
        })
    }

    fn is_constant(&self, col: usize) -> bool {
        !(self.max[col] > self.min[col])
    }

    pub fn transform_value(&self, col: usize, x: f64) -> f64 {
        if self.is_constant(col) {
            0.5
        } else {
            (x - self.min[col]) / (self.max[col] - self.min[col])
        }
    }

    pub fn inverse_value(&self, col: usize, y: f64) -> f64 {
        if self.is_constant(col) {
            self.min[col]
        } else {
            y * (self.max[col] - self.min[col]) + self.min[col]
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn transform(&self, frame: &SeriesFrame) -> Result<SeriesFrame> {
        if frame.names != self.names {
            return Err(Error::Shape("scaler columns differ from frame columns".into()));
        }
        let columns = frame
            .columns
            .iter()
            .enumerate()
            .map(|(c, col)| col.iter().map(|&x| self.transform_value(c, x)).collect())
            .collect();
        SeriesFrame::with_missing(
            frame.dates.clone(),
            frame.names.clone(),
            columns,
            frame.missing.clone(),
        )
    }

    pub fn inverse_transform(&self, frame: &SeriesFrame) -> Result<SeriesFrame> {
        if frame.names != self.names {
            return Err(Error::Shape("scaler columns differ from frame columns".into()));
        }
        let columns = frame
            .columns
            .iter()
            .enumerate()
            .map(|(c, col)| col.iter().map(|&y| self.inverse_value(c, y)).collect())
            .collect();
        SeriesFrame::with_missing(
            frame.dates.clone(),
            frame.names.clone(),
            columns,
            frame.missing.clone(),
        )
    }
}

/// Fits min/max on `fit_rows` only and applies the map to every row.
pub fn minmax_normalize(frame: &SeriesFrame, fit_rows: Range<usize>) -> Result<(SeriesFrame, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(frame, fit_rows)?;
    let out = scaler.transform(frame)?;
    Ok((out, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn frame(dates: &[&str], name: &str, vals: &[f64]) -> SeriesFrame {
        SeriesFrame::new(
            dates.iter().map(|s| d(s)).collect(),
            vec![name.into()],
            vec![vals.to_vec()],
        )
        .unwrap()
    }

    fn read(text: &str) -> Result<SeriesFrame> {
        read_series_csv(text.as_bytes(), Path::new("mem.csv"), "date", None)
    }

    #[test]
    fn loads_three_rows() {
        let f = read("date,close\n2024-01-02,1.1\n2024-01-03,1.2\n2024-01-04,1.15\n").unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.n_columns(), 1);
        assert_eq!(f.column("close").unwrap(), &[1.1, 1.2, 1.15]);
    }

    #[test]
    fn shuffled_dates_are_sorted() {
        let f = read("date,close\n2024-01-04,3\n2024-01-02,1\n2024-01-05,4\n2024-01-03,2\n").unwrap();
        let mut expected = f.dates().to_vec();
        expected.sort();
        assert_eq!(f.dates(), expected.as_slice());
        assert_eq!(f.column("close").unwrap(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let err = read("date,close\n2024-01-02,1\n2024-01-02,2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate date"), "{err}");
    }

    #[test]
    fn malformed_row_names_line() {
        let err = read("date,close\n2024-01-02,1\n2024-01-03,abc\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_cell_is_missing() {
        let f = read("date,a,b\n2024-01-02,1,\n2024-01-03,2,5\n").unwrap();
        assert!(f.is_missing(0, 1));
        assert_eq!(f.value(1, 1), Some(5.0));
        assert!(!f.is_complete());
    }

    #[test]
    fn align_identical_frames() {
        let a = frame(&["2024-01-02", "2024-01-03"], "x", &[1.0, 2.0]);
        let out = align_and_fill(&[a.clone()], FillPolicy::DropIncomplete).unwrap();
        assert_eq!(out, a);
        let out = align_and_fill(&[a.clone()], FillPolicy::ForwardFill).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn forward_fill_carries_previous_value() {
        let a = frame(&["2024-01-05", "2024-01-06", "2024-01-08"], "x", &[1.0, 2.0, 3.0]);
        let b = frame(&["2024-01-05", "2024-01-08"], "y", &[10.0, 30.0]);
        let out = align_and_fill(&[a, b], FillPolicy::ForwardFill).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out.column("y").unwrap(), &[10.0, 10.0, 30.0]);
        assert!(out.is_complete());
    }

    #[test]
    fn drop_incomplete_disjoint_is_error() {
        let a = frame(&["2024-01-02"], "x", &[1.0]);
        let b = frame(&["2024-02-02"], "y", &[1.0]);
        assert!(align_and_fill(&[a, b], FillPolicy::DropIncomplete).is_err());
    }

    #[test]
    fn minmax_examples() {
        let f = frame(&["2024-01-02", "2024-01-03"], "x", &[1.0, 3.0]);
        let (n, _) = minmax_normalize(&f, 0..2).unwrap();
        assert_eq!(n.column("x").unwrap(), &[0.0, 1.0]);

        let f = frame(&["2024-01-02", "2024-01-03", "2024-01-04"], "x", &[1.0, 2.0, 3.0]);
        let (n, _) = minmax_normalize(&f, 0..2).unwrap();
        assert_eq!(n.column("x").unwrap(), &[0.0, 1.0, 2.0]);

        let f = frame(&["2024-01-02", "2024-01-03"], "x", &[5.0, 5.0]);
        let (n, s) = minmax_normalize(&f, 0..2).unwrap();
        assert_eq!(n.column("x").unwrap(), &[0.5, 0.5]);
        assert_eq!(s.inverse_value(0, 0.5), 5.0);
    }

    proptest! {
        #[test]
        fn normalize_round_trip(vals in prop::collection::vec(-1e3f64..1e3, 3..40), fit in 2usize..40) {
            let n = vals.len();
            let fit = fit.min(n);
            let lo = vals[..fit].iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals[..fit].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(hi > lo);
            let dates: Vec<NaiveDate> = (0..n).map(|i| d("2020-01-01") + chrono::Days::new(i as u64)).collect();
            let f = SeriesFrame::new(dates, vec!["x".into()], vec![vals.clone()]).unwrap();
            let (n01, scaler) = minmax_normalize(&f, 0..fit).unwrap();
            for v in &n01.column("x").unwrap()[..fit] {
                prop_assert!((0.0..=1.0).contains(v));
            }
            let back = scaler.inverse_transform(&n01).unwrap();
            for (a, b) in back.column("x").unwrap().iter().zip(&vals) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
