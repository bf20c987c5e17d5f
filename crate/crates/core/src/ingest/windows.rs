use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{MinMaxScaler, SeriesFrame};

/// Up/down labels: 1 when the close is at or above the previous close.
pub fn make_direction_labels(closes: &[f64]) -> Result<Vec<u8>> {
    if closes.len() < 2 {
        return Err(Error::invalid("direction labels need at least 2 observations"));
    }
    Ok(closes
        .windows(2)
        .map(|w| u8::from(w[1] >= w[0]))
        .collect())
}

/// Sliding windows over a (normalized) frame. Each window is stored
/// row-major as `timesteps × n_features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedSet {
    pub timesteps: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub windows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Frame row each target was read from.
    pub target_rows: Vec<usize>,
    pub scaler: Option<MinMaxScaler>,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self, k: usize) -> &[f64] {
        &self.windows[k]
    }

    /// Keeps only the samples whose target row satisfies `keep`.
    pub fn filter_target_rows(&self, mut keep: impl FnMut(usize) -> bool) -> SupervisedSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&k| keep(self.target_rows[k])).collect();
        self.subset(&idx)
    }

    pub fn subset(&self, idx: &[usize]) -> SupervisedSet {
        SupervisedSet {
            timesteps: self.timesteps,
            n_features: self.n_features,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            windows: idx.iter().map(|&k| self.windows[k].clone()).collect(),
            targets: idx.iter().map(|&k| self.targets[k]).collect(),
            target_rows: idx.iter().map(|&k| self.target_rows[k]).collect(),
            scaler: self.scaler.clone(),
        }
    }
}

/// Window `k` covers rows `[k, k + timesteps)`; its target is
/// `target_column` at row `k + timesteps + horizon - 1`.
pub fn make_supervised_windows(
    frame01: &SeriesFrame,
    target_column: &str,
    timesteps: usize,
    horizon: usize,
) -> Result<SupervisedSet> {
    if timesteps == 0 || horizon == 0 {
        return Err(Error::invalid("timesteps and horizon must be at least 1"));
    }
    let target_idx = frame01
        .column_index(target_column)
        .ok_or_else(|| Error::invalid(format!("unknown target column {target_column}")))?;
    if !frame01.is_complete() {
        return Err(Error::invalid("frame has missing cells; align it first"));
    }
    let n = frame01.len();
    if n < timesteps + horizon {
        return Err(Error::invalid(format!(
            "{n} rows is too few for timesteps={timesteps}, horizon={horizon}"
        )));
    }
    let n_features = frame01.n_columns();
    let count = n - timesteps - horizon + 1;
    let mut windows = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    let mut target_rows = Vec::with_capacity(count);
    for k in 0..count {
        let mut w = Vec::with_capacity(timesteps * n_features);
        for r in k..k + timesteps {
            for c in 0..n_features {
                w.push(frame01.column_at(c)[r]);
            }
        }
        let row = k + timesteps + horizon - 1;
        windows.push(w);
        targets.push(frame01.column_at(target_idx)[row]);
        target_rows.push(row);
    }
    Ok(SupervisedSet {
        timesteps,
        n_features,
        feature_names: frame01.names().to_vec(),
        target_name: target_column.to_string(),
        windows,
        targets,
        target_rows,
        scaler: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Days, NaiveDate};
    use proptest::prelude::*;

    fn frame(n: usize) -> SeriesFrame {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..n).map(|i| start + Days::new(i as u64)).collect();
        let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
        SeriesFrame::new(dates, vec!["a".into(), "b".into()], vec![a, b]).unwrap()
    }

    #[test]
    fn labels_include_equality() {
        assert_eq!(make_direction_labels(&[1.0, 1.1, 1.05, 1.05]).unwrap(), vec![1, 0, 1]);
        assert_eq!(make_direction_labels(&[1.0, 2.0, 3.0]).unwrap(), vec![1, 1]);
        assert_eq!(make_direction_labels(&[3.0, 2.0, 1.0]).unwrap(), vec![0, 0]);
        assert!(make_direction_labels(&[1.0]).is_err());
    }

    #[test]
    fn window_counts() {
        let f = frame(5);
        assert_eq!(make_supervised_windows(&f, "a", 2, 1).unwrap().len(), 3);
        assert_eq!(make_supervised_windows(&f, "a", 4, 1).unwrap().len(), 1);
        assert!(make_supervised_windows(&f, "a", 5, 1).is_err());
    }

    proptest! {
        #[test]
        fn targets_align_with_frame_rows(n in 3usize..40, t in 1usize..6, h in 1usize..4) {
            prop_assume!(n >= t + h);
            let f = frame(n);
            let set = make_supervised_windows(&f, "b", t, h).unwrap();
            prop_assert_eq!(set.len(), n - t - h + 1);
            for k in 0..set.len() {
                let row = k + t + h - 1;
                prop_assert_eq!(set.target_rows[k], row);
                prop_assert_eq!(set.targets[k], f.column("b").unwrap()[row]);
                // first cell of the window is column a at row k
                prop_assert_eq!(set.window(k)[0], k as f64);
                prop_assert_eq!(set.window(k)[(t - 1) * 2 + 1], 100.0 + (k + t - 1) as f64);
            }
        }
    }
}
