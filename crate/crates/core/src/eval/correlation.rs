use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SeriesFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Pearson correlations; `None` for pairs involving a zero-variance
    /// column or with fewer than two shared observations.
    pub values: Vec<Vec<Option<f64>>>,
    /// Columns with zero variance.
    pub absent: Vec<String>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise-complete Pearson correlations between every pair of columns.
pub fn correlation_matrix(frame: &SeriesFrame) -> Result<CorrelationMatrix> {
    let k = frame.n_columns();
    if frame.len() < 2 {
        return Err(Error::invalid("correlation needs at least 2 observations"));
    }
    let present = |c: usize| -> Vec<usize> { (0..frame.len()).filter(|&r| !frame.is_missing(r, c)).collect() };
    let rows: Vec<Vec<usize>> = (0..k).map(present).collect();
    let mut absent = Vec::new();
    let mut constant = vec![false; k];
    for c in 0..k {
        let col = frame.column_at(c);
        let vals: Vec<f64> = rows[c].iter().map(|&r| col[r]).collect();
        if vals.len() < 2 || vals.iter().all(|&v| v == vals[0]) {
            constant[c] = true;
            absent.push(frame.names()[c].clone());
        }
    }
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        if constant[i] {
            continue;
        }
        values[i][i] = Some(1.0);
        for j in i + 1..k {
            if constant[j] {
                continue;
            }
            let (ci, cj) = (frame.column_at(i), frame.column_at(j));
            let shared: Vec<usize> = rows[i].iter().copied().filter(|r| !frame.is_missing(*r, j)).collect();
            let a: Vec<f64> = shared.iter().map(|&r| ci[r]).collect();
            let b: Vec<f64> = shared.iter().map(|&r| cj[r]).collect();
            let v = pearson(&a, &b);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        names: frame.names().to_vec(),
        values,
        absent,
    })
}

impl CorrelationMatrix {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.map_or_else(String::new, |x| format!("{x:.6}"))));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Days, NaiveDate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(cols: Vec<(&str, Vec<f64>)>) -> SeriesFrame {
        let n = cols[0].1.len();
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..n).map(|i| d0 + Days::new(i as u64)).collect();
        let (names, columns): (Vec<_>, Vec<_>) = cols.into_iter().map(|(a, b)| (a.to_string(), b)).unzip();
        SeriesFrame::new(dates, names, columns).unwrap()
    }

    #[test]
    fn basic_properties() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let m = correlation_matrix(&frame(vec![("x", x.clone()), ("y", y), ("c", vec![1.0; 20])])).unwrap();
        assert_eq!(m.values[0][0], Some(1.0));
        assert!((m.values[0][1].unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(m.values[0][1], m.values[1][0]);
        assert_eq!(m.absent, vec!["c"]);
        assert!(m.values[2].iter().all(Option::is_none));
    }

    #[test]
    fn independent_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let m = correlation_matrix(&frame(vec![("a", a), ("b", b)])).unwrap();
        assert!(m.values[0][1].unwrap().abs() < 0.05);
    }
}
