use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending ranks starting at 1; tied values share the mean of the ranks
/// they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Metric values per model; lower is better for every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub models: Vec<String>,
    pub metrics: Vec<String>,
    /// `values[model][metric]`; `None` or non-finite means missing.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub models: Vec<String>,
    pub metrics: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    /// `ranks[model][metric]`, absent where the metric is missing.
    pub ranks: Vec<Vec<Option<f64>>>,
    /// Mean of the model's available per-metric ranks.
    pub weighted_rank: Vec<Option<f64>>,
    /// `(model, metric)` pairs left out of a ranking.
    pub excluded: Vec<(String, String)>,
}

pub fn rank_models(table: &MetricTable) -> Result<Ranking> {
    let m = table.models.len();
    if m == 0 || table.metrics.is_empty() {
        return Err(Error::invalid("metric table is empty"));
    }
    if table.values.len() != m || table.values.iter().any(|r| r.len() != table.metrics.len()) {
        return Err(Error::Shape("metric table values do not match its labels".into()));
    }
    let mut ranks = vec![vec![None; table.metrics.len()]; m];
    let mut excluded = Vec::new();
    for j in 0..table.metrics.len() {
        let present: Vec<usize> = (0..m)
            .filter(|&i| table.values[i][j].is_some_and(f64::is_finite))
            .collect();
        for i in (0..m).filter(|i| !present.contains(i)) {
            excluded.push((table.models[i].clone(), table.metrics[j].clone()));
        }
        let vals: Vec<f64> = present.iter().map(|&i| table.values[i][j].expect("present")).collect();
        for (r, &i) in average_ranks(&vals).into_iter().zip(&present) {
            ranks[i][j] = Some(r);
        }
    }
    let weighted_rank = ranks
        .iter()
        .map(|row| {
            let got: Vec<f64> = row.iter().flatten().copied().collect();
            (!got.is_empty()).then(|| got.iter().sum::<f64>() / got.len() as f64)
        })
        .collect();
    Ok(Ranking {
        models: table.models.clone(),
        metrics: table.metrics.clone(),
        values: table.values.clone(),
        ranks,
        weighted_rank,
        excluded,
    })
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.decimals$}"))
}

impl Ranking {
    /// `model,<metric>,rank_<metric>,...,weighted_rank`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string()];
        for m in &self.metrics {
            header.push(m.clone());
            header.push(format!("rank_{m}"));
        }
        header.push("weighted_rank".into());
        w.write_record(&header)?;
        for (i, model) in self.models.iter().enumerate() {
            let mut row = vec![model.clone()];
            for j in 0..self.metrics.len() {
                row.push(fmt_opt(self.values[i][j].filter(|v| v.is_finite()), 6));
                row.push(fmt_opt(self.ranks[i][j], 1));
            }
            row.push(fmt_opt(self.weighted_rank[i], 2));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
