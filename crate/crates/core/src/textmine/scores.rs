use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{snap_to_trading_day, DocumentRecord, SeriesFrame};
use crate::sentiment::ScoreField;

use super::TopicModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentRule {
    /// Each document belongs to its highest-theta topic.
    #[default]
    ArgmaxTheta,
}

/// Per-topic daily means of document scores. For each requested field,
/// `values[field][k][t]` is the mean over documents assigned to topic `k`
/// on trading day `t`; `counts[field][k][t]` is how many contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDayScores {
    pub dates: Vec<NaiveDate>,
    pub k: usize,
    pub values: BTreeMap<ScoreField, Vec<Vec<f64>>>,
    pub counts: BTreeMap<ScoreField, Vec<Vec<usize>>>,
}

/// Value before the first document of a topic appears.
fn leading_fill(field: ScoreField) -> f64 {
    match field {
        ScoreField::Sentiment | ScoreField::Polarity => 0.0,
        ScoreField::ClassProb | ScoreField::Subjectivity => 0.5,
    }
}

fn column_suffix(field: ScoreField) -> &'static str {
    match field {
        ScoreField::Sentiment => "sentiment",
        ScoreField::ClassProb => "class",
        ScoreField::Polarity => "polarity",
        ScoreField::Subjectivity => "subjectivity",
    }
}

impl TopicDayScores {
    pub fn get(&self, field: ScoreField) -> Option<&Vec<Vec<f64>>> {
        self.values.get(&field)
    }

    pub fn count(&self, field: ScoreField) -> Option<&Vec<Vec<usize>>> {
        self.counts.get(&field)
    }

    /// Columns `topic{k}_{polarity|subjectivity|class|sentiment}` with
    /// 1-based topic numbers.
    pub fn to_frame(&self, fields: &[ScoreField]) -> Result<SeriesFrame> {
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for &field in fields {
            let grid = self
                .get(field)
                .ok_or_else(|| Error::invalid(format!("topic scores lack {}", field.as_str())))?;
            for (k, row) in grid.iter().enumerate() {
                names.push(format!("topic{}_{}", k + 1, column_suffix(field)));
                cols.push(row.clone());
            }
        }
        SeriesFrame::new(self.dates.clone(), names, cols)
    }
}

/// `docs[i]` must be the document behind row `i` of `model.theta`.
/// Empty (topic, day) cells carry the previous day's value forward.
pub fn topic_day_scores(
    model: &TopicModel,
    docs: &[DocumentRecord],
    dates: &[NaiveDate],
    fields: &[ScoreField],
    rule: AssignmentRule,
) -> Result<TopicDayScores> {
    if docs.len() != model.theta.len() {
        return Err(Error::Shape(format!(
            "{} documents for a model fitted on {}",
            docs.len(),
            model.theta.len()
        )));
    }
    let topic_of: Vec<usize> = match rule {
        AssignmentRule::ArgmaxTheta => (0..docs.len()).map(|d| model.dominant_topic(d)).collect(),
    };
    let day_of: Vec<Option<usize>> = docs.iter().map(|d| snap_to_trading_day(dates, d.date)).collect();

    let mut values = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for &field in fields {
        let mut sum = vec![vec![0.0; dates.len()]; model.k];
        let mut n = vec![vec![0usize; dates.len()]; model.k];
        let mut any = false;
        for (i, doc) in docs.iter().enumerate() {
            let Some(v) = field.get(&doc.scores) else { continue };
            any = true;
            if let Some(t) = day_of[i] {
                sum[topic_of[i]][t] += v;
                n[topic_of[i]][t] += 1;
            }
        }
        if !any {
            return Err(Error::invalid(format!("no document carries a {} score", field.as_str())));
        }
        let grid = sum
            .iter()
            .zip(&n)
            .map(|(s_row, n_row)| {
                let mut prev = leading_fill(field);
                s_row
                    .iter()
                    .zip(n_row)
                    .map(|(&s, &c)| {
                        if c > 0 {
                            prev = s / c as f64;
                        }
                        prev
                    })
                    .collect()
            })
            .collect();
        values.insert(field, grid);
        counts.insert(field, n);
    }
    Ok(TopicDayScores {
        dates: dates.to_vec(),
        k: model.k,
        values,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Category, DocumentScores};
    use proptest::prelude::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, d).unwrap()
    }

    fn model(theta: Vec<Vec<f64>>) -> TopicModel {
        let k = theta[0].len();
        TopicModel {
            k,
            alpha: 0.1,
            beta: 0.01,
            iterations: 2,
            burn_in: 1,
            seed: 0,
            vocabulary: vec!["w".into()],
            phi: vec![vec![1.0]; k],
            theta,
            assignments: vec![],
        }
    }

    fn doc(d: u32, polarity: f64) -> DocumentRecord {
        DocumentRecord {
            date: day(d),
            category: Category::News,
            text: String::new(),
            scores: DocumentScores {
                polarity: Some(polarity),
                ..Default::default()
            },
        }
    }

    fn onehot(k: usize, of: usize) -> Vec<f64> {
        (0..of).map(|i| if i == k { 0.9 } else { 0.1 / (of - 1) as f64 }).collect()
    }

    #[test]
    fn single_document_mean() {
        let m = model(vec![onehot(1, 3)]);
        let s = topic_day_scores(&m, &[doc(2, 0.4)], &[day(2)], &[ScoreField::Polarity], AssignmentRule::ArgmaxTheta)
            .unwrap();
        assert_eq!(s.get(ScoreField::Polarity).unwrap()[1][0], 0.4);
        assert_eq!(s.count(ScoreField::Polarity).unwrap()[1][0], 1);
    }

    #[test]
    fn two_documents_average_and_gap_fills_forward() {
        let m = model(vec![onehot(0, 2), onehot(0, 2)]);
        let docs = [doc(2, 0.2), doc(2, 0.4)];
        let s = topic_day_scores(&m, &docs, &[day(2), day(3)], &[ScoreField::Polarity], AssignmentRule::ArgmaxTheta)
            .unwrap();
        let p = &s.get(ScoreField::Polarity).unwrap()[0];
        assert!((p[0] - 0.3).abs() < 1e-15);
        assert_eq!(p[1], p[0]);
        assert_eq!(s.count(ScoreField::Polarity).unwrap()[0][1], 0);
    }

    #[test]
    fn absent_score_is_error() {
        let m = model(vec![onehot(0, 2)]);
        let r = topic_day_scores(&m, &[doc(2, 0.1)], &[day(2)], &[ScoreField::Subjectivity], AssignmentRule::ArgmaxTheta);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn matches_group_by_mean(
            items in prop::collection::vec((0usize..3, 0u32..5, -1.0f64..1.0), 1..30)
        ) {
            let theta = items.iter().map(|(k, _, _)| onehot(*k, 3)).collect();
            let m = model(theta);
            let docs: Vec<_> = items.iter().map(|(_, d, p)| doc(2 + d, *p)).collect();
            let dates: Vec<_> = (2..7).map(day).collect();
            let s = topic_day_scores(&m, &docs, &dates, &[ScoreField::Polarity], AssignmentRule::ArgmaxTheta).unwrap();
            let grid = s.get(ScoreField::Polarity).unwrap();
            for k in 0..3 {
                for t in 0..5u32 {
                    let members: Vec<f64> = items
                        .iter()
                        .filter(|(kk, d, _)| *kk == k && *d == t)
                        .map(|(_, _, p)| *p)
                        .collect();
                    if !members.is_empty() {
                        let mean = members.iter().sum::<f64>() / members.len() as f64;
                        prop_assert!((grid[k][t as usize] - mean).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
