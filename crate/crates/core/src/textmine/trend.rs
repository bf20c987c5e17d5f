use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{TokenizedCorpus, TopicModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSlice {
    pub start: NaiveDate,
    /// Exclusive.
    pub end: NaiveDate,
    pub n_docs: usize,
    /// Mean theta of the slice's documents; `None` for an empty slice.
    pub prevalence: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicTrend {
    pub k: usize,
    pub slices: Vec<TrendSlice>,
}

/// Splits the corpus date span into `n_slices` equal calendar intervals and
/// averages document-topic proportions inside each.
pub fn topic_trend(model: &TopicModel, corpus: &TokenizedCorpus, n_slices: usize) -> Result<TopicTrend> {
    if n_slices == 0 {
        return Err(Error::invalid("n_slices must be at least 1"));
    }
    if corpus.n_docs() != model.theta.len() {
        return Err(Error::Shape("corpus and model document counts differ".into()));
    }
    let (Some(&first), Some(&last)) = (corpus.doc_dates.iter().min(), corpus.doc_dates.iter().max()) else {
        return Err(Error::invalid("corpus has no documents"));
    };
    let span = (last - first).num_days() + 1;
    let n = n_slices as i64;
    let bound = |i: i64| first + chrono::Days::new((i * span / n) as u64);

    let mut sums = vec![vec![0.0; model.k]; n_slices];
    let mut counts = vec![0usize; n_slices];
    for (d, date) in corpus.doc_dates.iter().enumerate() {
        let off = (*date - first).num_days();
        let s = ((off * n) / span).min(n - 1) as usize;
        counts[s] += 1;
        sums[s].iter_mut().zip(&model.theta[d]).for_each(|(a, x)| *a += x);
    }
    let slices = (0..n_slices)
        .map(|s| TrendSlice {
            start: bound(s as i64),
            end: bound(s as i64 + 1),
            n_docs: counts[s],
            prevalence: (counts[s] > 0).then(|| {
                let c = counts[s] as f64;
                sums[s].iter().map(|x| x / c).collect()
            }),
        })
        .collect();
    Ok(TopicTrend { k: model.k, slices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Category;

    fn setup(theta: Vec<Vec<f64>>, days: Vec<u32>) -> (TopicModel, TokenizedCorpus) {
        let n = theta.len();
        let k = theta[0].len();
        let model = TopicModel {
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
        };
        let corpus = TokenizedCorpus::from_ids(
            vec!["w".into()],
            vec![vec![0]; n],
            days.iter().map(|&d| NaiveDate::from_ymd_opt(2024, 1, d).unwrap()).collect(),
            vec![Category::News; n],
        )
        .unwrap();
        (model, corpus)
    }

    #[test]
    fn one_slice_is_corpus_mean() {
        let (m, c) = setup(vec![vec![0.2, 0.8], vec![0.6, 0.4]], vec![1, 9]);
        let t = topic_trend(&m, &c, 1).unwrap();
        let p = t.slices[0].prevalence.as_ref().unwrap();
        assert!((p[0] - 0.4).abs() < 1e-12 && (p[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn single_topic_is_always_one() {
        let (m, c) = setup(vec![vec![1.0]; 4], vec![1, 3, 5, 9]);
        let t = topic_trend(&m, &c, 3).unwrap();
        for s in &t.slices {
            assert_eq!(s.prevalence.as_ref().unwrap(), &vec![1.0]);
        }
    }

    #[test]
    fn empty_slice_is_absent() {
        let (m, c) = setup(vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![1, 10]);
        let t = topic_trend(&m, &c, 5).unwrap();
        assert_eq!(t.slices.len(), 5);
        assert!(t.slices[2].prevalence.is_none());
        assert_eq!(t.slices.iter().map(|s| s.n_docs).sum::<usize>(), 2);
    }

    #[test]
    fn rising_topic_is_monotone() {
        // Topic A share grows with the date.
        let days: Vec<u32> = (1..=30).collect();
        let theta = days.iter().map(|&d| {
            let a = d as f64 / 31.0;
            vec![a, 1.0 - a]
        }).collect();
        let (m, c) = setup(theta, days);
        let t = topic_trend(&m, &c, 5).unwrap();
        let a: Vec<f64> = t.slices.iter().map(|s| s.prevalence.as_ref().unwrap()[0]).collect();
        assert!(a.windows(2).all(|w| w[1] > w[0]), "{a:?}");
        for s in &t.slices {
            let p = s.prevalence.as_ref().unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
