use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{fit_lda_gibbs, LdaParams, TokenizedCorpus, TopicModel};

/// UMass coherence of each topic over its `top_n` words:
/// `sum_{m>l} ln((D(w_m, w_l) + 1) / D(w_l))` with `D` counting documents.
pub fn umass_coherence(model: &TopicModel, corpus: &TokenizedCorpus, top_n: usize) -> Vec<f64> {
    let doc_sets: Vec<HashSet<usize>> = corpus
        .docs
        .iter()
        .map(|d| d.iter().copied().collect())
        .collect();
    (0..model.k)
        .map(|k| {
            let top = model.top_word_ids(k, top_n);
            let mut score = 0.0;
            for m in 1..top.len() {
                for l in 0..m {
                    let (wm, wl) = (top[m], top[l]);
                    let mut d_l = 0usize;
                    let mut d_ml = 0usize;
                    for s in &doc_sets {
                        if s.contains(&wl) {
                            d_l += 1;
                            if s.contains(&wm) {
                                d_ml += 1;
                            }
                        }
                    }
                    if d_l > 0 {
                        score += ((d_ml as f64 + 1.0) / d_l as f64).ln();
                    }
                }
            }
            score
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCountSelection {
    pub best_k: usize,
    /// `(k, mean UMass coherence over topics)` in the order tried.
    pub coherence: Vec<(usize, f64)>,
}

/// Fits one model per candidate `k` (in parallel) and keeps the one with the
/// highest mean UMass coherence; ties go to the smaller `k`.
pub fn select_topic_count(
    corpus: &TokenizedCorpus,
    k_range: &[usize],
    fit_params: &LdaParams,
    top_n: usize,
) -> Result<TopicCountSelection> {
    if k_range.is_empty() {
        return Err(Error::invalid("topic count range is empty"));
    }
    let scored: Vec<(usize, f64)> = k_range
        .par_iter()
        .map(|&k| {
            let params = LdaParams { k, ..*fit_params };
            let model = fit_lda_gibbs(corpus, &params)?;
            let c = umass_coherence(&model, corpus, top_n);
            Ok((k, c.iter().sum::<f64>() / c.len() as f64))
        })
        .collect::<Result<_>>()?;
    let mut best = scored[0];
    for &(k, c) in &scored[1..] {
        if c > best.1 || (c == best.1 && k < best.0) {
            best = (k, c);
        }
    }
    Ok(TopicCountSelection {
        best_k: best.0,
        coherence: scored,
    })
}
