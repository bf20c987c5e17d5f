use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{read_to_string, write_atomic};

use super::TokenizedCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed,
        }
    }

    pub fn resolved_alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k.max(1) as f64)
    }
}

/// Fitted topic model. `phi` is `k × vocab`, `theta` is `docs × k`; both are
/// posterior means averaged over post-burn-in sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub vocabulary: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub assignments: Vec<Vec<usize>>,
}

impl TopicModel {
    /// Highest-weight words of topic `k`, heaviest first. Equal weights keep
    /// vocabulary order.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<(String, f64)> {
        let mut idx: Vec<usize> = (0..self.vocabulary.len()).collect();
        idx.sort_by(|&a, &b| self.phi[k][b].total_cmp(&self.phi[k][a]).then(a.cmp(&b)));
        idx.into_iter()
            .take(n)
            .map(|w| (self.vocabulary[w].clone(), self.phi[k][w]))
            .collect()
    }

    pub fn top_word_ids(&self, k: usize, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.vocabulary.len()).collect();
        idx.sort_by(|&a, &b| self.phi[k][b].total_cmp(&self.phi[k][a]).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }

    /// Topic with the largest theta for document `d` (lowest index on ties).
    pub fn dominant_topic(&self, d: usize) -> usize {
        let row = &self.theta[d];
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] > row[best] {
                best = k;
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

/// Collapsed Gibbs sampler state: one topic per token plus the doc-topic,
/// topic-word and topic-total count tables.
pub struct GibbsSampler<'a> {
    corpus: &'a TokenizedCorpus,
    k: usize,
    alpha: f64,
    beta: f64,
    z: Vec<Vec<usize>>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(corpus: &'a TokenizedCorpus, k: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("topic count must be at least 1"));
        }
        if k > corpus.total_tokens() {
            return Err(Error::invalid(format!(
                "topic count {k} exceeds total token count {}",
                corpus.total_tokens()
            )));
        }
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::invalid("alpha and beta must be positive"));
        }
        let v = corpus.vocab_size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n_dk = vec![0u32; corpus.n_docs() * k];
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        let z = corpus
            .docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        n_dk[d * k + t] += 1;
                        n_kw[t * v + w] += 1;
                        n_k[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            corpus,
            k,
            alpha,
            beta,
            z,
            n_dk,
            n_kw,
            n_k,
            rng,
            weights: vec![0.0; k],
        })
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let k = self.k;
        let v = self.corpus.vocab_size();
        let vbeta = v as f64 * self.beta;
        for (d, doc) in self.corpus.docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = self.z[d][i];
                self.n_dk[d * k + old] -= 1;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.n_dk[d * k + t] as f64 + self.alpha)
                        * (self.n_kw[t * v + w] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.n_dk[d * k + new] += 1;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.n_k
    }

    pub fn topic_word_counts(&self) -> &[u32] {
        &self.n_kw
    }

    pub fn doc_topic_counts(&self) -> &[u32] {
        &self.n_dk
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// Current point estimates `(phi, theta)`.
    pub fn estimates(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let k = self.k;
        let v = self.corpus.vocab_size();
        let vbeta = v as f64 * self.beta;
        let kalpha = k as f64 * self.alpha;
        let phi = (0..k)
            .map(|t| {
                let denom = self.n_k[t] as f64 + vbeta;
                (0..v).map(|w| (self.n_kw[t * v + w] as f64 + self.beta) / denom).collect()
            })
            .collect();
        let theta = self
            .corpus
            .docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                let denom = doc.len() as f64 + kalpha;
                (0..k).map(|t| (self.n_dk[d * k + t] as f64 + self.alpha) / denom).collect()
            })
            .collect();
        (phi, theta)
    }
}

fn normalize_rows(rows: &mut [Vec<f64>]) {
    for row in rows {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
}

pub fn fit_lda_gibbs(corpus: &TokenizedCorpus, params: &LdaParams) -> Result<TopicModel> {
    if params.iterations <= params.burn_in {
        return Err(Error::invalid(format!(
            "iterations ({}) must exceed burn-in ({})",
            params.iterations, params.burn_in
        )));
    }
    let alpha = params.resolved_alpha();
    let mut sampler = GibbsSampler::new(corpus, params.k, alpha, params.beta, params.seed)?;
    let mut phi_sum = vec![vec![0.0; corpus.vocab_size()]; params.k];
    let mut theta_sum = vec![vec![0.0; params.k]; corpus.n_docs()];
    for it in 0..params.iterations {
        sampler.sweep();
        if it >= params.burn_in {
            let (phi, theta) = sampler.estimates();
            for (acc, row) in phi_sum.iter_mut().zip(&phi) {
                acc.iter_mut().zip(row).for_each(|(a, x)| *a += x);
            }
            for (acc, row) in theta_sum.iter_mut().zip(&theta) {
                acc.iter_mut().zip(row).for_each(|(a, x)| *a += x);
            }
        }
    }
    normalize_rows(&mut phi_sum);
    normalize_rows(&mut theta_sum);
    Ok(TopicModel {
        k: params.k,
        alpha,
        beta: params.beta,
        iterations: params.iterations,
        burn_in: params.burn_in,
        seed: params.seed,
        vocabulary: corpus.vocabulary.clone(),
        phi: phi_sum,
        theta: theta_sum,
        assignments: sampler.z,
    })
}
