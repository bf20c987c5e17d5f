use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::ingest::Category;
use crate::textmine::TokenizedCorpus;

/// Settings for a corpus with known topic structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedTopicsConfig {
    pub n_topics: usize,
    pub words_per_topic: usize,
    /// Words every topic can emit with a small share of its mass.
    pub shared_words: usize,
    pub shared_mass: f64,
    /// Zipf exponent for the within-topic word weights.
    pub zipf: f64,
    pub n_docs: usize,
    pub doc_len: usize,
    /// Dirichlet concentration for per-document topic mixtures.
    pub doc_alpha: f64,
    pub seed: u64,
}

impl Default for PlantedTopicsConfig {
    fn default() -> Self {
        Self {
            n_topics: 4,
            words_per_topic: 50,
            shared_words: 5,
            shared_mass: 0.05,
            zipf: 1.0,
            n_docs: 2000,
            doc_len: 40,
            doc_alpha: 0.1,
            seed: 1,
        }
    }
}

pub struct PlantedCorpus {
    pub corpus: TokenizedCorpus,
    /// `n_topics × vocab` generating distributions.
    pub true_phi: Vec<Vec<f64>>,
    pub true_theta: Vec<Vec<f64>>,
}

/// Word weights of every planted topic over the shared vocabulary. Topic `k`
/// owns words `k*W .. (k+1)*W`; the last `shared_words` ids are common.
pub fn planted_phi(cfg: &PlantedTopicsConfig) -> Vec<Vec<f64>> {
    let own = cfg.n_topics * cfg.words_per_topic;
    let v = own + cfg.shared_words;
    let zipf: Vec<f64> = (0..cfg.words_per_topic)
        .map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf))
        .collect();
    let zsum: f64 = zipf.iter().sum();
    let own_mass = if cfg.shared_words > 0 { 1.0 - cfg.shared_mass } else { 1.0 };
    (0..cfg.n_topics)
        .map(|k| {
            let mut row = vec![0.0; v];
            for (r, z) in zipf.iter().enumerate() {
                row[k * cfg.words_per_topic + r] = own_mass * z / zsum;
            }
            for s in 0..cfg.shared_words {
                row[own + s] = cfg.shared_mass / cfg.shared_words as f64;
            }
            row
        })
        .collect()
}

pub(crate) fn sample_index(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Symmetric Dirichlet draw via normalized Gamma variates.
pub fn sample_dirichlet(rng: &mut impl Rng, alpha: f64, n: usize) -> Result<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::invalid(format!("dirichlet alpha {alpha}: {e}")))?;
    let mut x: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    } else {
        let i = rng.random_range(0..n);
        x.iter_mut().enumerate().for_each(|(j, v)| *v = if j == i { 1.0 } else { 0.0 });
    }
    Ok(x)
}

pub fn planted_topic_corpus(cfg: &PlantedTopicsConfig) -> Result<PlantedCorpus> {
    if cfg.n_topics == 0 || cfg.words_per_topic == 0 || cfg.n_docs == 0 || cfg.doc_len == 0 {
        return Err(Error::invalid("planted corpus dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phi = planted_phi(cfg);
    let v = phi[0].len();
    let vocabulary: Vec<String> = (0..v)
        .map(|i| {
            let own = cfg.n_topics * cfg.words_per_topic;
            if i < own {
                format!("t{}w{:03}", i / cfg.words_per_topic, i % cfg.words_per_topic)
            } else {
                format!("shared{:02}", i - own)
            }
        })
        .collect();
    let mut theta_all = Vec::with_capacity(cfg.n_docs);
    let mut docs = Vec::with_capacity(cfg.n_docs);
    for _ in 0..cfg.n_docs {
        let theta: Vec<f64> = if cfg.n_topics == 1 {
            vec![1.0]
        } else {
            sample_dirichlet(&mut rng, cfg.doc_alpha, cfg.n_topics)?
        };
        let doc = (0..cfg.doc_len)
            .map(|_| {
                let k = sample_index(&mut rng, &theta);
                sample_index(&mut rng, &phi[k])
            })
            .collect();
        theta_all.push(theta);
        docs.push(doc);
    }
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let dates = (0..cfg.n_docs).map(|i| start + Days::new(i as u64)).collect();
    let corpus = TokenizedCorpus::from_ids(vocabulary, docs, dates, vec![Category::News; cfg.n_docs])?;
    Ok(PlantedCorpus {
        corpus,
        true_phi: phi,
        true_theta: theta_all,
    })
}
