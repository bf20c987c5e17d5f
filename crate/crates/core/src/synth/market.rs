use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_documents_jsonl, write_series_csv, Category, DocumentRecord, DocumentScores, SegmentationSpec, SeriesFrame};
use crate::sentiment::{SentimentIndex, SentimentSeries};

use super::topics::{planted_phi, sample_dirichlet, sample_index};
use super::PlantedTopicsConfig;

const STEMS: [&str; 8] = ["rate", "trade", "bank", "growth", "energy", "labor", "yield", "policy"];
const SHARED: [&str; 5] = ["market", "euro", "dollar", "currency", "exchange"];

/// Knobs of the synthetic market. The close follows
/// `P_t - mu = phi (P_{t-1} - mu) + beta SI_news_{t-1} + trend t + e_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticMarketConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub train_days: usize,
    pub context_days: usize,
    pub forecast_days: usize,
    pub news_per_day: usize,
    pub analysis_per_day: usize,
    pub doc_len: usize,
    pub n_topics: usize,
    pub words_per_topic: usize,
    pub doc_alpha: f64,
    /// Spread of the latent daily mood that news scores scatter around.
    pub mood_sd: f64,
    pub doc_noise_sd: f64,
    pub mean_price: f64,
    pub persistence: f64,
    pub sentiment_beta: f64,
    pub trend: f64,
    pub noise_sd: f64,
}

impl Default for SyntheticMarketConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            start: NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date"),
            train_days: 300,
            context_days: 60,
            forecast_days: 60,
            news_per_day: 2,
            analysis_per_day: 1,
            doc_len: 30,
            n_topics: 4,
            words_per_topic: 40,
            doc_alpha: 0.1,
            mood_sd: 0.45,
            doc_noise_sd: 0.15,
            mean_price: 1.1,
            persistence: 0.8,
            sentiment_beta: 0.004,
            trend: 0.0,
            noise_sd: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    /// Column `close`.
    pub prices: SeriesFrame,
    /// Columns `ind_dollar`, `ind_rate`, `ind_gold`.
    pub indicators: SeriesFrame,
    pub documents: Vec<DocumentRecord>,
    pub segmentation: SegmentationSpec,
    /// Latent daily news mood before document noise.
    pub mood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticPaths {
    pub prices: PathBuf,
    pub indicators: PathBuf,
    pub documents: PathBuf,
}

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn word(i: usize, cfg: &SyntheticMarketConfig) -> String {
    let own = cfg.n_topics * cfg.words_per_topic;
    if i >= own {
        return SHARED[(i - own) % SHARED.len()].to_string();
    }
    let (k, r) = (i / cfg.words_per_topic, i % cfg.words_per_topic);
    let a = (b'a' + (r / 26) as u8) as char;
    let b = (b'a' + (r % 26) as u8) as char;
    let stem = STEMS[k % STEMS.len()];
    if k < STEMS.len() {
        format!("{stem}{a}{b}")
    } else {
        let c = (b'a' + (k / STEMS.len()) as u8 % 26) as char;
        format!("{stem}{c}{a}{b}")
    }
}

fn unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn signed(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

pub fn synthetic_market(cfg: &SyntheticMarketConfig) -> Result<SyntheticMarket> {
    if cfg.train_days < 30 || cfg.context_days == 0 || cfg.forecast_days == 0 {
        return Err(Error::invalid("synthetic market needs at least 30 train days and non-empty context/forecast"));
    }
    if cfg.news_per_day == 0 || cfg.analysis_per_day == 0 || cfg.doc_len == 0 {
        return Err(Error::invalid("synthetic market needs documents of both categories every day"));
    }
    if cfg.n_topics == 0 || cfg.words_per_topic == 0 || cfg.words_per_topic > 26 * 26 {
        return Err(Error::invalid("topic sizes out of range"));
    }
    if !(cfg.persistence.abs() < 1.0) || !(cfg.noise_sd >= 0.0) || !(cfg.mood_sd >= 0.0) || !(cfg.doc_noise_sd >= 0.0) {
        return Err(Error::invalid("persistence must lie in (-1, 1) and spreads must be non-negative"));
    }
    let n = cfg.train_days + cfg.context_days + cfg.forecast_days;
    let dates = weekdays(cfg.start, n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::invalid(format!("normal({sd}): {e}")));
    let mood_dist = normal(cfg.mood_sd)?;
    let doc_noise = normal(cfg.doc_noise_sd)?;
    let std = normal(1.0)?;

    let topic_cfg = PlantedTopicsConfig {
        n_topics: cfg.n_topics,
        words_per_topic: cfg.words_per_topic,
        shared_words: SHARED.len(),
        ..PlantedTopicsConfig::default()
    };
    let phi = planted_phi(&topic_cfg);
    let vocab: Vec<String> = (0..phi[0].len()).map(|i| word(i, cfg)).collect();

    let mut mood = Vec::with_capacity(n);
    let mut documents = Vec::with_capacity(n * (cfg.news_per_day + cfg.analysis_per_day));
    for &date in &dates {
        let m: f64 = signed(mood_dist.sample(&mut rng)).clamp(-0.95, 0.95);
        let other: f64 = signed(mood_dist.sample(&mut rng)).clamp(-0.95, 0.95);
        mood.push(m);
        for (category, count, centre) in [
            (Category::News, cfg.news_per_day, m),
            (Category::Analysis, cfg.analysis_per_day, other),
        ] {
            for _ in 0..count {
                let theta = if cfg.n_topics == 1 {
                    vec![1.0]
                } else {
                    sample_dirichlet(&mut rng, cfg.doc_alpha, cfg.n_topics)?
                };
                let words: Vec<&str> = (0..cfg.doc_len)
                    .map(|_| {
                        let k = sample_index(&mut rng, &theta);
                        vocab[sample_index(&mut rng, &phi[k])].as_str()
                    })
                    .collect();
                let sentiment = signed(centre + doc_noise.sample(&mut rng));
                let logit = 4.0 * sentiment + 0.5 * std.sample(&mut rng);
                let scores = DocumentScores {
                    sentiment: Some(sentiment),
                    class_prob: Some(unit(1.0 / (1.0 + (-logit).exp()))),
                    polarity: Some(signed(0.8 * sentiment + 0.1 * std.sample(&mut rng))),
                    subjectivity: Some(rng.random_range(0.2..0.8)),
                };
                documents.push(DocumentRecord {
                    date,
                    category,
                    text: words.join(" "),
                    scores,
                });
            }
        }
    }

    let si = SentimentSeries::build(&documents, &dates, SentimentIndex::new(7.0)?)?;
    let si_news = &si.si[&Category::News];
    let noise = normal(cfg.noise_sd)?;
    let mut close = Vec::with_capacity(n);
    let mut dev = 0.0;
    for t in 0..n {
        if t > 0 {
            dev = cfg.persistence * dev + cfg.sentiment_beta * si_news[t - 1] + noise.sample(&mut rng);
        }
        close.push(cfg.mean_price + cfg.trend * t as f64 + dev);
    }

    let mut rate = 2.0;
    let mut gold = 1800.0;
    let (mut dollar_col, mut rate_col, mut gold_col) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &p in &close {
        dollar_col.push(100.0 - 30.0 * (p - cfg.mean_price) + 0.1 * std.sample(&mut rng));
        rate = 2.0 + 0.95 * (rate - 2.0) + 0.05 * std.sample(&mut rng);
        gold += 5.0 * std.sample(&mut rng);
        rate_col.push(rate);
        gold_col.push(gold);
    }

    let prices = SeriesFrame::new(dates.clone(), vec!["close".into()], vec![close])?;
    let indicators = SeriesFrame::new(
        dates.clone(),
        vec!["ind_dollar".into(), "ind_rate".into(), "ind_gold".into()],
        vec![dollar_col, rate_col, gold_col],
    )?;
    let segmentation = SegmentationSpec {
        train_start: dates[0],
        train_end: dates[cfg.train_days - 1],
        context_days: cfg.context_days,
        forecast_start: dates[cfg.train_days + cfg.context_days],
        forecast_end: dates[n - 1],
    };
    Ok(SyntheticMarket {
        prices,
        indicators,
        documents,
        segmentation,
        mood,
    })
}

impl SyntheticMarket {
    /// Writes `prices.csv`, `indicators.csv` and `documents.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SyntheticPaths> {
        let paths = SyntheticPaths {
            prices: dir.join("prices.csv"),
            indicators: dir.join("indicators.csv"),
            documents: dir.join("documents.jsonl"),
        };
        write_series_csv(&self.prices, &paths.prices)?;
        write_series_csv(&self.indicators, &paths.indicators)?;
        write_documents_jsonl(&self.documents, &paths.documents)?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::segment;

    #[test]
    fn layout_and_determinism() {
        let cfg = SyntheticMarketConfig::default();
        let m = synthetic_market(&cfg).unwrap();
        assert_eq!(m.prices.len(), 420);
        assert_eq!(m.documents.len(), 420 * 3);
        assert!(m.prices.dates().iter().all(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)));
        let s = segment(&m.prices, &m.segmentation).unwrap();
        assert_eq!(s.sizes(), (300, 60, 60));
        assert_eq!(m, synthetic_market(&cfg).unwrap());
        for d in &m.documents {
            d.scores.validate().unwrap();
            assert!(d.text.split(' ').all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
        }
    }

    #[test]
    fn price_follows_sentiment() {
        let m = synthetic_market(&SyntheticMarketConfig::default()).unwrap();
        let docs = SentimentSeries::build(&m.documents, m.prices.dates(), SentimentIndex::new(7.0).unwrap()).unwrap();
        let si = &docs.si[&Category::News];
        let p = m.prices.column("close").unwrap();
        let cfg = SyntheticMarketConfig::default();
        let resid: Vec<f64> = (1..p.len())
            .map(|t| (p[t] - 1.1) - cfg.persistence * (p[t - 1] - 1.1) - cfg.sentiment_beta * si[t - 1])
            .collect();
        let sd = (resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64).sqrt();
        assert!((sd - cfg.noise_sd).abs() < 0.2 * cfg.noise_sd, "{sd}");
    }
}
