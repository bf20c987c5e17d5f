//! Daily sentiment values and the exponentially decaying sentiment index.
//!
//! The index on day `t` is every earlier daily value discounted by
//! `exp(-(t - i) / scale)` plus the value of day `t` itself. It is evaluated
//! with the one-step recurrence `SI_t = exp(-1/scale) * SI_{t-1} + SV_t`.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{snap_to_trading_day, Category, DocumentRecord, DocumentScores, SeriesFrame};

pub const DEFAULT_DECAY_SCALE: f64 = 7.0;

/// Which per-document score to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreField {
    Sentiment,
    ClassProb,
    Polarity,
    Subjectivity,
}

impl ScoreField {
    pub fn get(self, s: &DocumentScores) -> Option<f64> {
        match self {
            ScoreField::Sentiment => s.sentiment,
            ScoreField::ClassProb => s.class_prob,
            ScoreField::Polarity => s.polarity,
            ScoreField::Subjectivity => s.subjectivity,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreField::Sentiment => "sentiment",
            ScoreField::ClassProb => "class_prob",
            ScoreField::Polarity => "polarity",
            ScoreField::Subjectivity => "subjectivity",
        }
    }
}

/// Value used on trading days with no scored document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmptyDay {
    Value(f64),
    /// Carry the previous day's value; `initial` before the first document.
    ForwardFill { initial: f64 },
}

/// Per-trading-day mean of one score over documents of one category.
/// Document dates snap forward to the next trading date; documents after the
/// last date are ignored.
pub fn daily_mean_score(
    docs: &[DocumentRecord],
    category: Category,
    dates: &[NaiveDate],
    field: ScoreField,
    empty: EmptyDay,
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; dates.len()];
    let mut count = vec![0usize; dates.len()];
    let mut scored = 0usize;
    for doc in docs.iter().filter(|d| d.category == category) {
        let Some(v) = field.get(&doc.scores) else { continue };
        scored += 1;
        if let Some(t) = snap_to_trading_day(dates, doc.date) {
            sum[t] += v;
            count[t] += 1;
        }
    }
    if scored == 0 {
        return Err(Error::invalid(format!(
            "no {} documents carry a {} score",
            category.as_str(),
            field.as_str()
        )));
    }
    let mut prev = match empty {
        EmptyDay::Value(v) => v,
        EmptyDay::ForwardFill { initial } => initial,
    };
    Ok(sum
        .iter()
        .zip(&count)
        .map(|(&s, &n)| {
            if n > 0 {
                prev = s / n as f64;
                prev
            } else {
                match empty {
                    EmptyDay::Value(v) => v,
                    EmptyDay::ForwardFill { .. } => prev,
                }
            }
        })
        .collect())
}

/// Daily sentiment value: mean document sentiment, zero on empty days.
pub fn daily_sentiment_value(
    docs: &[DocumentRecord],
    category: Category,
    dates: &[NaiveDate],
) -> Result<Vec<f64>> {
    daily_mean_score(docs, category, dates, ScoreField::Sentiment, EmptyDay::Value(0.0))
}

/// Full-history decayed index.
pub fn sentiment_index(sv: &[f64], decay_scale: f64) -> Result<Vec<f64>> {
    SentimentIndex::new(decay_scale)?.apply(sv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentIndex {
    pub decay_scale: f64,
    /// When set, only the last `window` days (today included) contribute.
    pub window: Option<usize>,
}

impl SentimentIndex {
    pub fn new(decay_scale: f64) -> Result<Self> {
        if !(decay_scale > 0.0 && decay_scale.is_finite()) {
            return Err(Error::invalid(format!("decay scale must be positive, got {decay_scale}")));
        }
        Ok(Self {
            decay_scale,
            window: None,
        })
    }

    pub fn with_window(mut self, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("sentiment window must be at least 1 day"));
        }
        self.window = Some(window);
        Ok(self)
    }

    pub fn decay(&self) -> f64 {
        (-1.0 / self.decay_scale).exp()
    }

    pub fn apply(&self, sv: &[f64]) -> Result<Vec<f64>> {
        if sv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sentiment value".into()));
        }
        let q = self.decay();
        match self.window {
            None => {
                let mut out = Vec::with_capacity(sv.len());
                let mut si = 0.0;
                for &v in sv {
                    si = q * si + v;
                    out.push(si);
                }
                Ok(out)
            }
            Some(w) => {
                let weights: Vec<f64> = (0..w).map(|m| (-(m as f64) / self.decay_scale).exp()).collect();
                Ok((0..sv.len())
                    .map(|t| {
                        let lo = (t + 1).saturating_sub(w);
                        (lo..=t).map(|i| weights[t - i] * sv[i]).sum()
                    })
                    .collect())
            }
        }
    }
}

/// SV and SI columns for both document categories over a trading calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSeries {
    pub dates: Vec<NaiveDate>,
    pub decay_scale: f64,
    pub sv: BTreeMap<Category, Vec<f64>>,
    pub si: BTreeMap<Category, Vec<f64>>,
}

impl SentimentSeries {
    pub fn build(docs: &[DocumentRecord], dates: &[NaiveDate], index: SentimentIndex) -> Result<Self> {
        let mut sv = BTreeMap::new();
        let mut si = BTreeMap::new();
        for cat in Category::ALL {
            let values = daily_sentiment_value(docs, cat, dates)?;
            si.insert(cat, index.apply(&values)?);
            sv.insert(cat, values);
        }
        Ok(Self {
            dates: dates.to_vec(),
            decay_scale: index.decay_scale,
            sv,
            si,
        })
    }

    /// Columns `sv_news`, `si_news`, `sv_analysis`, `si_analysis`.
    pub fn to_frame(&self) -> Result<SeriesFrame> {
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for cat in Category::ALL {
            names.push(format!("sv_{}", cat.as_str()));
            cols.push(self.sv[&cat].clone());
            names.push(format!("si_{}", cat.as_str()));
            cols.push(self.si[&cat].clone());
        }
        SeriesFrame::new(self.dates.clone(), names, cols)
    }
}

/// Additive word-valence scorer: mean valence of known words, clamped to
/// [-1, 1]. Texts with no known word score 0.
#[derive(Debug, Clone, Default)]
pub struct LexiconScorer {
    valences: HashMap<String, f64>,
}

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.txt");

impl LexiconScorer {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon parses")
    }

    /// One `word<whitespace>valence` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut valences = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::invalid(format!("lexicon line {}: expected `word valence`", i + 1)));
            };
            let v: f64 = v
                .parse()
                .map_err(|_| Error::invalid(format!("lexicon line {}: bad valence {v:?}", i + 1)))?;
            valences.insert(word.to_lowercase(), v);
        }
        Ok(Self { valences })
    }

    pub fn score(&self, text: &str) -> f64 {
        let (sum, n) = text
            .split(|c: char| !c.is_alphabetic())
            .filter(|w| !w.is_empty())
            .filter_map(|w| self.valences.get(&w.to_lowercase()))
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).clamp(-1.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, d).unwrap()
    }

    fn doc(d: u32, cat: Category, s: f64) -> DocumentRecord {
        DocumentRecord {
            date: day(d),
            category: cat,
            text: String::new(),
            scores: DocumentScores {
                sentiment: Some(s),
                ..Default::default()
            },
        }
    }

    #[test]
    fn daily_values() {
        let dates = [day(2), day(3), day(4)];
        let docs = [
            doc(2, Category::News, 0.6),
            doc(4, Category::News, 0.2),
            doc(4, Category::News, -0.2),
            doc(3, Category::Analysis, 0.9),
        ];
        let sv = daily_sentiment_value(&docs, Category::News, &dates).unwrap();
        assert_eq!(sv, vec![0.6, 0.0, 0.0]);
    }

    #[test]
    fn weekend_docs_snap_forward() {
        // Sat 6th and Sun 7th land on Mon 8th.
        let dates = [day(5), day(8)];
        let docs = [doc(6, Category::News, 0.4), doc(7, Category::News, 0.2)];
        let sv = daily_sentiment_value(&docs, Category::News, &dates).unwrap();
        assert_eq!(sv[0], 0.0);
        assert!((sv[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn no_scored_docs_is_error() {
        let dates = [day(2)];
        let docs = [doc(2, Category::Analysis, 0.1)];
        assert!(daily_sentiment_value(&docs, Category::News, &dates).is_err());
    }

    #[test]
    fn index_examples() {
        assert_eq!(sentiment_index(&[1.0], 7.0).unwrap(), vec![1.0]);
        let si = sentiment_index(&[1.0, 0.0], 7.0).unwrap();
        assert!((si[1] - 0.866_877_899_9).abs() < 1e-9);
        let si = sentiment_index(&[1.0, 0.5], 7.0).unwrap();
        assert!((si[1] - 1.366_877_899_9).abs() < 1e-9);
        assert!(sentiment_index(&[1.0], 0.0).is_err());
    }

    #[test]
    fn windowed_index_truncates_history() {
        let idx = SentimentIndex::new(7.0).unwrap().with_window(2).unwrap();
        let si = idx.apply(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(si[0], 1.0);
        assert!((si[1] - (-1.0f64 / 7.0).exp()).abs() < 1e-15);
        assert_eq!(si[2], 0.0);
    }

    #[test]
    fn frame_columns() {
        let dates = [day(2), day(3)];
        let docs = [doc(2, Category::News, 0.5), doc(3, Category::Analysis, -0.5)];
        let s = SentimentSeries::build(&docs, &dates, SentimentIndex::new(7.0).unwrap()).unwrap();
        let f = s.to_frame().unwrap();
        assert_eq!(f.names(), &["sv_news", "si_news", "sv_analysis", "si_analysis"]);
        assert_eq!(f.column("si_analysis").unwrap(), &[0.0, -0.5]);
    }

    #[test]
    fn lexicon_scorer() {
        let lex = LexiconScorer::parse("gain 0.8\nloss -0.6\n# comment\nsurge 1.5\n").unwrap();
        assert_eq!(lex.score("nothing here"), 0.0);
        assert!((lex.score("Gain and loss") - 0.1).abs() < 1e-12);
        assert_eq!(lex.score("surge surge"), 1.0);
        assert!(LexiconScorer::bundled().score("strong gains") > 0.0);
    }
}
