use std::collections::BTreeMap;

use serde::Serialize;

use crate::baselines::{rfe, select_lag, LagSelection};
use crate::error::{Error, Result};
use crate::ingest::{
    align_and_fill, load_documents_jsonl, load_series_csv, segment, Category, DocumentRecord, Segments, SeriesFrame,
};
use crate::sentiment::{daily_mean_score, EmptyDay, ScoreField, SentimentIndex, SentimentSeries};
use crate::textmine::{
    fit_lda_gibbs, select_topic_count, tokenize, topic_day_scores, topic_trend, AssignmentRule, LdaParams, Stopwords,
    TopicCountSelection, TopicModel, TopicTrend,
};

use super::config::{ExperimentConfig, FeatureRecipe};

/// Which columns a model sees besides the target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FeatureSet {
    Financial,
    Text,
    Combined,
    /// Indicators plus the listed 1-based textual kinds.
    Kinds(Vec<usize>),
}

impl FeatureSet {
    pub fn label(&self) -> String {
        match self {
            FeatureSet::Financial => "financial".into(),
            FeatureSet::Text => "text".into(),
            FeatureSet::Combined => "combined".into(),
            FeatureSet::Kinds(k) => {
                let parts: Vec<String> = k.iter().map(|i| i.to_string()).collect();
                format!("kinds_{}", parts.join("_"))
            }
        }
    }
}

/// Aligned inputs with every derived feature column, on the price scale.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub frame: SeriesFrame,
    pub target: String,
    pub indicators: Vec<String>,
    /// Generated columns per recipe entry.
    pub text_columns: BTreeMap<FeatureRecipe, Vec<String>>,
    pub segments: Segments,
    pub sentiment: SentimentSeries,
    pub topic_model: Option<TopicModel>,
    pub topic_trend: Option<TopicTrend>,
    pub topic_selection: Option<TopicCountSelection>,
    /// Per-indicator VAR lag choice against the target on training rows.
    pub lag_report: Vec<(String, LagSelection)>,
    /// Indicators dropped by forest elimination.
    pub rfe_dropped: Vec<String>,
}

fn needs_topics(recipe: &[FeatureRecipe]) -> bool {
    recipe.iter().any(|r| {
        matches!(
            r,
            FeatureRecipe::TopicPolarity
                | FeatureRecipe::TopicSubjectivity
                | FeatureRecipe::TopicClass
                | FeatureRecipe::TopicSentiment
        )
    })
}

fn topic_field(r: FeatureRecipe) -> Option<ScoreField> {
    match r {
        FeatureRecipe::TopicPolarity => Some(ScoreField::Polarity),
        FeatureRecipe::TopicSubjectivity => Some(ScoreField::Subjectivity),
        FeatureRecipe::TopicClass => Some(ScoreField::ClassProb),
        FeatureRecipe::TopicSentiment => Some(ScoreField::Sentiment),
        _ => None,
    }
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<(SeriesFrame, Vec<String>, Vec<DocumentRecord>)> {
    cfg.check_paths()?;
    let d = &cfg.data;
    let prices = load_series_csv(&d.prices, &d.date_column, Some(&[d.target.as_str()]))?;
    let mut frames = vec![prices];
    for p in &d.indicators {
        frames.push(load_series_csv(p, &d.date_column, None)?);
    }
    let frame = align_and_fill(&frames, d.fill)?;
    let indicators: Vec<String> = frame.names().iter().filter(|n| **n != d.target).cloned().collect();
    let docs = load_documents_jsonl(&d.documents)?;
    Ok((frame, indicators, docs))
}

pub struct TopicOutputs {
    pub model: TopicModel,
    pub trend: TopicTrend,
    pub selection: Option<TopicCountSelection>,
    pub corpus_docs: usize,
}

/// Tokenizes every document and fits LDA, choosing `k` by coherence when
/// candidates are configured.
pub fn fit_topics(cfg: &ExperimentConfig, docs: &[DocumentRecord]) -> Result<TopicOutputs> {
    let stop = match &cfg.data.stopwords {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::bundled(),
    };
    let corpus = tokenize(docs, &stop, cfg.tokenize)?;
    let l = &cfg.lda;
    let params = LdaParams {
        k: l.k,
        alpha: Some(l.alpha),
        beta: l.beta,
        iterations: l.iterations,
        burn_in: l.burn_in,
        seed: cfg.seed,
    };
    let selection = if l.select_k.is_empty() {
        None
    } else {
        Some(select_topic_count(&corpus, &l.select_k, &params, l.top_n)?)
    };
    let k = selection.as_ref().map_or(l.k, |s| s.best_k);
    let model = fit_lda_gibbs(&corpus, &LdaParams { k, ..params })?;
    let trend = topic_trend(&model, &corpus, l.trend_slices.max(1))?;
    Ok(TopicOutputs {
        model,
        trend,
        selection,
        corpus_docs: corpus.n_docs(),
    })
}

pub fn build_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let (mut frame, mut indicators, docs) = load_inputs(cfg)?;
    let target = cfg.data.target.clone();
    let segments = segment(&frame, &cfg.segmentation)?;
    let dates = frame.dates().to_vec();

    let mut index = SentimentIndex::new(cfg.sentiment.decay_scale)?;
    if cfg.sentiment.window > 0 {
        index = index.with_window(cfg.sentiment.window)?;
    }
    let sentiment = SentimentSeries::build(&docs, &dates, index)?;

    let mut text_columns = BTreeMap::new();
    let mut recipe = cfg.features.recipe.clone();
    recipe.sort();
    recipe.dedup();
    for &r in &recipe {
        let (name, values) = match r {
            FeatureRecipe::SiNews => ("si_news", sentiment.si[&Category::News].clone()),
            FeatureRecipe::SiAnalysis => ("si_analysis", sentiment.si[&Category::Analysis].clone()),
            FeatureRecipe::ClassNews | FeatureRecipe::ClassAnalysis => {
                let (name, cat) = if r == FeatureRecipe::ClassNews {
                    ("class_news", Category::News)
                } else {
                    ("class_analysis", Category::Analysis)
                };
                let v = daily_mean_score(&docs, cat, &dates, ScoreField::ClassProb, EmptyDay::ForwardFill { initial: 0.5 })?;
                (name, v)
            }
            _ => continue,
        };
        frame.push_column(name, values)?;
        text_columns.insert(r, vec![name.to_string()]);
    }

    let (topic_model, topic_trend_out, topic_selection) = if needs_topics(&recipe) {
        let t = fit_topics(cfg, &docs)?;
        let fields: Vec<(FeatureRecipe, ScoreField)> =
            recipe.iter().filter_map(|&r| topic_field(r).map(|f| (r, f))).collect();
        let only: Vec<ScoreField> = fields.iter().map(|x| x.1).collect();
        let scores = topic_day_scores(&t.model, &docs, &dates, &only, AssignmentRule::ArgmaxTheta)?;
        for (r, f) in fields {
            let sub = scores.to_frame(&[f])?;
            frame = frame.hstack(&sub)?;
            text_columns.insert(r, sub.names().to_vec());
        }
        (Some(t.model), Some(t.trend), t.selection)
    } else {
        (None, None, None)
    };

    let uses_indicators = recipe.contains(&FeatureRecipe::LaggedIndicators);
    if !uses_indicators {
        indicators.clear();
    }
    let target_col = frame.column(&target).expect("target column loaded").to_vec();
    let train = segments.train.clone();
    let mut lag_report = Vec::new();
    for name in &indicators {
        let col = frame.column(name).expect("indicator column");
        match select_lag(&target_col[train.clone()], &col[train.clone()], cfg.features.lag_max, cfg.features.lag_criterion) {
            Ok(sel) => lag_report.push((name.clone(), sel)),
            Err(e) => log::warn!("lag selection for {name} skipped: {e}"),
        }
    }

    let mut rfe_dropped = Vec::new();
    let keep = cfg.features.rfe_keep;
    if keep > 0 && keep < indicators.len() {
        let rows: Vec<Vec<f64>> = (train.start..train.end - 1)
            .map(|t| indicators.iter().map(|n| frame.column(n).expect("indicator")[t]).collect())
            .collect();
        let y: Vec<f64> = (train.start + 1..train.end).map(|t| target_col[t]).collect();
        let sel = rfe(&indicators, &rows, &y, keep, 1, &cfg.features.forest)?;
        rfe_dropped = sel.eliminated;
        indicators.retain(|n| sel.selected.contains(n));
    }

    Ok(Dataset {
        frame,
        target,
        indicators,
        text_columns,
        segments,
        sentiment,
        topic_model,
        topic_trend: topic_trend_out,
        topic_selection,
        lag_report,
        rfe_dropped,
    })
}

impl Dataset {
    pub fn text_feature_names(&self) -> Vec<String> {
        self.text_columns.values().flatten().cloned().collect()
    }

    fn kind_columns(&self, kind: &[FeatureRecipe], number: usize) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for r in kind {
            let cols = self.text_columns.get(r).ok_or_else(|| {
                Error::invalid(format!("kind {number} needs {} but the feature recipe does not produce it", r.as_str()))
            })?;
            out.extend(cols.iter().cloned());
        }
        if out.is_empty() {
            return Err(Error::invalid(format!("kind {number} has no feature columns")));
        }
        Ok(out)
    }

    /// Column list with the target first; duplicate kinds in `Kinds` are
    /// dropped with a warning.
    pub fn columns(&self, set: &FeatureSet, kinds: [&[FeatureRecipe]; 3]) -> Result<Vec<String>> {
        let mut cols = vec![self.target.clone()];
        match set {
            FeatureSet::Financial => {
                if self.indicators.is_empty() {
                    return Err(Error::MissingFeature("financial features absent: no indicator columns are configured".into()));
                }
                cols.extend(self.indicators.iter().cloned());
            }
            FeatureSet::Text => {
                let text = self.text_feature_names();
                if text.is_empty() {
                    return Err(Error::MissingFeature("text features absent: the feature recipe lists no text generator".into()));
                }
                cols.extend(text);
            }
            FeatureSet::Combined => {
                cols.extend(self.indicators.iter().cloned());
                cols.extend(self.text_feature_names());
            }
            FeatureSet::Kinds(list) => {
                cols.extend(self.indicators.iter().cloned());
                let mut seen = Vec::new();
                for &k in list {
                    if seen.contains(&k) {
                        log::warn!("kind {k} listed twice in {list:?}; using it once");
                        continue;
                    }
                    seen.push(k);
                    let kind = kinds.get(k.wrapping_sub(1)).ok_or_else(|| Error::invalid(format!("unknown kind {k}")))?;
                    for c in self.kind_columns(kind, k)? {
                        if !cols.contains(&c) {
                            cols.push(c);
                        }
                    }
                }
            }
        }
        Ok(cols)
    }
}
