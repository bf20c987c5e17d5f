use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{Criterion, ForestParams, GarchOptions};
use crate::error::{Error, Result};
use crate::eval::DmLoss;
use crate::ingest::{FillPolicy, SegmentationSpec};
use crate::io_util::read_to_string;
use crate::metaheuristics::{AlgoKind, Algorithm, BatConfig, CsConfig, GaConfig, PsoConfig, WoaConfig};
use crate::rnn::CellKind;
use crate::textmine::TokenizeOptions;

/// Named generators of text feature columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRecipe {
    LaggedIndicators,
    SiNews,
    SiAnalysis,
    ClassNews,
    ClassAnalysis,
    TopicPolarity,
    TopicSubjectivity,
    TopicClass,
    TopicSentiment,
}

impl FeatureRecipe {
    pub const ALL: [FeatureRecipe; 9] = [
        FeatureRecipe::LaggedIndicators,
        FeatureRecipe::SiNews,
        FeatureRecipe::SiAnalysis,
        FeatureRecipe::ClassNews,
        FeatureRecipe::ClassAnalysis,
        FeatureRecipe::TopicPolarity,
        FeatureRecipe::TopicSubjectivity,
        FeatureRecipe::TopicClass,
        FeatureRecipe::TopicSentiment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureRecipe::LaggedIndicators => "lagged_indicators",
            FeatureRecipe::SiNews => "si_news",
            FeatureRecipe::SiAnalysis => "si_analysis",
            FeatureRecipe::ClassNews => "class_news",
            FeatureRecipe::ClassAnalysis => "class_analysis",
            FeatureRecipe::TopicPolarity => "topic_polarity",
            FeatureRecipe::TopicSubjectivity => "topic_subjectivity",
            FeatureRecipe::TopicClass => "topic_class",
            FeatureRecipe::TopicSentiment => "topic_sentiment",
        }
    }

    pub fn is_text(self) -> bool {
        self != FeatureRecipe::LaggedIndicators
    }
}

/// Row families of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Tuned(AlgoKind, CellKind),
    Plain(CellKind),
    Var,
    Linear,
    Arima,
    Garch,
    /// Listed for completeness, not run here.
    External(ExternalModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExternalModel {
    PsoSvm,
    PsoSvr,
    Svm,
    Svr,
    Ecm,
}

impl ExternalModel {
    pub const ALL: [ExternalModel; 5] = [
        ExternalModel::PsoSvm,
        ExternalModel::PsoSvr,
        ExternalModel::Svm,
        ExternalModel::Svr,
        ExternalModel::Ecm,
    ];

    fn name(self) -> &'static str {
        match self {
            ExternalModel::PsoSvm => "PSO-SVM",
            ExternalModel::PsoSvr => "PSO-SVR",
            ExternalModel::Svm => "SVM",
            ExternalModel::Svr => "SVR",
            ExternalModel::Ecm => "ECM",
        }
    }
}

fn cell_name(c: CellKind) -> &'static str {
    match c {
        CellKind::Lstm => "LSTM",
        CellKind::Gru => "GRU",
    }
}

impl ModelKind {
    pub fn name(self) -> String {
        match self {
            ModelKind::Tuned(a, c) => format!("{}-{}", a.as_str().to_uppercase(), cell_name(c)),
            ModelKind::Plain(c) => cell_name(c).to_string(),
            ModelKind::Var => "VAR".into(),
            ModelKind::Linear => "Linear".into(),
            ModelKind::Arima => "ARIMA".into(),
            ModelKind::Garch => "GARCH".into(),
            ModelKind::External(e) => e.name().into(),
        }
    }

    /// Table grouping label.
    pub fn group(self) -> &'static str {
        match self {
            ModelKind::Tuned(..) => "deep_learning_optimized",
            ModelKind::Plain(_) => "deep_learning",
            ModelKind::External(ExternalModel::PsoSvm | ExternalModel::PsoSvr) => "machine_learning_optimized",
            ModelKind::External(ExternalModel::Svm | ExternalModel::Svr) => "machine_learning",
            ModelKind::Linear => "machine_learning",
            ModelKind::Var | ModelKind::External(ExternalModel::Ecm) => "statistical_multi_series",
            ModelKind::Arima | ModelKind::Garch => "statistical_single_series",
        }
    }

    pub fn uses_features(self) -> bool {
        !matches!(self, ModelKind::Arima | ModelKind::Garch | ModelKind::External(_))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_uppercase();
        let cell = |c: &str| match c {
            "LSTM" => Some(CellKind::Lstm),
            "GRU" => Some(CellKind::Gru),
            _ => None,
        };
        if let Some(c) = cell(&up) {
            return Ok(ModelKind::Plain(c));
        }
        if let Some((a, c)) = up.split_once('-') {
            if let (Ok(algo), Some(cell)) = (a.parse::<AlgoKind>(), cell(c)) {
                return Ok(ModelKind::Tuned(algo, cell));
            }
        }
        match up.as_str() {
            "VAR" => return Ok(ModelKind::Var),
            "LINEAR" => return Ok(ModelKind::Linear),
            "ARIMA" | "AR" => return Ok(ModelKind::Arima),
            "GARCH" => return Ok(ModelKind::Garch),
            _ => {}
        }
        ExternalModel::ALL
            .into_iter()
            .find(|e| e.name() == up)
            .map(ModelKind::External)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub prices: PathBuf,
    pub date_column: String,
    pub target: String,
    pub indicators: Vec<PathBuf>,
    pub documents: PathBuf,
    /// Omitted means the bundled list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    pub fill: FillPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub recipe: Vec<FeatureRecipe>,
    /// Indicators kept by forest elimination; 0 keeps all.
    pub rfe_keep: usize,
    pub forest: ForestParams,
    pub lag_max: usize,
    pub lag_criterion: Criterion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentimentConfig {
    pub decay_scale: f64,
    /// Truncation in days; 0 sums the whole history.
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Candidate topic counts; empty fits `k` directly.
    pub select_k: Vec<usize>,
    pub top_n: usize,
    pub trend_slices: usize,
}

/// Fixed hyperparameters of untuned networks plus training knobs shared by
/// every recurrent model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnConfig {
    pub hidden_units: usize,
    pub timesteps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub hidden_units: [usize; 2],
    pub timesteps: [usize; 2],
    pub learning_rate: [f64; 2],
    /// Batch size is searched as `2^b`.
    pub batch_size_log2: [usize; 2],
    pub swarm_size: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfigs {
    pub pso: PsoConfig,
    pub ga: GaConfig,
    pub cs: CsConfig,
    pub woa: WoaConfig,
    pub bat: BatConfig,
}

impl OptimizerConfigs {
    pub fn algorithm(&self, kind: AlgoKind) -> Algorithm {
        match kind {
            AlgoKind::Pso => Algorithm::Pso(self.pso),
            AlgoKind::Ga => Algorithm::Ga(self.ga),
            AlgoKind::Cs => Algorithm::Cs(self.cs),
            AlgoKind::Woa => Algorithm::Woa(self.woa),
            AlgoKind::Bat => Algorithm::Bat(self.bat),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub var_lag: usize,
    pub linear_lags: usize,
    pub ar_p: usize,
    pub ar_d: usize,
    pub garch: GarchOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub models: Vec<ModelKind>,
    /// Adds rows for families that are not run here.
    pub include_external: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextAblationConfig {
    pub models: Vec<ModelKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindAblationConfig {
    pub model: ModelKind,
    pub kind1: Vec<FeatureRecipe>,
    pub kind2: Vec<FeatureRecipe>,
    pub kind3: Vec<FeatureRecipe>,
    /// 1-based kind numbers per row.
    pub combinations: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmConfig {
    pub models: Vec<ModelKind>,
    pub loss: DmLoss,
    pub horizon: usize,
    /// Significance level for a pairwise win.
    pub alpha: f64,
}

/// Every knob of an experiment. No field has a run-time default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub segmentation: SegmentationSpec,
    pub features: FeatureConfig,
    pub sentiment: SentimentConfig,
    pub tokenize: TokenizeOptions,
    pub lda: LdaConfig,
    pub rnn: RnnConfig,
    pub search: SearchConfig,
    pub optimizers: OptimizerConfigs,
    pub baselines: BaselineConfig,
    pub compare: CompareConfig,
    pub text_ablation: TextAblationConfig,
    pub kind_ablation: KindAblationConfig,
    pub dm: DmConfig,
}

pub const KIND_COMBINATIONS: [&[usize]; 7] = [&[1, 2, 3], &[1, 2], &[2, 3], &[1, 3], &[1], &[2], &[3]];

impl ExperimentConfig {
    /// Settings used with the bundled synthetic data; paths point into `dir`.
    pub fn template(dir: &Path, segmentation: SegmentationSpec) -> Self {
        use FeatureRecipe::*;
        let m = |s: &str| s.parse::<ModelKind>().expect("known model");
        Self {
            seed: 0,
            data: DataConfig {
                prices: dir.join("prices.csv"),
                date_column: "date".into(),
                target: "close".into(),
                indicators: vec![dir.join("indicators.csv")],
                documents: dir.join("documents.jsonl"),
                stopwords: None,
                fill: FillPolicy::ForwardFill,
            },
            segmentation,
            features: FeatureConfig {
                recipe: vec![
                    LaggedIndicators,
                    SiNews,
                    SiAnalysis,
                    ClassNews,
                    ClassAnalysis,
                    TopicPolarity,
                    TopicSubjectivity,
                ],
                rfe_keep: 0,
                forest: ForestParams::default(),
                lag_max: 8,
                lag_criterion: Criterion::Aic,
            },
            sentiment: SentimentConfig {
                decay_scale: 7.0,
                window: 0,
            },
            tokenize: TokenizeOptions::default(),
            lda: LdaConfig {
                k: 4,
                alpha: 0.1,
                beta: 0.01,
                iterations: 200,
                burn_in: 100,
                select_k: vec![],
                top_n: 10,
                trend_slices: 5,
            },
            rnn: RnnConfig {
                hidden_units: 32,
                timesteps: 10,
                learning_rate: 1e-3,
                batch_size: 32,
                epochs: 200,
                patience: 20,
                clip_norm: 5.0,
            },
            search: SearchConfig {
                hidden_units: [8, 128],
                timesteps: [2, 30],
                learning_rate: [1e-4, 1e-1],
                batch_size_log2: [3, 6],
                swarm_size: 20,
                iterations: 30,
            },
            optimizers: OptimizerConfigs {
                pso: PsoConfig::default(),
                ga: GaConfig::default(),
                cs: CsConfig::default(),
                woa: WoaConfig::default(),
                bat: BatConfig::default(),
            },
            baselines: BaselineConfig {
                var_lag: 2,
                linear_lags: 5,
                ar_p: 2,
                ar_d: 1,
                garch: GarchOptions::default(),
            },
            compare: CompareConfig {
                models: ["PSO-LSTM", "PSO-GRU", "LSTM", "GRU", "VAR", "Linear", "ARIMA", "GARCH"]
                    .into_iter()
                    .map(m)
                    .collect(),
                include_external: true,
            },
            text_ablation: TextAblationConfig {
                models: ["PSO-LSTM", "LSTM", "VAR", "Linear"].into_iter().map(m).collect(),
            },
            kind_ablation: KindAblationConfig {
                model: m("PSO-LSTM"),
                kind1: vec![SiNews, SiAnalysis],
                kind2: vec![ClassNews, ClassAnalysis],
                kind3: vec![TopicPolarity, TopicSubjectivity],
                combinations: KIND_COMBINATIONS.iter().map(|c| c.to_vec()).collect(),
            },
            dm: DmConfig {
                models: [
                    "PSO-LSTM", "PSO-GRU", "LSTM", "GRU", "VAR", "CS-LSTM", "WOA-LSTM", "GA-LSTM", "BAT-LSTM",
                ]
                .into_iter()
                .map(m)
                .collect(),
                loss: DmLoss::Squared,
                horizon: 1,
                alpha: 0.05,
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file; relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.data.resolve(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let s = &self.search;
        if s.hidden_units[0] == 0 || s.hidden_units[0] >= s.hidden_units[1] {
            return bad(format!("search.hidden_units {:?} is not a valid range", s.hidden_units));
        }
        if s.timesteps[0] == 0 || s.timesteps[0] >= s.timesteps[1] {
            return bad(format!("search.timesteps {:?} is not a valid range", s.timesteps));
        }
        if !(s.learning_rate[0] > 0.0 && s.learning_rate[0] < s.learning_rate[1]) {
            return bad(format!("search.learning_rate {:?} is not a valid range", s.learning_rate));
        }
        if s.batch_size_log2[0] >= s.batch_size_log2[1] || s.batch_size_log2[1] > 16 {
            return bad(format!("search.batch_size_log2 {:?} is not a valid range", s.batch_size_log2));
        }
        if s.swarm_size == 0 || s.iterations == 0 {
            return bad("search needs a non-empty swarm and at least one iteration".into());
        }
        let r = &self.rnn;
        if r.hidden_units == 0 || r.timesteps == 0 || r.batch_size == 0 || !(r.learning_rate > 0.0) {
            return bad("rnn dimensions and learning rate must be positive".into());
        }
        if self.lda.k == 0 || self.lda.select_k.contains(&0) {
            return bad("lda topic counts must be positive".into());
        }
        if self.lda.burn_in >= self.lda.iterations {
            return bad("lda.burn_in must be below lda.iterations".into());
        }
        if self.baselines.var_lag == 0 || self.baselines.linear_lags == 0 || self.baselines.ar_p == 0 {
            return bad("baseline lags must be at least 1".into());
        }
        if self.sentiment.decay_scale <= 0.0 {
            return bad("sentiment.decay_scale must be positive".into());
        }
        if !(self.dm.alpha > 0.0 && self.dm.alpha < 1.0) || self.dm.horizon == 0 {
            return bad("dm.alpha must lie in (0, 1) and dm.horizon be at least 1".into());
        }
        for combo in &self.kind_ablation.combinations {
            if combo.is_empty() || combo.iter().any(|k| !(1..=3).contains(k)) {
                return bad(format!("kind combination {combo:?} must name kinds 1..=3"));
            }
        }
        Ok(())
    }

    /// Fails when a referenced input file is missing.
    pub fn check_paths(&self) -> Result<()> {
        let d = &self.data;
        let mut paths = vec![&d.prices, &d.documents];
        paths.extend(&d.indicators);
        paths.extend(&d.stopwords);
        for p in paths {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

impl DataConfig {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.prices);
        fix(&mut self.documents);
        self.indicators.iter_mut().for_each(fix);
        if let Some(p) = self.stopwords.as_mut() {
            fix(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn seg() -> SegmentationSpec {
        let d = |m, day| NaiveDate::from_ymd_opt(2021, m, day).unwrap();
        SegmentationSpec {
            train_start: d(1, 4),
            train_end: d(6, 1),
            context_days: 20,
            forecast_start: d(8, 2),
            forecast_end: d(9, 30),
        }
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let cfg = ExperimentConfig::template(Path::new("data"), seg());
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(other.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn unknown_keys_and_models_rejected() {
        let text = ExperimentConfig::template(Path::new("data"), seg()).to_toml().unwrap();
        assert!(ExperimentConfig::from_toml(&format!("bogus = 1\n{text}")).is_err());
        let bad = text.replace("\"PSO-GRU\"", "\"PSO-TREE\"");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn model_names() {
        for name in ["PSO-LSTM", "BAT-LSTM", "GA-GRU", "LSTM", "VAR", "Linear", "ARIMA", "GARCH", "ECM", "PSO-SVR"] {
            assert_eq!(name.parse::<ModelKind>().unwrap().name(), name);
        }
        assert!("RNN".parse::<ModelKind>().is_err());
    }

    #[test]
    fn missing_paths_reported() {
        let cfg = ExperimentConfig::template(Path::new("/nonexistent"), seg());
        assert!(matches!(cfg.check_paths(), Err(Error::Config(_))));
    }
}
