use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{average_ranks, dm_test, improvement_rate, rank_models, DmResult, MetricTable, Ranking};
use crate::io_util::write_atomic;

use super::config::{ExperimentConfig, ExternalModel, ModelKind};
use super::features::{Dataset, FeatureSet};
use super::models::{run_model, ModelRun, RowStatus};

/// Identifies the inputs behind a report. Carries no wall-clock data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub config: ExperimentConfig,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            config_sha256: cfg.hash()?,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
        })
    }
}

/// Runs models against one dataset, reusing a run when the same model sees
/// the same columns again.
pub struct Session<'a> {
    pub cfg: &'a ExperimentConfig,
    pub data: &'a Dataset,
    cache: BTreeMap<(ModelKind, Vec<String>), ModelRun>,
}

impl<'a> Session<'a> {
    pub fn new(cfg: &'a ExperimentConfig, data: &'a Dataset) -> Self {
        Self {
            cfg,
            data,
            cache: BTreeMap::new(),
        }
    }

    fn kinds(&self) -> [&'a [super::config::FeatureRecipe]; 3] {
        let k = &self.cfg.kind_ablation;
        [&k.kind1, &k.kind2, &k.kind3]
    }

    pub fn columns(&self, set: &FeatureSet) -> Result<Vec<String>> {
        self.data.columns(set, self.kinds())
    }

    pub fn run(&mut self, kind: ModelKind, set: &FeatureSet) -> Result<ModelRun> {
        let cols = if kind.uses_features() {
            self.columns(set)?
        } else {
            vec![self.data.target.clone()]
        };
        let key = (kind, cols.clone());
        if let Some(hit) = self.cache.get(&key) {
            let mut r = hit.clone();
            r.feature_set = set.label();
            return Ok(r);
        }
        log::info!("running {} on {} ({} columns)", kind.name(), set.label(), cols.len());
        let r = run_model(self.cfg, self.data, kind, &set.label(), &cols);
        self.cache.insert(key, r.clone());
        Ok(r)
    }
}

fn metric_table(labels: &[String], runs: &[&ModelRun]) -> MetricTable {
    MetricTable {
        models: labels.to_vec(),
        metrics: vec!["MAE".into(), "RMSE".into()],
        values: runs
            .iter()
            .map(|r| match r.metrics() {
                Some(m) => vec![Some(m.mae), Some(m.rmse)],
                None => vec![None, None],
            })
            .collect(),
    }
}

fn status_str(s: &RowStatus) -> String {
    match s {
        RowStatus::Ok => "ok".into(),
        RowStatus::Failed(why) => format!("failed: {why}"),
        RowStatus::External => "external".into(),
    }
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.filter(|x| x.is_finite()).map_or_else(String::new, |x| format!("{x:.decimals$}"))
}

/// `model,date,actual,predicted` for every successful run.
pub fn predictions_csv(runs: &[ModelRun]) -> Result<String> {
    let mut rows = vec![vec!["model".into(), "feature_set".into(), "date".into(), "actual".into(), "predicted".into()]];
    for r in runs.iter().filter(|r| r.is_ok()) {
        for ((d, a), p) in r.dates.iter().zip(&r.actual).zip(&r.predicted) {
            rows.push(vec![r.model.clone(), r.feature_set.clone(), d.to_string(), format!("{a}"), format!("{p}")]);
        }
    }
    csv_string(rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// All runs failed: the caller reports a runtime failure.
pub fn all_failed(runs: &[ModelRun]) -> bool {
    let ran: Vec<&ModelRun> = runs.iter().filter(|r| r.status != RowStatus::External).collect();
    !ran.is_empty() && ran.iter().all(|r| !r.is_ok())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub provenance: Provenance,
    pub runs: Vec<ModelRun>,
    pub ranking: Ranking,
}

pub fn run_compare(session: &mut Session) -> Result<CompareReport> {
    let cfg = session.cfg;
    let mut runs = Vec::new();
    for &kind in &cfg.compare.models {
        runs.push(session.run(kind, &FeatureSet::Combined)?);
    }
    if cfg.compare.include_external {
        for e in ExternalModel::ALL {
            if !cfg.compare.models.contains(&ModelKind::External(e)) {
                runs.push(ModelRun::external(ModelKind::External(e)));
            }
        }
    }
    let labels: Vec<String> = runs.iter().map(|r| r.model.clone()).collect();
    let ranking = rank_models(&metric_table(&labels, &runs.iter().collect::<Vec<_>>()))?;
    Ok(CompareReport {
        provenance: Provenance::new(cfg)?,
        runs,
        ranking,
    })
}

impl CompareReport {
    /// `model,MAE,rank_MAE,RMSE,rank_RMSE,weighted_rank,group,status`.
    pub fn table_csv(&self) -> Result<String> {
        let base = self.ranking.to_csv()?;
        let mut out = String::new();
        for (i, line) in base.lines().enumerate() {
            out.push_str(line);
            let extra = if i == 0 {
                csv_string(vec![vec![String::new(), "group".into(), "status".into()]])?
            } else {
                let r = &self.runs[i - 1];
                csv_string(vec![vec![String::new(), r.group.clone(), status_str(&r.status)]])?
            };
            out.push_str(extra.trim_end_matches('\n'));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = vec![dir.join("compare.csv"), dir.join("compare_predictions.csv"), dir.join("compare.json")];
        write_atomic(&files[0], self.table_csv()?.as_bytes())?;
        write_atomic(&files[1], predictions_csv(&self.runs)?.as_bytes())?;
        write_json(&files[2], self)?;
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub text: Option<f64>,
    pub financial: Option<f64>,
    pub combined: Option<f64>,
    /// Percent change from financial-only to combined; positive is better.
    pub improvement_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextAblationRow {
    pub model: String,
    pub mae: AblationCell,
    pub rmse: AblationCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextAblationReport {
    pub provenance: Provenance,
    pub rows: Vec<TextAblationRow>,
    pub runs: Vec<ModelRun>,
}

fn cell(runs: [&ModelRun; 3], pick: fn(&crate::eval::RegressionMetrics) -> f64) -> AblationCell {
    let [t, f, c] = runs.map(|r| r.metrics().map(|m| pick(&m)));
    let improvement_percent = match (f, c) {
        (Some(f), Some(c)) => improvement_rate(f, c).ok().map(|r| 100.0 * r),
        _ => None,
    };
    AblationCell {
        text: t,
        financial: f,
        combined: c,
        improvement_percent,
    }
}

/// Every configured model on text-only, financial-only and combined inputs.
pub fn run_text_ablation(session: &mut Session) -> Result<TextAblationReport> {
    let cfg = session.cfg;
    session.columns(&FeatureSet::Text)?;
    session.columns(&FeatureSet::Financial)?;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &kind in &cfg.text_ablation.models {
        let t = session.run(kind, &FeatureSet::Text)?;
        let f = session.run(kind, &FeatureSet::Financial)?;
        let c = session.run(kind, &FeatureSet::Combined)?;
        rows.push(TextAblationRow {
            model: kind.name(),
            mae: cell([&t, &f, &c], |m| m.mae),
            rmse: cell([&t, &f, &c], |m| m.rmse),
        });
        runs.extend([t, f, c]);
    }
    Ok(TextAblationReport {
        provenance: Provenance::new(cfg)?,
        rows,
        runs,
    })
}

impl TextAblationReport {
    /// `metric,model,text,financial,combined,improvement_percent`, MAE block
    /// first.
    pub fn table_csv(&self) -> Result<String> {
        let mut rows = vec![["metric", "model", "text", "financial", "combined", "improvement_percent"]
            .map(String::from)
            .to_vec()];
        for (name, pick) in [("MAE", 0), ("RMSE", 1)] {
            for r in &self.rows {
                let c = if pick == 0 { &r.mae } else { &r.rmse };
                rows.push(vec![
                    name.into(),
                    r.model.clone(),
                    fmt_opt(c.text, 6),
                    fmt_opt(c.financial, 6),
                    fmt_opt(c.combined, 6),
                    fmt_opt(c.improvement_percent, 4),
                ]);
            }
        }
        csv_string(rows)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = vec![
            dir.join("ablate_text.csv"),
            dir.join("ablate_text_predictions.csv"),
            dir.join("ablate_text.json"),
        ];
        write_atomic(&files[0], self.table_csv()?.as_bytes())?;
        write_atomic(&files[1], predictions_csv(&self.runs)?.as_bytes())?;
        write_json(&files[2], self)?;
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAblationReport {
    pub provenance: Provenance,
    pub labels: Vec<String>,
    pub kinds: Vec<Vec<usize>>,
    pub ranking: Ranking,
    pub runs: Vec<ModelRun>,
}

/// "Full textual data" for all three kinds, otherwise "Kind a + Kind b".
pub fn kind_label(kinds: &[usize]) -> String {
    let mut uniq: Vec<usize> = Vec::new();
    for &k in kinds {
        if !uniq.contains(&k) {
            uniq.push(k);
        }
    }
    let mut sorted = uniq.clone();
    sorted.sort_unstable();
    if sorted == [1, 2, 3] {
        return "Full textual data".into();
    }
    uniq.iter().map(|k| format!("Kind {k}")).collect::<Vec<_>>().join(" + ")
}

/// The configured model on indicators plus each combination of textual kinds.
pub fn run_kind_ablation(session: &mut Session) -> Result<KindAblationReport> {
    let cfg = session.cfg;
    let ka = &cfg.kind_ablation;
    for k in 1..=3 {
        session.columns(&FeatureSet::Kinds(vec![k]))?;
    }
    let mut runs = Vec::new();
    let mut labels = Vec::new();
    let mut kinds = Vec::new();
    for combo in &ka.combinations {
        let mut uniq = Vec::new();
        for &k in combo {
            if uniq.contains(&k) {
                log::warn!("kind {k} repeated in combination {combo:?}; deduplicated");
            } else {
                uniq.push(k);
            }
        }
        let mut key = uniq.clone();
        key.sort_unstable();
        runs.push(session.run(ka.model, &FeatureSet::Kinds(key))?);
        labels.push(kind_label(&uniq));
        kinds.push(uniq);
    }
    let ranking = rank_models(&metric_table(&labels, &runs.iter().collect::<Vec<_>>()))?;
    Ok(KindAblationReport {
        provenance: Provenance::new(cfg)?,
        labels,
        kinds,
        ranking,
        runs,
    })
}

impl KindAblationReport {
    pub fn table_csv(&self) -> Result<String> {
        self.ranking.to_csv()
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = vec![
            dir.join("ablate_kinds.csv"),
            dir.join("ablate_kinds_predictions.csv"),
            dir.join("ablate_kinds.json"),
        ];
        write_atomic(&files[0], self.table_csv()?.as_bytes())?;
        write_atomic(&files[1], predictions_csv(&self.runs)?.as_bytes())?;
        write_json(&files[2], self)?;
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmPair {
    pub model_a: String,
    pub model_b: String,
    pub result: DmResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmReport {
    pub provenance: Provenance,
    pub models: Vec<String>,
    /// Every ordered pair `a != b`.
    pub pairs: Vec<DmPair>,
    /// Opponents each model beats: negative statistic with `p < alpha`.
    pub wins: Vec<usize>,
    pub ranks: Vec<f64>,
    /// Models left out because they produced no forecast.
    pub skipped: Vec<String>,
    pub runs: Vec<ModelRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmTable {
    pub models: Vec<String>,
    pub pairs: Vec<DmPair>,
    pub wins: Vec<usize>,
    pub ranks: Vec<f64>,
}

/// Pairwise DM statistics and a rank by win count; equal counts share the
/// mean rank.
pub fn dm_ranking(names: &[String], errors: &[Vec<f64>], cfg: &super::config::DmConfig) -> Result<DmTable> {
    if names.len() < 2 || names.len() != errors.len() {
        return Err(Error::invalid(format!(
            "DM comparison needs at least two models with forecasts, got {}",
            names.len()
        )));
    }
    let n = errors[0].len();
    if let Some(i) = errors.iter().position(|e| e.len() != n) {
        return Err(Error::Shape(format!(
            "{} has {} forecasts, {} has {n}",
            names[i],
            errors[i].len(),
            names[0]
        )));
    }
    let m = names.len();
    let mut pairs = Vec::with_capacity(m * (m - 1));
    let mut wins = vec![0usize; m];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let result = dm_test(&errors[a], &errors[b], cfg.loss, cfg.horizon)?;
            if result.statistic < 0.0 && result.p_value < cfg.alpha {
                wins[a] += 1;
            }
            pairs.push(DmPair {
                model_a: names[a].clone(),
                model_b: names[b].clone(),
                result,
            });
        }
    }
    let neg: Vec<f64> = wins.iter().map(|&w| -(w as f64)).collect();
    Ok(DmTable {
        models: names.to_vec(),
        pairs,
        wins,
        ranks: average_ranks(&neg),
    })
}

pub fn run_dm(session: &mut Session) -> Result<DmReport> {
    let cfg = session.cfg;
    let mut runs = Vec::new();
    for &kind in &cfg.dm.models {
        runs.push(session.run(kind, &FeatureSet::Combined)?);
    }
    dm_from_runs(cfg, runs)
}

pub fn dm_from_runs(cfg: &ExperimentConfig, runs: Vec<ModelRun>) -> Result<DmReport> {
    let ok: Vec<&ModelRun> = runs.iter().filter(|r| r.is_ok()).collect();
    let skipped = runs.iter().filter(|r| !r.is_ok()).map(|r| r.model.clone()).collect();
    let names: Vec<String> = ok.iter().map(|r| r.model.clone()).collect();
    let errors: Vec<Vec<f64>> = ok.iter().map(|r| r.errors()).collect();
    let t = dm_ranking(&names, &errors, &cfg.dm)?;
    Ok(DmReport {
        provenance: Provenance::new(cfg)?,
        models: t.models,
        pairs: t.pairs,
        wins: t.wins,
        ranks: t.ranks,
        skipped,
        runs,
    })
}

impl DmReport {
    /// `model_a,model_b,statistic,p_value`.
    pub fn matrix_csv(&self) -> Result<String> {
        let mut rows = vec![["model_a", "model_b", "statistic", "p_value"].map(String::from).to_vec()];
        for p in &self.pairs {
            rows.push(vec![
                p.model_a.clone(),
                p.model_b.clone(),
                format!("{:.6}", p.result.statistic),
                format!("{:.6}", p.result.p_value),
            ]);
        }
        csv_string(rows)
    }

    /// `model,wins,rank`.
    pub fn rank_csv(&self) -> Result<String> {
        let mut rows = vec![["model", "wins", "rank"].map(String::from).to_vec()];
        for i in 0..self.models.len() {
            rows.push(vec![self.models[i].clone(), self.wins[i].to_string(), format!("{:.1}", self.ranks[i])]);
        }
        csv_string(rows)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = vec![dir.join("dm_matrix.csv"), dir.join("dm_rank.csv"), dir.join("dm.json")];
        write_atomic(&files[0], self.matrix_csv()?.as_bytes())?;
        write_atomic(&files[1], self.rank_csv()?.as_bytes())?;
        write_json(&files[2], self)?;
        Ok(files)
    }
}
