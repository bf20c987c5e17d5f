use std::collections::BTreeMap;
use std::ops::Range;

use chrono::NaiveDate;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_ar, fit_garch11, fit_linear, fit_var, forecast_ar, predict_linear, var_one_step};
use crate::error::{Error, Result};
use crate::eval::{regression_metrics, RegressionMetrics};
use crate::ingest::{make_supervised_windows, minmax_normalize, MinMaxScaler, SeriesFrame, SupervisedSet};
use crate::metaheuristics::{optimize, particle_seed, AlgoKind, DimKind, Dimension, IterationRecord, SearchSpace};
use crate::rnn::{train, CellKind, Checkpoint, RnnSpec, TrainedModel};

use super::config::{ExperimentConfig, ModelKind};
use super::features::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Failed(String),
    External,
}

/// One model's forecast-segment output; every table cell derives from these
/// stored predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub model: String,
    pub group: String,
    pub feature_set: String,
    pub columns: Vec<String>,
    pub status: RowStatus,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub hyperparameters: BTreeMap<String, f64>,
    pub convergence: Vec<IterationRecord>,
    /// Trained network weights for recurrent models.
    #[serde(skip)]
    pub checkpoint: Option<Checkpoint>,
}

impl ModelRun {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }

    pub fn metrics(&self) -> Option<RegressionMetrics> {
        if !self.is_ok() {
            return None;
        }
        regression_metrics(&self.actual, &self.predicted).ok()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.actual.iter().zip(&self.predicted).map(|(a, p)| a - p).collect()
    }

    pub fn external(kind: ModelKind) -> Self {
        Self {
            model: kind.name(),
            group: kind.group().into(),
            feature_set: String::new(),
            columns: vec![],
            status: RowStatus::External,
            dates: vec![],
            actual: vec![],
            predicted: vec![],
            hyperparameters: BTreeMap::new(),
            convergence: vec![],
            checkpoint: None,
        }
    }

    fn failed(kind: ModelKind, feature_set: &str, columns: &[String], e: &Error) -> Self {
        Self {
            status: RowStatus::Failed(e.to_string()),
            feature_set: feature_set.into(),
            columns: columns.to_vec(),
            ..Self::external(kind)
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of one model family within a run. Independent of the feature set,
/// so identical inputs reproduce identical forecasts.
pub fn model_seed(run_seed: u64, kind: ModelKind) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(fnv1a(&kind.name()));
    rng.next_u64()
}

struct Scaled {
    frame01: SeriesFrame,
    scaler: MinMaxScaler,
    target_idx: usize,
}

fn scale(data: &Dataset, columns: &[String]) -> Result<Scaled> {
    let frame = data.frame.select(columns)?;
    let (frame01, scaler) = minmax_normalize(&frame, data.segments.train.clone())?;
    let target_idx = frame01.column_index(&data.target).expect("target is the first column");
    Ok(Scaled {
        frame01,
        scaler,
        target_idx,
    })
}

struct Splits {
    train: SupervisedSet,
    valid: SupervisedSet,
    test: SupervisedSet,
}

fn split(data: &Dataset, s: &Scaled, timesteps: usize) -> Result<Splits> {
    let all = make_supervised_windows(&s.frame01, &data.target, timesteps, 1)?;
    let within = |r: &Range<usize>| {
        let r = r.clone();
        all.filter_target_rows(move |row| r.contains(&row))
    };
    let seg = &data.segments;
    let out = Splits {
        train: within(&seg.train),
        valid: within(&seg.context),
        test: within(&seg.forecast),
    };
    if out.train.is_empty() || out.test.is_empty() {
        return Err(Error::invalid(format!(
            "timesteps {timesteps} leaves no training or forecast windows"
        )));
    }
    if out.test.len() != seg.forecast.len() {
        return Err(Error::invalid(format!(
            "timesteps {timesteps} reaches before the first row for some forecast dates"
        )));
    }
    Ok(out)
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hyper {
    hidden: usize,
    timesteps: usize,
    lr: f64,
    batch: usize,
}

impl Hyper {
    fn to_map(self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("hidden_units".to_string(), self.hidden as f64),
            ("timesteps".to_string(), self.timesteps as f64),
            ("learning_rate".to_string(), self.lr),
            ("batch_size".to_string(), self.batch as f64),
        ])
    }
}

struct Fitted {
    model: TrainedModel,
    splits: Splits,
    valid_rmse: f64,
}

fn fit_rnn(cfg: &ExperimentConfig, data: &Dataset, s: &Scaled, cell: CellKind, h: Hyper, seed: u64) -> Result<Fitted> {
    let splits = split(data, s, h.timesteps)?;
    let spec = RnnSpec {
        cell,
        input_dim: s.frame01.n_columns(),
        hidden_units: h.hidden,
        timesteps: h.timesteps,
        learning_rate: h.lr,
        epochs: cfg.rnn.epochs,
        batch_size: h.batch,
        seed,
        patience: cfg.rnn.patience,
        clip_norm: cfg.rnn.clip_norm,
    };
    let valid = (!splits.valid.is_empty()).then_some(&splits.valid);
    let model = train(&spec, &splits.train, valid)?;
    let valid_rmse = match valid {
        Some(v) => rmse(&model.predict_set(v)?, &v.targets),
        None => rmse(&model.predict_set(&splits.train)?, &splits.train.targets),
    };
    Ok(Fitted {
        model,
        splits,
        valid_rmse,
    })
}

fn search_space(cfg: &ExperimentConfig) -> Result<SearchSpace> {
    let s = &cfg.search;
    SearchSpace::new(vec![
        Dimension::new("hidden_units", DimKind::Integer, s.hidden_units[0] as f64, s.hidden_units[1] as f64),
        Dimension::new("timesteps", DimKind::Integer, s.timesteps[0] as f64, s.timesteps[1] as f64),
        Dimension::new("learning_rate", DimKind::LogContinuous, s.learning_rate[0], s.learning_rate[1]),
        Dimension::new(
            "batch_size_log2",
            DimKind::Integer,
            s.batch_size_log2[0] as f64,
            s.batch_size_log2[1] as f64,
        ),
    ])
}

fn decode(point: &[f64]) -> Hyper {
    Hyper {
        hidden: point[0] as usize,
        timesteps: point[1] as usize,
        lr: point[2],
        batch: 1usize << point[3] as u32,
    }
}

struct Forecast {
    predicted: Vec<f64>,
    hyper: BTreeMap<String, f64>,
    convergence: Vec<IterationRecord>,
    checkpoint: Option<Checkpoint>,
}

fn rnn_forecast(fitted: &Fitted, s: &Scaled) -> Result<Vec<f64>> {
    Ok(fitted
        .model
        .predict_set(&fitted.splits.test)?
        .into_iter()
        .map(|y| s.scaler.inverse_value(s.target_idx, y))
        .collect())
}

fn run_plain(cfg: &ExperimentConfig, data: &Dataset, cols: &[String], cell: CellKind, seed: u64) -> Result<Forecast> {
    let s = scale(data, cols)?;
    let h = Hyper {
        hidden: cfg.rnn.hidden_units,
        timesteps: cfg.rnn.timesteps,
        lr: cfg.rnn.learning_rate,
        batch: cfg.rnn.batch_size,
    };
    let fitted = fit_rnn(cfg, data, &s, cell, h, seed)?;
    Ok(Forecast {
        predicted: rnn_forecast(&fitted, &s)?,
        hyper: h.to_map(),
        convergence: vec![],
        checkpoint: Some(fitted.model.checkpoint()),
    })
}

/// Searches hyperparameters by validation RMSE, then retrains the winner
/// with the seed its particle used.
fn run_tuned(
    cfg: &ExperimentConfig,
    data: &Dataset,
    cols: &[String],
    algo: AlgoKind,
    cell: CellKind,
    seed: u64,
) -> Result<Forecast> {
    let s = scale(data, cols)?;
    let space = search_space(cfg)?;
    let objective = |point: &[f64], pseed: u64| -> Result<f64> {
        Ok(fit_rnn(cfg, data, &s, cell, decode(point), pseed)?.valid_rmse)
    };
    let res = optimize(
        &objective,
        &space,
        cfg.optimizers.algorithm(algo),
        cfg.search.swarm_size,
        cfg.search.iterations,
        seed,
    )?;
    let h = decode(&res.best_point);
    let fitted = fit_rnn(cfg, data, &s, cell, h, particle_seed(seed, res.best_particle))?;
    Ok(Forecast {
        predicted: rnn_forecast(&fitted, &s)?,
        hyper: h.to_map(),
        convergence: res.history,
        checkpoint: Some(fitted.model.checkpoint()),
    })
}

fn run_var(cfg: &ExperimentConfig, data: &Dataset, cols: &[String]) -> Result<Forecast> {
    let s = scale(data, cols)?;
    let f = &s.frame01;
    let train = data.segments.train.clone();
    let train_cols: Vec<&[f64]> = (0..f.n_columns()).map(|c| &f.column_at(c)[train.clone()]).collect();
    let p = cfg.baselines.var_lag;
    let model = fit_var(&train_cols, p)?;
    let full: Vec<&[f64]> = (0..f.n_columns()).map(|c| f.column_at(c)).collect();
    let predicted = data
        .segments
        .forecast
        .clone()
        .map(|t| Ok(s.scaler.inverse_value(s.target_idx, var_one_step(&model, &full, t)?[s.target_idx])))
        .collect::<Result<_>>()?;
    Ok(Forecast {
        predicted,
        hyper: BTreeMap::from([("lag".to_string(), p as f64), ("ridge".to_string(), model.ridge as u8 as f64)]),
        convergence: vec![],
        checkpoint: None,
    })
}

fn run_linear(cfg: &ExperimentConfig, data: &Dataset, cols: &[String]) -> Result<Forecast> {
    let s = scale(data, cols)?;
    let lags = cfg.baselines.linear_lags;
    let splits = split(data, &s, lags)?;
    let model = fit_linear(&splits.train.windows, &splits.train.targets)?;
    let predicted = predict_linear(&model, &splits.test.windows)?
        .into_iter()
        .map(|y| s.scaler.inverse_value(s.target_idx, y))
        .collect();
    Ok(Forecast {
        predicted,
        hyper: BTreeMap::from([("lags".to_string(), lags as f64), ("ridge".to_string(), model.ridge as u8 as f64)]),
        convergence: vec![],
        checkpoint: None,
    })
}

fn run_arima(cfg: &ExperimentConfig, data: &Dataset) -> Result<Forecast> {
    let y = data.frame.column(&data.target).expect("target");
    let b = &cfg.baselines;
    let model = fit_ar(&y[data.segments.train.clone()], b.ar_p, b.ar_d)?;
    let predicted = data
        .segments
        .forecast
        .clone()
        .map(|t| Ok(forecast_ar(&model, &y[..t], 1)?[0]))
        .collect::<Result<_>>()?;
    Ok(Forecast {
        predicted,
        hyper: BTreeMap::from([("p".to_string(), b.ar_p as f64), ("d".to_string(), b.ar_d as f64)]),
        convergence: vec![],
        checkpoint: None,
    })
}

/// AR(1)-GARCH(1,1) on log returns; the price forecast applies the
/// conditional mean return to the previous close.
fn run_garch(cfg: &ExperimentConfig, data: &Dataset) -> Result<Forecast> {
    let y = data.frame.column(&data.target).expect("target");
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("GARCH needs strictly positive prices"));
    }
    let ret = |t: usize| (y[t] / y[t - 1]).ln();
    let train = data.segments.train.clone();
    let returns: Vec<f64> = (train.start.max(1)..train.end).map(ret).collect();
    let model = fit_garch11(&returns, cfg.baselines.garch)?;
    let predicted = data
        .segments
        .forecast
        .clone()
        .map(|t| {
            if t < 2 {
                return Err(Error::invalid("forecast starts before two observed prices"));
            }
            Ok(y[t - 1] * model.mean_one_step(ret(t - 1)).exp())
        })
        .collect::<Result<_>>()?;
    Ok(Forecast {
        predicted,
        hyper: BTreeMap::from([
            ("mu".to_string(), model.mu),
            ("phi".to_string(), model.phi),
            ("omega".to_string(), model.omega),
            ("alpha".to_string(), model.alpha),
            ("beta".to_string(), model.beta),
        ]),
        convergence: vec![],
        checkpoint: None,
    })
}

/// Trains or fits one model on `columns` (target first) and forecasts the
/// forecast segment one step ahead. Failures come back as a flagged row.
pub fn run_model(
    cfg: &ExperimentConfig,
    data: &Dataset,
    kind: ModelKind,
    feature_set: &str,
    columns: &[String],
) -> ModelRun {
    let seed = model_seed(cfg.seed, kind);
    let out = match kind {
        ModelKind::Tuned(algo, cell) => run_tuned(cfg, data, columns, algo, cell, seed),
        ModelKind::Plain(cell) => run_plain(cfg, data, columns, cell, seed),
        ModelKind::Var => run_var(cfg, data, columns),
        ModelKind::Linear => run_linear(cfg, data, columns),
        ModelKind::Arima => run_arima(cfg, data),
        ModelKind::Garch => run_garch(cfg, data),
        ModelKind::External(_) => return ModelRun::external(kind),
    };
    let columns = if kind.uses_features() { columns.to_vec() } else { vec![data.target.clone()] };
    match out.and_then(|f| {
        if f.predicted.iter().all(|v| v.is_finite()) {
            Ok(f)
        } else {
            Err(Error::NonFinite(format!("{} forecasts", kind.name())))
        }
    }) {
        Ok(f) => {
            let rows = data.segments.forecast.clone();
            let y = data.frame.column(&data.target).expect("target");
            ModelRun {
                model: kind.name(),
                group: kind.group().into(),
                feature_set: feature_set.into(),
                columns,
                status: RowStatus::Ok,
                dates: data.frame.dates()[rows.clone()].to_vec(),
                actual: y[rows].to_vec(),
                predicted: f.predicted,
                hyperparameters: f.hyper,
                convergence: f.convergence,
                checkpoint: f.checkpoint,
            }
        }
        Err(e) => {
            log::warn!("{} failed: {e}", kind.name());
            ModelRun::failed(kind, feature_set, &columns, &e)
        }
    }
}
