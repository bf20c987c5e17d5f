use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SupervisedSet;
use crate::io_util::{read_to_string, write_atomic};

use super::cell::{forward, loss_and_gradients};
use super::{CellKind, RnnParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnnSpec {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden_units: usize,
    pub timesteps: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
}

impl RnnSpec {
    pub fn new(cell: CellKind, input_dim: usize, hidden_units: usize, timesteps: usize) -> Self {
        Self {
            cell,
            input_dim,
            hidden_units,
            timesteps,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            patience: 20,
            clip_norm: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units == 0 || self.timesteps == 0 || self.batch_size == 0 {
            return Err(Error::invalid(format!(
                "network dimensions must be at least 1 (input {}, hidden {}, timesteps {}, batch {})",
                self.input_dim, self.hidden_units, self.timesteps, self.batch_size
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::invalid("clip norm must be positive"));
        }
        Ok(())
    }

    fn check_set(&self, set: &SupervisedSet, what: &str) -> Result<()> {
        if set.timesteps != self.timesteps || set.n_features != self.input_dim {
            return Err(Error::Shape(format!(
                "{what} set has {} steps × {} features, spec wants {} × {}",
                set.timesteps, set.n_features, self.timesteps, self.input_dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch MSE over the epoch.
    pub train_loss: f64,
    pub valid_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: RnnSpec,
    pub params: RnnParams,
    /// Epoch whose parameters were kept; 0 means the initial parameters.
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl TrainedModel {
    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        forward(&self.params, window)
    }

    pub fn predict_set(&self, set: &SupervisedSet) -> Result<Vec<f64>> {
        set.windows.iter().map(|w| self.predict(w)).collect()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            spec: self.spec,
            params: self.params.clone(),
            best_epoch: self.best_epoch,
        }
    }
}

/// Spec, seed and every tensor of a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: RnnSpec,
    pub params: RnnParams,
    pub best_epoch: usize,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        let expect = RnnParams::zeros(c.params.cell, c.params.input_dim, c.params.hidden).n_params();
        if c.params.data.len() != expect
            || c.params.cell != c.spec.cell
            || c.params.hidden != c.spec.hidden_units
            || c.params.input_dim != c.spec.input_dim
        {
            return Err(Error::Shape("checkpoint tensors do not match its spec".into()));
        }
        if !c.params.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters".into()));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }

    pub fn into_model(self) -> TrainedModel {
        TrainedModel {
            spec: self.spec,
            params: self.params,
            best_epoch: self.best_epoch,
            history: Vec::new(),
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn clip(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

fn rmse(params: &RnnParams, set: &SupervisedSet) -> Result<f64> {
    let mut sse = 0.0;
    for (w, y) in set.windows.iter().zip(&set.targets) {
        let r = forward(params, w)? - y;
        sse += r * r;
    }
    Ok((sse / set.len() as f64).sqrt())
}

/// Minibatch Adam on MSE. The kept parameters are those of the epoch with the
/// lowest validation RMSE (training RMSE when `valid` is `None`).
pub fn train(spec: &RnnSpec, train_set: &SupervisedSet, valid: Option<&SupervisedSet>) -> Result<TrainedModel> {
    spec.validate()?;
    spec.check_set(train_set, "training")?;
    if train_set.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let valid = match valid {
        Some(v) if !v.is_empty() => {
            spec.check_set(v, "validation")?;
            Some(v)
        }
        _ => None,
    };
    let score_set = valid.unwrap_or(train_set);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut params = RnnParams::init(spec.cell, spec.input_dim, spec.hidden_units, &mut rng);
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_score = if spec.epochs == 0 {
        f64::INFINITY
    } else {
        rmse(&params, score_set).unwrap_or(f64::INFINITY)
    };
    let mut history = Vec::with_capacity(spec.epochs);
    let mut adam = Adam::new(params.n_params());
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=spec.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(spec.batch_size) {
            let windows: Vec<&[f64]> = batch.iter().map(|&k| train_set.windows[k].as_slice()).collect();
            let targets: Vec<f64> = batch.iter().map(|&k| train_set.targets[k]).collect();
            let (loss, mut grad) = match loss_and_gradients(&params, &windows, &targets) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            if !grad.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            clip(&mut grad.data, spec.clip_norm);
            adam.step(&mut params.data, &grad.data, spec.learning_rate);
            loss_sum += loss * batch.len() as f64;
        }
        if !params.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let valid_rmse = valid.map(|v| rmse(&params, v)).transpose()?;
        let score = match valid_rmse {
            Some(r) => r,
            None => rmse(&params, train_set)?,
        };
        if !score.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            valid_rmse,
        });
        if score < best_score {
            best_score = score;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch > spec.patience {
            log::debug!("early stop at epoch {epoch}, best {best_epoch}");
            break;
        }
    }

    Ok(TrainedModel {
        spec: *spec,
        params: best,
        best_epoch,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_set(timesteps: usize) -> SupervisedSet {
        let series: Vec<f64> = (0..(8 + timesteps)).map(|i| 0.1 + 0.05 * i as f64).collect();
        let windows = (0..8).map(|k| series[k..k + timesteps].to_vec()).collect();
        let targets = (0..8).map(|k| series[k + timesteps]).collect();
        SupervisedSet {
            timesteps,
            n_features: 1,
            feature_names: vec!["x".into()],
            target_name: "x".into(),
            windows,
            targets,
            target_rows: (timesteps..timesteps + 8).collect(),
            scaler: None,
        }
    }

    fn spec() -> RnnSpec {
        RnnSpec {
            learning_rate: 0.01,
            epochs: 500,
            batch_size: 8,
            seed: 7,
            patience: 500,
            ..RnnSpec::new(CellKind::Lstm, 1, 8, 3)
        }
    }

    #[test]
    fn fits_linear_trend() {
        let set = toy_set(3);
        let m = train(&spec(), &set, None).unwrap();
        let r = rmse(&m.params, &set).unwrap();
        assert!(r < 0.01, "rmse {r}");
    }

    #[test]
    fn zero_epochs_returns_init() {
        let s = RnnSpec { epochs: 0, ..spec() };
        let m = train(&s, &toy_set(3), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        assert_eq!(m.params, RnnParams::init(s.cell, 1, 8, &mut rng));
        assert_eq!(m.best_epoch, 0);
        assert!(m.history.is_empty());
    }

    #[test]
    fn deterministic() {
        let s = RnnSpec { epochs: 30, ..spec() };
        let a = train(&s, &toy_set(3), None).unwrap();
        let b = train(&s, &toy_set(3), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_learning_rate_diverges_or_survives() {
        let s = RnnSpec {
            learning_rate: 1e300,
            epochs: 5,
            ..spec()
        };
        match train(&s, &toy_set(3), None) {
            Err(Error::Diverged { epoch }) => assert!(epoch >= 1),
            Ok(m) => assert!(m.params.is_finite()),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn shape_mismatch() {
        let s = RnnSpec { timesteps: 4, ..spec() };
        assert!(train(&s, &toy_set(3), None).is_err());
        let s = RnnSpec { learning_rate: 0.0, ..spec() };
        assert!(train(&s, &toy_set(3), None).is_err());
    }

    #[test]
    fn checkpoint_round_trip_bit_exact() {
        let s = RnnSpec { epochs: 5, ..spec() };
        let m = train(&s, &toy_set(3), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.checkpoint().save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        for (a, b) in back.params.data.iter().zip(&m.params.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.spec, m.spec);
    }
}
