use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::linear::{ols, ols_or_ridge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Aic => "AIC",
            Criterion::Bic => "BIC",
        }
    }

    /// `ln det Σ̂ + penalty(k, T)`.
    pub fn value(self, ln_det: f64, k: usize, t: usize) -> f64 {
        let (k, t) = (k as f64, t as f64);
        match self {
            Criterion::Aic => ln_det + 2.0 * k / t,
            Criterion::Bic => ln_det + k * t.ln() / t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub p: usize,
    pub intercepts: Vec<f64>,
    /// `coefs[lag][eq][var]`: effect of `var` at lag `lag + 1` on equation `eq`.
    pub coefs: Vec<Vec<Vec<f64>>>,
    /// Maximum-likelihood residual covariance (divisor `T`).
    pub sigma: Vec<Vec<f64>>,
    pub n_obs: usize,
    pub ridge: bool,
}

impl VarModel {
    pub fn dims(&self) -> usize {
        self.intercepts.len()
    }

    /// Fitted parameter count over all equations.
    pub fn n_params(&self) -> usize {
        let m = self.dims();
        m * (1 + m * self.p)
    }

    /// Prediction of the row following `lags`, where `lags[0]` is the most
    /// recent row.
    fn step(&self, lags: &[&[f64]]) -> Vec<f64> {
        (0..self.dims())
            .map(|eq| {
                self.intercepts[eq]
                    + (0..self.p)
                        .map(|l| self.coefs[l][eq].iter().zip(lags[l]).map(|(a, x)| a * x).sum::<f64>())
                        .sum::<f64>()
            })
            .collect()
    }
}

fn check_columns(series: &[&[f64]]) -> Result<usize> {
    let n = series.first().map_or(0, |s| s.len());
    if series.is_empty() || series.iter().any(|s| s.len() != n) {
        return Err(Error::Shape("VAR series must be non-empty and equally long".into()));
    }
    if series.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("VAR input".into()));
    }
    Ok(n)
}

/// Regressor rows `[y_{t-1}, ..., y_{t-p}]` for `t` in `start..n`.
fn lag_rows(series: &[&[f64]], p: usize, start: usize, n: usize) -> Vec<Vec<f64>> {
    (start..n)
        .map(|t| {
            let mut row = Vec::with_capacity(p * series.len());
            for l in 1..=p {
                row.extend(series.iter().map(|s| s[t - l]));
            }
            row
        })
        .collect()
}

fn fit_on_sample(series: &[&[f64]], p: usize, start: usize, strict: bool) -> Result<VarModel> {
    let n = series[0].len();
    let m = series.len();
    let rows = lag_rows(series, p, start, n);
    let t = rows.len();
    let mut intercepts = Vec::with_capacity(m);
    let mut coefs = vec![vec![vec![0.0; m]; m]; p];
    let mut resid = vec![vec![0.0; t]; m];
    let mut ridge = false;
    for eq in 0..m {
        let y = &series[eq][start..];
        let beta = if strict {
            ols(&rows, y, true)?
        } else {
            let (b, r) = ols_or_ridge(&rows, y, true)?;
            ridge |= r;
            b
        };
        intercepts.push(beta[0]);
        for l in 0..p {
            coefs[l][eq].copy_from_slice(&beta[1 + l * m..1 + (l + 1) * m]);
        }
        for (i, row) in rows.iter().enumerate() {
            let fit = beta[0] + beta[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>();
            resid[eq][i] = y[i] - fit;
        }
    }
    let sigma = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| resid[a].iter().zip(&resid[b]).map(|(x, y)| x * y).sum::<f64>() / t as f64)
                .collect()
        })
        .collect();
    Ok(VarModel {
        p,
        intercepts,
        coefs,
        sigma,
        n_obs: t,
        ridge,
    })
}

/// Per-equation least squares on every usable row. Singular systems use the
/// ridge fallback.
pub fn fit_var(series: &[&[f64]], p: usize) -> Result<VarModel> {
    let n = check_columns(series)?;
    if p == 0 || n <= p + 1 {
        return Err(Error::invalid(format!("VAR({p}) needs p >= 1 and more than {} rows, got {n}", p + 1)));
    }
    fit_on_sample(series, p, p, false)
}

/// Iterated forecasts for `steps` rows after the end of `history`.
pub fn forecast_var(model: &VarModel, history: &[&[f64]], steps: usize) -> Result<Vec<Vec<f64>>> {
    let n = check_columns(history)?;
    if history.len() != model.dims() {
        return Err(Error::Shape(format!("model has {} series, history {}", model.dims(), history.len())));
    }
    if n < model.p {
        return Err(Error::invalid(format!("history of {n} rows is shorter than lag {}", model.p)));
    }
    let mut rows: Vec<Vec<f64>> = (n - model.p..n).map(|t| history.iter().map(|s| s[t]).collect()).collect();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let lags: Vec<&[f64]> = rows.iter().rev().take(model.p).map(Vec::as_slice).collect();
        let next = model.step(&lags);
        rows.push(next.clone());
        out.push(next);
    }
    Ok(out)
}

/// One-step forecast of row `t` from the observed rows before it.
pub fn var_one_step(model: &VarModel, series: &[&[f64]], t: usize) -> Result<Vec<f64>> {
    if t < model.p || series.len() != model.dims() || series.iter().any(|s| s.len() < t) {
        return Err(Error::invalid(format!("row {t} has fewer than {} observed predecessors", model.p)));
    }
    let rows: Vec<Vec<f64>> = (1..=model.p).map(|l| series.iter().map(|s| s[t - l]).collect()).collect();
    let lags: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(model.step(&lags))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub criterion: Criterion,
    pub best_lag: usize,
    /// `(p, criterion value)` for `p = 1..=max_lag`.
    pub values: Vec<(usize, f64)>,
    /// Rows in the common estimation sample.
    pub n_obs: usize,
}

impl LagSelection {
    pub fn best_value(&self) -> f64 {
        self.values[self.best_lag - 1].1
    }
}

pub(crate) fn ln_det(sigma: &[Vec<f64>]) -> Result<f64> {
    let m = sigma.len();
    let mat = DMatrix::from_fn(m, m, |i, j| sigma[i][j]);
    let det = mat.determinant();
    if !(det > 0.0) {
        return Err(Error::Singular(format!("residual covariance determinant {det}")));
    }
    Ok(det.ln())
}

/// Bivariate VAR lag choice for a target and one indicator. Every `p` is
/// fitted on the same `n - max_lag` rows; ties go to the smaller lag.
pub fn select_lag(target: &[f64], indicator: &[f64], max_lag: usize, criterion: Criterion) -> Result<LagSelection> {
    let series = [target, indicator];
    let n = check_columns(&series)?;
    if max_lag == 0 {
        return Err(Error::invalid("max_lag must be at least 1"));
    }
    if n <= max_lag * 2 + 10 {
        return Err(Error::invalid(format!("{n} rows is too short for lags up to {max_lag}")));
    }
    let mut values = Vec::with_capacity(max_lag);
    let mut n_obs = 0;
    for p in 1..=max_lag {
        let model = fit_on_sample(&series, p, max_lag, true)?;
        n_obs = model.n_obs;
        values.push((p, criterion.value(ln_det(&model.sigma)?, model.n_params(), model.n_obs)));
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.1 < values[best].1 {
            best = i;
        }
    }
    Ok(LagSelection {
        criterion,
        best_lag: values[best].0,
        values,
        n_obs,
    })
}

/// `variable,lag,<criterion>` rows, one per selection.
pub fn lag_report_csv(rows: &[(String, LagSelection)]) -> Result<String> {
    let crit = rows.first().map_or("AIC", |r| r.1.criterion.as_str());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable", "lag", crit])?;
    for (name, sel) in rows {
        w.write_record([name.clone(), sel.best_lag.to_string(), format!("{}", sel.best_value())])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ar1_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut y = vec![0.0];
        for _ in 1..5000 {
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(0.5 * y.last().unwrap() + e);
        }
        let m = fit_var(&[&y], 1).unwrap();
        assert!((m.coefs[0][0][0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn exact_recursion_forecasts() {
        let mut a = vec![1.0, 0.5];
        let mut b = vec![-0.3, 0.2];
        for t in 2..60 {
            let na = 0.1 + 0.5 * a[t - 1] - 0.2 * b[t - 1] + 0.1 * a[t - 2];
            let nb = -0.05 + 0.3 * a[t - 1] + 0.4 * b[t - 1] - 0.1 * b[t - 2];
            a.push(na);
            b.push(nb);
        }
        let m = fit_var(&[&a[..25], &b[..25]], 2).unwrap();
        let f = forecast_var(&m, &[&a[..25], &b[..25]], 5).unwrap();
        for (h, row) in f.iter().enumerate() {
            assert!((row[0] - a[25 + h]).abs() < 1e-9, "{h}: {} vs {}", row[0], a[25 + h]);
            assert!((row[1] - b[25 + h]).abs() < 1e-9);
        }
        let one = var_one_step(&m, &[&a, &b], 55).unwrap();
        assert!((one[0] - a[55]).abs() < 1e-9);
    }

    #[test]
    fn constant_series_forecast() {
        let c = vec![2.5; 30];
        let m = fit_var(&[&c], 1).unwrap();
        let f = forecast_var(&m, &[&c], 3).unwrap();
        for row in f {
            assert!((row[0] - 2.5).abs() < 1e-6);
        }
        assert!(forecast_var(&m, &[&c[..0]], 1).is_err());
    }

    #[test]
    fn single_lag_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert_eq!(select_lag(&a, &b, 1, Criterion::Aic).unwrap().best_lag, 1);
        let s = select_lag(&a, &b, 5, Criterion::Bic).unwrap();
        assert_eq!(s.best_lag, 1);
        let csv = lag_report_csv(&[("b".into(), s)]).unwrap();
        assert!(csv.starts_with("variable,lag,BIC\nb,1,"));
    }
}
