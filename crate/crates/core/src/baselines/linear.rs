use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge penalty used when the normal equations are singular, relative to
/// the mean diagonal of `XᵀX`.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Smallest accepted ratio between the smallest and largest Cholesky pivot
/// squared before a system is treated as singular.
const PIVOT_RATIO: f64 = 1e-12;

fn design(rows: &[Vec<f64>], intercept: bool) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Shape("regressor rows have different lengths".into()));
    }
    let cols = k + usize::from(intercept);
    if n == 0 || cols == 0 {
        return Err(Error::invalid("regression needs at least one row and one regressor"));
    }
    let off = usize::from(intercept);
    Ok(DMatrix::from_fn(n, cols, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            rows[i][j - off]
        }
    }))
}

fn solve_normal(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    if lambda > 0.0 {
        let scale = (xtx.trace() / xtx.nrows() as f64).max(1.0);
        for i in 0..xtx.nrows() {
            xtx[(i, i)] += lambda * scale;
        }
    }
    let chol = xtx.clone().cholesky()?;
    let l = chol.l();
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda == 0.0 && !(min > PIVOT_RATIO * max) {
        return None;
    }
    let beta = chol.solve(&xty);
    beta.iter().all(|v| v.is_finite()).then_some(beta)
}

/// Least squares on rows of regressors. Returns `Error::Singular` when the
/// regressors are (numerically) collinear.
pub fn ols(rows: &[Vec<f64>], y: &[f64], intercept: bool) -> Result<Vec<f64>> {
    let x = design(rows, intercept)?;
    check_y(&x, y)?;
    solve_normal(&x, &DVector::from_column_slice(y), 0.0)
        .map(|b| b.iter().copied().collect())
        .ok_or_else(|| Error::Singular(format!("{}×{} regressor matrix", x.nrows(), x.ncols())))
}

fn check_y(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::Shape(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data".into()));
    }
    Ok(())
}

/// Least squares that falls back to a tiny ridge penalty on singular systems.
/// The returned flag is true when the fallback was used.
pub fn ols_or_ridge(rows: &[Vec<f64>], y: &[f64], intercept: bool) -> Result<(Vec<f64>, bool)> {
    let x = design(rows, intercept)?;
    check_y(&x, y)?;
    let yv = DVector::from_column_slice(y);
    if let Some(b) = solve_normal(&x, &yv, 0.0) {
        return Ok((b.iter().copied().collect(), false));
    }
    log::debug!("singular normal equations, using ridge fallback");
    solve_normal(&x, &yv, RIDGE_LAMBDA)
        .map(|b| (b.iter().copied().collect(), true))
        .ok_or_else(|| Error::Singular("ridge-regularized system".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// Whether the ridge fallback was needed.
    pub ridge: bool,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }
}

/// Ordinary least squares with an intercept.
pub fn fit_linear(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let (beta, ridge) = ols_or_ridge(rows, y, true)?;
    Ok(LinearModel {
        intercept: beta[0],
        coef: beta[1..].to_vec(),
        ridge,
    })
}

pub fn predict_linear(model: &LinearModel, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            if r.len() != model.coef.len() {
                Err(Error::Shape(format!("row has {} values, model expects {}", r.len(), model.coef.len())))
            } else {
                Ok(model.predict_row(r))
            }
        })
        .collect()
}
