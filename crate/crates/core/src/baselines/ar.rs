use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::linear::ols_or_ridge;

/// ARIMA(p, d, 0): an AR(p) with intercept fitted to the `d`-times
/// differenced series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub p: usize,
    pub d: usize,
    pub intercept: f64,
    /// `phi[l]` multiplies lag `l + 1`.
    pub phi: Vec<f64>,
    /// Residual variance of the differenced fit.
    pub sigma2: f64,
}

fn difference(series: &[f64], d: usize) -> Vec<f64> {
    match d {
        0 => series.to_vec(),
        _ => series.windows(2).map(|w| w[1] - w[0]).collect(),
    }
}

pub fn fit_ar(series: &[f64], p: usize, d: usize) -> Result<ArModel> {
    if p == 0 || d > 1 {
        return Err(Error::invalid(format!("AR(p, d) needs p >= 1 and d in {{0, 1}}, got ({p}, {d})")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("AR input".into()));
    }
    let z = difference(series, d);
    if z.len() < p + 3 {
        return Err(Error::invalid(format!(
            "series of {} values is too short for AR({p}) with d = {d}",
            series.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (p..z.len()).map(|t| (1..=p).map(|l| z[t - l]).collect()).collect();
    let y = &z[p..];
    let (beta, _) = ols_or_ridge(&rows, y, true)?;
    let sigma2 = rows
        .iter()
        .zip(y)
        .map(|(r, v)| {
            let e = v - beta[0] - beta[1..].iter().zip(r).map(|(b, x)| b * x).sum::<f64>();
            e * e
        })
        .sum::<f64>()
        / y.len() as f64;
    Ok(ArModel {
        p,
        d,
        intercept: beta[0],
        phi: beta[1..].to_vec(),
        sigma2,
    })
}

/// Iterated level forecasts for `steps` values after `history`.
pub fn forecast_ar(model: &ArModel, history: &[f64], steps: usize) -> Result<Vec<f64>> {
    if history.len() < model.p + model.d {
        return Err(Error::invalid(format!(
            "history of {} values is too short for AR({}) with d = {}",
            history.len(),
            model.p,
            model.d
        )));
    }
    let mut z = difference(history, model.d);
    let mut level = *history.last().expect("non-empty history");
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let n = z.len();
        let next = model.intercept + model.phi.iter().enumerate().map(|(l, b)| b * z[n - 1 - l]).sum::<f64>();
        z.push(next);
        level = if model.d == 1 { level + next } else { next };
        out.push(level);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = Normal::new(0.0, 1.0).unwrap();
        let mut y = vec![0.0];
        for _ in 1..5000 {
            y.push(0.8 * y.last().unwrap() + n.sample(&mut rng));
        }
        let m = fit_ar(&y, 1, 0).unwrap();
        assert!((m.phi[0] - 0.8).abs() < 0.05);
    }

    #[test]
    fn random_walk_errors_match_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 0.5).unwrap();
        let mut y = vec![100.0];
        for _ in 1..3000 {
            y.push(y.last().unwrap() + 0.1 + n.sample(&mut rng));
        }
        let m = fit_ar(&y[..2000], 1, 1).unwrap();
        let mut abs_err = 0.0;
        for t in 2000..3000 {
            abs_err += (forecast_ar(&m, &y[..t], 1).unwrap()[0] - y[t]).abs();
        }
        let mae = abs_err / 1000.0;
        // Mean absolute value of N(0, 0.5) is 0.5 * sqrt(2 / pi) ≈ 0.399.
        assert!((mae - 0.399).abs() < 0.05, "{mae}");
    }

    #[test]
    fn constant_series_differenced() {
        let c = vec![3.0; 20];
        let m = fit_ar(&c, 2, 1).unwrap();
        for v in forecast_ar(&m, &c, 4).unwrap() {
            assert_eq!(v, 3.0);
        }
        assert!(fit_ar(&c[..3], 2, 1).is_err());
        assert!(fit_ar(&c, 1, 2).is_err());
    }
}
