use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmLoss {
    Squared,
    Absolute,
}

impl DmLoss {
    fn apply(self, e: f64) -> f64 {
        match self {
            DmLoss::Squared => e * e,
            DmLoss::Absolute => e.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Negative when the first model's losses are smaller.
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub mean_diff: f64,
    pub n: usize,
}

/// Diebold–Mariano test on `d_t = L(e_a,t) - L(e_b,t)` with a Bartlett
/// long-run variance truncated at `horizon - 1`, the Harvey small-sample
/// factor and Student t reference with `T - 1` degrees of freedom. When every
/// `d_t` is zero the result is `(0, 1)`.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64], loss: DmLoss, horizon: usize) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() || errors_a.len() < 10 {
        return Err(Error::Shape(format!(
            "DM test needs equal lengths of at least 10, got {} and {}",
            errors_a.len(),
            errors_b.len()
        )));
    }
    if horizon == 0 || horizon >= errors_a.len() {
        return Err(Error::invalid(format!("horizon {horizon} out of range")));
    }
    if errors_a.iter().chain(errors_b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forecast errors".into()));
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(&a, &b)| loss.apply(a) - loss.apply(b))
        .collect();
    let t = d.len();
    let tf = t as f64;
    let mean = d.iter().sum::<f64>() / tf;
    if d.iter().all(|&v| v == 0.0) {
        return Ok(DmResult {
            statistic: 0.0,
            p_value: 1.0,
            mean_diff: 0.0,
            n: t,
        });
    }
    let autocov = |k: usize| -> f64 { (k..t).map(|i| (d[i] - mean) * (d[i - k] - mean)).sum::<f64>() / tf };
    let h = horizon as f64;
    let mut lrv = autocov(0);
    for k in 1..horizon {
        lrv += 2.0 * (1.0 - k as f64 / h) * autocov(k);
    }
    let harvey = ((tf + 1.0 - 2.0 * h + h * (h - 1.0) / tf) / tf).sqrt();
    let statistic = if lrv > 0.0 {
        harvey * mean / (lrv / tf).sqrt()
    } else {
        mean.signum() * f64::INFINITY
    };
    let dist = StudentsT::new(0.0, 1.0, tf - 1.0).map_err(|e| Error::invalid(format!("t distribution: {e}")))?;
    let p_value = if statistic.is_finite() {
        (2.0 * (1.0 - dist.cdf(statistic.abs()))).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(DmResult {
        statistic,
        p_value,
        mean_diff: mean,
        n: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_inputs() {
        let e: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let r = dm_test(&e, &e, DmLoss::Squared, 1).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..50).map(|_| n.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..50).map(|_| n.sample(&mut rng)).collect();
        for h in 1..4 {
            for loss in [DmLoss::Squared, DmLoss::Absolute] {
                let x = dm_test(&a, &b, loss, h).unwrap();
                let y = dm_test(&b, &a, loss, h).unwrap();
                assert_eq!(x.statistic, -y.statistic);
                assert_eq!(x.p_value, y.p_value);
            }
        }
    }

    #[test]
    fn detects_smaller_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n1 = Normal::new(0.0, 1.0).unwrap();
        let n2 = Normal::new(0.0, 2.0).unwrap();
        let a: Vec<f64> = (0..500).map(|_| n1.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..500).map(|_| n2.sample(&mut rng)).collect();
        let r = dm_test(&a, &b, DmLoss::Squared, 1).unwrap();
        assert!(r.statistic < 0.0 && r.p_value < 0.01);
        assert!(dm_test(&a[..5], &b[..5], DmLoss::Squared, 1).is_err());
    }
}
