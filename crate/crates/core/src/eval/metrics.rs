use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Absent when the actual values are constant.
    pub r2: Option<f64>,
    pub n: usize,
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::Shape(format!("need equal non-zero lengths, got {a} and {b}")));
    }
    Ok(())
}

pub fn regression_metrics(actual: &[f64], predicted: &[f64]) -> Result<RegressionMetrics> {
    check_pair(actual.len(), predicted.len())?;
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric input".into()));
    }
    let n = actual.len() as f64;
    let mae = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    let mse = ss_res / n;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Ok(RegressionMetrics {
        mae,
        mse,
        rmse: mse.sqrt(),
        r2,
        n: actual.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Some ratio had a zero denominator and was set to 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Classes 0 and 1, each treated as positive in turn.
    pub classes: Vec<ClassMetrics>,
    pub macro_avg: AveragedMetrics,
    pub weighted_avg: AveragedMetrics,
    pub accuracy: f64,
    pub n: usize,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision `TP / (TP + FP)`, recall `TP / (TP + FN)` and their harmonic
/// mean for binary labels.
pub fn classification_metrics(actual: &[u8], predicted: &[u8]) -> Result<ClassificationReport> {
    check_pair(actual.len(), predicted.len())?;
    if actual.iter().chain(predicted).any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let classes: Vec<ClassMetrics> = [0u8, 1]
        .iter()
        .map(|&c| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (&a, &p) in actual.iter().zip(predicted) {
                match (a == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            let mut flag = false;
            let precision = ratio(tp, tp + fp, &mut flag);
            let recall = ratio(tp, tp + fn_, &mut flag);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                flag = true;
                0.0
            };
            ClassMetrics {
                label: c,
                precision,
                recall,
                f1,
                support: tp + fn_,
                zero_division: flag,
            }
        })
        .collect();
    let n = actual.len();
    let k = classes.len() as f64;
    let macro_avg = AveragedMetrics {
        precision: classes.iter().map(|c| c.precision).sum::<f64>() / k,
        recall: classes.iter().map(|c| c.recall).sum::<f64>() / k,
        f1: classes.iter().map(|c| c.f1).sum::<f64>() / k,
    };
    let w = |f: fn(&ClassMetrics) -> f64| classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / n as f64;
    let weighted_avg = AveragedMetrics {
        precision: w(|c| c.precision),
        recall: w(|c| c.recall),
        f1: w(|c| c.f1),
    };
    let correct = actual.iter().zip(predicted).filter(|(a, p)| a == p).count();
    Ok(ClassificationReport {
        classes,
        macro_avg,
        weighted_avg,
        accuracy: correct as f64 / n as f64,
        n,
    })
}

/// `(financial - combined) / financial`; positive when adding text helps.
pub fn improvement_rate(metric_financial: f64, metric_combined: f64) -> Result<f64> {
    if metric_financial == 0.0 || !metric_financial.is_finite() || !metric_combined.is_finite() {
        return Err(Error::invalid(format!(
            "improvement rate needs a finite non-zero baseline, got {metric_financial}"
        )));
    }
    Ok((metric_financial - metric_combined) / metric_financial)
}

/// A recomputed rate next to a published percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub computed: f64,
    pub reported_percent: f64,
    /// `100 * computed - reported_percent`.
    pub delta_percent: f64,
}

impl RateCheck {
    pub fn new(metric_financial: f64, metric_combined: f64, reported_percent: f64) -> Result<Self> {
        let computed = improvement_rate(metric_financial, metric_combined)?;
        Ok(Self {
            computed,
            reported_percent,
            delta_percent: 100.0 * computed - reported_percent,
        })
    }

    /// True when the published figure and the recomputation differ by more
    /// than `tolerance_percent` percentage points.
    pub fn flagged(&self, tolerance_percent: f64) -> bool {
        self.delta_percent.abs() > tolerance_percent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let m = regression_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.mae, m.rmse, m.r2), (0.0, 0.0, Some(1.0)));
        let m = regression_metrics(&[0.0, 0.0], &[1.0, -1.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse, m.r2), (1.0, 1.0, 1.0, None));
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(regression_metrics(&[1.0], &[]).is_err());
    }

    #[test]
    fn classification_examples() {
        let r = classification_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap();
        assert!(r.classes.iter().all(|c| c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0));
        // Class 1: TP = 1, FP = 1, FN = 1.
        let r = classification_metrics(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap();
        let c1 = r.classes[1];
        assert_eq!((c1.precision, c1.recall, c1.f1), (0.5, 0.5, 0.5));
        let r = classification_metrics(&[0, 1, 1], &[1, 1, 1]).unwrap();
        assert_eq!(r.classes[0].recall, 0.0);
        assert!(r.classes[0].zero_division);
        assert!(classification_metrics(&[2], &[0]).is_err());
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_rate(0.3, 0.3).unwrap(), 0.0);
        assert!((improvement_rate(0.10, 0.08).unwrap() - 0.2).abs() < 1e-12);
        assert!(improvement_rate(0.0, 0.1).is_err());
        let c = RateCheck::new(0.0903, 0.0746, 17.2946).unwrap();
        assert!((c.computed - 0.1739).abs() < 1e-4);
        assert!(c.flagged(0.05));
    }
}
