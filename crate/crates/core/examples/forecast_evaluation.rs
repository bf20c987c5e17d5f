//! Scoring competing forecasts: error metrics, ranked tables, pairwise
//! Diebold-Mariano tests and feature-set improvement rates.

use fxcast::eval::{
    classification_metrics, dm_test, improvement_rate, rank_models, regression_metrics, DmLoss, MetricTable, RateCheck,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> fxcast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let actual: Vec<f64> = (0..120).map(|t| 1.1 + 0.01 * (t as f64 / 9.0).sin()).collect();
    let models = [("sharp", 0.001), ("fair", 0.002), ("loose", 0.004)];
    let mut errors = Vec::new();
    let mut values = Vec::new();
    for (name, sd) in models {
        let noise = Normal::new(0.0, sd).unwrap();
        let pred: Vec<f64> = actual.iter().map(|a| a + noise.sample(&mut rng)).collect();
        let m = regression_metrics(&actual, &pred)?;
        println!("{name:<6} MAE {:.5} RMSE {:.5} R2 {:.3}", m.mae, m.rmse, m.r2.unwrap_or(f64::NAN));
        values.push(vec![Some(m.mae), Some(m.rmse)]);
        errors.push(actual.iter().zip(&pred).map(|(a, p)| a - p).collect::<Vec<f64>>());
    }
    let table = MetricTable {
        models: models.iter().map(|m| m.0.to_string()).collect(),
        metrics: vec!["MAE".into(), "RMSE".into()],
        values,
    };
    print!("\n{}", rank_models(&table)?.to_csv()?);

    println!();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let r = dm_test(&errors[i], &errors[j], DmLoss::Squared, 1)?;
                println!("DM {} vs {}: stat {:+.3}, p {:.4}", models[i].0, models[j].0, r.statistic, r.p_value);
            }
        }
    }

    let up: Vec<u8> = actual.windows(2).map(|w| (w[1] >= w[0]) as u8).collect();
    let guess: Vec<u8> = up.iter().enumerate().map(|(i, &u)| if i % 5 == 0 { 1 - u } else { u }).collect();
    let c = classification_metrics(&up, &guess)?;
    println!("\ndirection accuracy {:.3}, macro F1 {:.3}", c.accuracy, c.macro_avg.f1);

    let rate = improvement_rate(0.0903, 0.0746)?;
    let check = RateCheck::new(0.0903, 0.0746, 17.2946)?;
    println!(
        "improvement {:.4}% vs published 17.2946%: {:+.4} points, flagged {}",
        100.0 * rate,
        check.delta_percent,
        check.flagged(0.01)
    );
    Ok(())
}
