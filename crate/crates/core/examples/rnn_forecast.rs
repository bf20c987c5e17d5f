//! LSTM and GRU one-step forecasts of a noisy sine wave, trained with
//! backpropagation through time and early stopping.

use chrono::{Days, NaiveDate};
use fxcast::eval::regression_metrics;
use fxcast::ingest::{make_supervised_windows, minmax_normalize, SeriesFrame};
use fxcast::rnn::{train, CellKind, Checkpoint, RnnSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fxcast::Result<()> {
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
    let dates: Vec<NaiveDate> = (0..n).map(|i| start + Days::new(i as u64)).collect();
    let y: Vec<f64> = (0..n)
        .map(|t| (t as f64 / 8.0).sin() + 0.05 * rng.random_range(-1.0..1.0))
        .collect();
    let frame = SeriesFrame::new(dates, vec!["y".into()], vec![y])?;
    let (scaled, _) = minmax_normalize(&frame, 0..300)?;

    let timesteps = 12;
    let train_set = make_supervised_windows(&scaled.slice_rows(0..300), "y", timesteps, 1)?;
    let valid = make_supervised_windows(&scaled.slice_rows(300 - timesteps..350), "y", timesteps, 1)?;
    let test = make_supervised_windows(&scaled.slice_rows(350 - timesteps..n), "y", timesteps, 1)?;

    for cell in [CellKind::Lstm, CellKind::Gru] {
        let spec = RnnSpec {
            learning_rate: 0.01,
            epochs: 80,
            batch_size: 16,
            seed: 1,
            patience: 15,
            ..RnnSpec::new(cell, 1, 16, timesteps)
        };
        let model = train(&spec, &train_set, Some(&valid))?;
        let pred = model.predict_set(&test)?;
        let m = regression_metrics(&test.targets, &pred)?;
        println!(
            "{cell:?}: kept epoch {} of {}, test RMSE {:.4}, MAE {:.4} (scaled units)",
            model.best_epoch,
            model.history.len(),
            m.rmse,
            m.mae
        );

        let back = Checkpoint::from_json(&model.checkpoint().to_json()?)?.into_model();
        assert_eq!(back.predict_set(&test)?, pred);
    }
    Ok(())
}
