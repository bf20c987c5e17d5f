//! The full experiment harness on the bundled synthetic market with a small
//! search budget: comparison table, text ablation, kind ablation and DM ranks.
//!
//! Pass an output directory to keep the reports.

use std::path::PathBuf;

use fxcast::harness::*;
use fxcast::synth::{synthetic_market, SyntheticMarketConfig};

fn main() -> fxcast::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("fxcast-pipeline-example"));
    let market = synthetic_market(&SyntheticMarketConfig {
        seed: 4,
        ..Default::default()
    })?;
    market.write(&out)?;

    let mut cfg = ExperimentConfig::template(&out, market.segmentation.clone());
    cfg.seed = 4;
    cfg.search.swarm_size = 4;
    cfg.search.iterations = 3;
    cfg.search.hidden_units = [2, 12];
    cfg.search.timesteps = [2, 8];
    cfg.rnn.epochs = 30;
    cfg.dm.models = ["PSO-LSTM", "LSTM", "VAR", "Linear", "ARIMA"]
        .iter()
        .map(|m| m.parse())
        .collect::<fxcast::Result<_>>()?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?).map_err(|e| fxcast::Error::Io {
        path: out.join("config.toml"),
        source: e,
    })?;

    let data = build_dataset(&cfg)?;
    println!("text columns: {:?}", data.text_feature_names());
    let mut session = Session::new(&cfg, &data);

    let compare = run_compare(&mut session)?;
    print!("\n{}", compare.table_csv()?);
    compare.write(&out)?;

    let text = run_text_ablation(&mut session)?;
    print!("\n{}", text.table_csv()?);
    text.write(&out)?;

    let kinds = run_kind_ablation(&mut session)?;
    print!("\n{}", kinds.table_csv()?);
    kinds.write(&out)?;

    let dm = run_dm(&mut session)?;
    print!("\n{}", dm.rank_csv()?);
    dm.write(&out)?;

    println!("\nreports in {}", out.display());
    Ok(())
}
