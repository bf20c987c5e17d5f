//! Loading series and documents from disk, aligning them on trading days,
//! splitting into train/context/forecast segments and building windows.

use fxcast::ingest::{
    align_and_fill, load_documents_jsonl, load_series_csv, make_direction_labels, make_supervised_windows,
    minmax_normalize, segment, FillPolicy,
};
use fxcast::synth::{synthetic_market, SyntheticMarketConfig};
use fxcast::textmine::{tokenize, Stopwords, TokenizeOptions};

fn main() -> fxcast::Result<()> {
    let dir = std::env::temp_dir().join("fxcast-ingest-example");
    let market = synthetic_market(&SyntheticMarketConfig::default())?;
    let paths = market.write(&dir)?;

    let prices = load_series_csv(&paths.prices, "date", Some(&["close"]))?;
    let indicators = load_series_csv(&paths.indicators, "date", None)?;
    let frame = align_and_fill(&[prices, indicators], FillPolicy::ForwardFill)?;
    println!("{} aligned rows, columns {:?}", frame.len(), frame.names());

    let seg = segment(&frame, &market.segmentation)?;
    println!("train/context/forecast rows: {:?}", seg.sizes());

    let (scaled, scaler) = minmax_normalize(&frame, seg.train.clone())?;
    let windows = make_supervised_windows(&scaled, "close", 10, 1)?;
    println!(
        "{} windows of {} steps x {} features; first target {:.4} (price {:.5})",
        windows.len(),
        windows.timesteps,
        windows.n_features,
        windows.targets[0],
        scaler.inverse_value(0, windows.targets[0])
    );
    let labels = make_direction_labels(frame.column("close").unwrap())?;
    println!("up days: {} of {}", labels.iter().filter(|&&l| l == 1).count(), labels.len());

    let docs = load_documents_jsonl(&paths.documents)?;
    let corpus = tokenize(&docs, &Stopwords::bundled(), TokenizeOptions::default())?;
    println!("{} documents, vocabulary of {}", corpus.n_docs(), corpus.vocab_size());
    println!("first document: {}", docs[0].text);
    Ok(())
}
