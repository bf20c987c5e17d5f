use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use fxcast::baselines::lag_report_csv;
use fxcast::eval::correlation_matrix;
use fxcast::harness::*;
use fxcast::ingest::{segment, Category};
use fxcast::sentiment::{SentimentIndex, SentimentSeries};
use fxcast::synth::{synthetic_market, SyntheticMarketConfig};
use fxcast::{write_atomic, Error, Result};

#[derive(Parser)]
#[command(name = "fxcast", version, about = "Exchange-rate forecasting experiments")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Align the input series and report the segmentation.
    Ingest(Common),
    /// Build every feature column, the lag report and correlations.
    Features(Common),
    /// Fit the topic model and emit top words and topic trends.
    Lda(Common),
    /// Daily sentiment values and indices per category.
    Sentiment(Common),
    /// Train one model on one feature set.
    Train {
        #[command(flatten)]
        common: Common,
        /// Model name such as LSTM, PSO-GRU, VAR or Linear.
        #[arg(long)]
        model: String,
        /// financial, text, combined, or a kind list such as 1,3.
        #[arg(long, default_value = "combined")]
        features: String,
    },
    /// Every configured model on the combined features, ranked.
    Compare(Common),
    /// Text-only, financial-only and combined inputs per model.
    AblateText(Common),
    /// Combinations of textual kinds for one model.
    AblateKinds(Common),
    /// Pairwise Diebold-Mariano tests and win ranking.
    Dm(Common),
    /// Long-format CSV for one plot.
    PlotData {
        #[command(flatten)]
        common: Common,
        /// forecast_vs_actual, topic_trend, si_series or convergence.
        #[arg(long)]
        what: String,
        /// Report JSON holding model runs (forecast and convergence plots).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Model to plot when the report holds several runs.
        #[arg(long)]
        model: Option<String>,
    },
    /// Write a synthetic market and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Outcome {
    Done,
    AllFailed,
}

fn parse_feature_set(s: &str) -> Result<FeatureSet> {
    match s {
        "financial" => Ok(FeatureSet::Financial),
        "text" => Ok(FeatureSet::Text),
        "combined" => Ok(FeatureSet::Combined),
        _ => {
            let kinds: std::result::Result<Vec<usize>, _> = s.split(',').map(|k| k.trim().parse()).collect();
            match kinds {
                Ok(k) if !k.is_empty() && k.iter().all(|x| (1..=3).contains(x)) => Ok(FeatureSet::Kinds(k)),
                _ => Err(Error::Config(format!(
                    "unknown feature set {s:?}; use financial, text, combined or kinds such as 1,3"
                ))),
            }
        }
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn announce(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn finish(runs: &[ModelRun], files: Vec<PathBuf>) -> Outcome {
    announce(&files);
    if all_failed(runs) {
        eprintln!("every model run failed");
        Outcome::AllFailed
    } else {
        Outcome::Done
    }
}

fn synth(out: &Path, seed: u64) -> Result<Outcome> {
    let market = synthetic_market(&SyntheticMarketConfig {
        seed,
        ..Default::default()
    })?;
    let paths = market.write(out)?;
    let mut cfg = ExperimentConfig::template(Path::new(""), market.segmentation.clone());
    cfg.seed = seed;
    let config = out.join("config.toml");
    write_atomic(&config, cfg.to_toml()?.as_bytes())?;
    announce(&[paths.prices, paths.indicators, paths.documents, config]);
    Ok(Outcome::Done)
}

fn run(command: &Command) -> Result<Outcome> {
    let common = match command {
        Command::Synth { out, seed } => return synth(out, *seed),
        Command::Ingest(c)
        | Command::Features(c)
        | Command::Lda(c)
        | Command::Sentiment(c)
        | Command::Compare(c)
        | Command::AblateText(c)
        | Command::AblateKinds(c)
        | Command::Dm(c) => c,
        Command::Train { common, .. } | Command::PlotData { common, .. } => common,
    };
    let cfg = ExperimentConfig::load(&common.config).map_err(as_config)?;
    cfg.check_paths()?;
    let out = common.out.as_path();
    let provenance = Provenance::new(&cfg)?;

    match command {
        Command::Synth { .. } => unreachable!("handled above"),
        Command::Ingest(_) => {
            let (frame, indicators, docs) = load_inputs(&cfg)?;
            let seg = segment(&frame, &cfg.segmentation)?;
            let range = |r: &std::ops::Range<usize>| {
                json!({"rows": r.len(), "first": frame.dates()[r.start], "last": frame.dates()[r.end - 1]})
            };
            let per_cat: Vec<_> = Category::ALL
                .iter()
                .map(|c| json!({"category": c.as_str(), "documents": docs.iter().filter(|d| d.category == *c).count()}))
                .collect();
            let files = vec![out.join("aligned.csv"), out.join("ingest.json")];
            write_atomic(&files[0], frame.to_csv_string()?.as_bytes())?;
            write_json(
                &files[1],
                &json!({
                    "provenance": provenance,
                    "rows": frame.len(),
                    "target": cfg.data.target,
                    "indicators": indicators,
                    "segments": {"train": range(&seg.train), "context": range(&seg.context), "forecast": range(&seg.forecast)},
                    "documents": per_cat,
                }),
            )?;
            announce(&files);
            Ok(Outcome::Done)
        }
        Command::Features(_) => {
            let data = build_dataset(&cfg)?;
            let files = vec![
                out.join("features.csv"),
                out.join("lag_report.csv"),
                out.join("correlation.csv"),
                out.join("features.json"),
            ];
            write_atomic(&files[0], data.frame.to_csv_string()?.as_bytes())?;
            write_atomic(&files[1], lag_report_csv(&data.lag_report)?.as_bytes())?;
            write_atomic(&files[2], correlation_matrix(&data.frame)?.to_csv()?.as_bytes())?;
            let text: Vec<_> = data
                .text_columns
                .iter()
                .map(|(r, cols)| json!({"recipe": r.as_str(), "columns": cols}))
                .collect();
            write_json(
                &files[3],
                &json!({
                    "provenance": provenance,
                    "indicators": data.indicators,
                    "text_columns": text,
                    "rfe_dropped": data.rfe_dropped,
                    "lag_report": data.lag_report,
                    "topic_selection": data.topic_selection,
                }),
            )?;
            announce(&files);
            Ok(Outcome::Done)
        }
        Command::Lda(_) => {
            let (_, _, docs) = load_inputs(&cfg)?;
            let t = fit_topics(&cfg, &docs)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["topic", "rank", "word", "weight"]).map_err(Error::from)?;
            for k in 0..t.model.k {
                for (i, (word, p)) in t.model.top_words(k, cfg.lda.top_n).into_iter().enumerate() {
                    w.write_record([(k + 1).to_string(), (i + 1).to_string(), word, format!("{p}")])?;
                }
            }
            let words = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
            let src = PlotSources {
                trend: Some(&t.trend),
                ..Default::default()
            };
            let files = vec![
                out.join("topics.csv"),
                out.join("topic_trend.csv"),
                out.join("lda_model.json"),
                out.join("lda.json"),
            ];
            write_atomic(&files[0], &words)?;
            write_atomic(&files[1], emit_plot_data(&src, PlotTarget::TopicTrend, None)?.as_bytes())?;
            t.model.save(&files[2])?;
            write_json(
                &files[3],
                &json!({
                    "provenance": provenance,
                    "k": t.model.k,
                    "documents": t.corpus_docs,
                    "selection": t.selection,
                    "trend": t.trend,
                }),
            )?;
            announce(&files);
            Ok(Outcome::Done)
        }
        Command::Sentiment(_) => {
            let (frame, _, docs) = load_inputs(&cfg)?;
            let mut index = SentimentIndex::new(cfg.sentiment.decay_scale)?;
            if cfg.sentiment.window > 0 {
                index = index.with_window(cfg.sentiment.window)?;
            }
            let s = SentimentSeries::build(&docs, frame.dates(), index)?;
            let files = vec![out.join("sentiment.csv"), out.join("sentiment.json")];
            write_atomic(&files[0], s.to_frame()?.to_csv_string()?.as_bytes())?;
            write_json(&files[1], &json!({"provenance": provenance, "decay_scale": s.decay_scale}))?;
            announce(&files);
            Ok(Outcome::Done)
        }
        Command::Train { model, features, .. } => {
            let kind: ModelKind = model.parse()?;
            let set = parse_feature_set(features)?;
            let data = build_dataset(&cfg)?;
            let r = Session::new(&cfg, &data).run(kind, &set)?;
            let stem = format!("train_{}_{}", r.model.to_lowercase(), set.label());
            let mut files = vec![out.join(format!("{stem}.csv")), out.join(format!("{stem}.json"))];
            write_atomic(&files[0], predictions_csv(std::slice::from_ref(&r))?.as_bytes())?;
            write_json(
                &files[1],
                &json!({"provenance": provenance, "metrics": r.metrics(), "run": r}),
            )?;
            if let Some(ck) = &r.checkpoint {
                let p = out.join(format!("{stem}_weights.json"));
                ck.save(&p)?;
                files.push(p);
            }
            Ok(finish(std::slice::from_ref(&r), files))
        }
        Command::Compare(_) => {
            let data = build_dataset(&cfg)?;
            let rep = run_compare(&mut Session::new(&cfg, &data))?;
            Ok(finish(&rep.runs, rep.write(out)?))
        }
        Command::AblateText(_) => {
            let data = build_dataset(&cfg)?;
            let rep = run_text_ablation(&mut Session::new(&cfg, &data))?;
            Ok(finish(&rep.runs, rep.write(out)?))
        }
        Command::AblateKinds(_) => {
            let data = build_dataset(&cfg)?;
            let rep = run_kind_ablation(&mut Session::new(&cfg, &data))?;
            Ok(finish(&rep.runs, rep.write(out)?))
        }
        Command::Dm(_) => {
            let data = build_dataset(&cfg)?;
            let mut session = Session::new(&cfg, &data);
            let runs = cfg
                .dm
                .models
                .iter()
                .map(|&k| session.run(k, &FeatureSet::Combined))
                .collect::<Result<Vec<_>>>()?;
            if all_failed(&runs) {
                eprintln!("every model run failed");
                return Ok(Outcome::AllFailed);
            }
            let rep = dm_from_runs(&cfg, runs)?;
            Ok(finish(&rep.runs, rep.write(out)?))
        }
        Command::PlotData {
            what, report, model, ..
        } => {
            let target: PlotTarget = what.parse().map_err(as_config)?;
            let runs: Vec<ModelRun> = match report {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                        path: p.clone(),
                        source: e,
                    })?;
                    let mut v: serde_json::Value = serde_json::from_str(&text)?;
                    match v.get_mut("runs").map(serde_json::Value::take) {
                        Some(runs) => serde_json::from_value(runs)?,
                        None => vec![serde_json::from_value(v["run"].take())?],
                    }
                }
                None => Vec::new(),
            };
            let data = match target {
                PlotTarget::TopicTrend | PlotTarget::SiSeries => Some(build_dataset(&cfg)?),
                _ => None,
            };
            let src = PlotSources {
                runs: &runs,
                sentiment: data.as_ref().map(|d| &d.sentiment),
                trend: data.as_ref().and_then(|d| d.topic_trend.as_ref()),
            };
            let path = out.join(format!("plot_{}.csv", target.as_str()));
            write_atomic(&path, emit_plot_data(&src, target, model.as_deref())?.as_bytes())?;
            announce(&[path]);
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match run(&cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::AllFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::MissingFeature(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
