//! Daily sentiment values and the decayed sentiment index for a handful of
//! scored documents.

use chrono::NaiveDate;
use fxcast::ingest::{Category, DocumentRecord, DocumentScores};
use fxcast::sentiment::{sentiment_index, LexiconScorer, SentimentIndex, SentimentSeries};

fn doc(day: u32, category: Category, text: &str, sentiment: f64) -> DocumentRecord {
    DocumentRecord {
        date: NaiveDate::from_ymd_opt(2024, 3, day).unwrap(),
        category,
        text: text.into(),
        scores: DocumentScores {
            sentiment: Some(sentiment),
            ..Default::default()
        },
    }
}

fn main() -> fxcast::Result<()> {
    let docs = vec![
        doc(4, Category::News, "euro rallies on strong growth data", 0.8),
        doc(4, Category::News, "dollar slips after weak payrolls", 0.4),
        doc(6, Category::Analysis, "outlook turns cautious", -0.5),
        doc(9, Category::News, "central bank holds rates", 0.0),
        doc(11, Category::News, "euro slides as yields fall", -0.6),
    ];
    let dates: Vec<NaiveDate> = (4..=15).filter_map(|d| NaiveDate::from_ymd_opt(2024, 3, d)).collect();
    let series = SentimentSeries::build(&docs, &dates, SentimentIndex::new(7.0)?)?;
    println!("date        sv_news  si_news  sv_analysis  si_analysis");
    for (i, d) in series.dates.iter().enumerate() {
        println!(
            "{d}  {:>7.3}  {:>7.3}  {:>11.3}  {:>11.3}",
            series.sv[&Category::News][i],
            series.si[&Category::News][i],
            series.sv[&Category::Analysis][i],
            series.si[&Category::Analysis][i],
        );
    }

    let impulse = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let decay = sentiment_index(&impulse, 7.0)?;
    println!("\nunit impulse: {:?}", decay.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    let windowed = SentimentIndex::new(7.0)?.with_window(3)?.apply(&impulse)?;
    println!("3-day window: {:?}", windowed.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());

    let lexicon = LexiconScorer::parse("strong 0.6\nweak -0.6\nrallies 0.8\nslides -0.7\n")?;
    for d in &docs {
        println!("lexicon score {:>6.3}  {}", lexicon.score(&d.text), d.text);
    }
    Ok(())
}
