//! Collapsed Gibbs LDA on a corpus with planted topics: topic recovery,
//! coherence-based choice of K and topic prevalence over time.

use fxcast::synth::{planted_topic_corpus, PlantedTopicsConfig};
use fxcast::textmine::{fit_lda_gibbs, select_topic_count, topic_trend, umass_coherence, LdaParams};

fn main() -> fxcast::Result<()> {
    let planted = planted_topic_corpus(&PlantedTopicsConfig {
        n_docs: 800,
        ..Default::default()
    })?;
    let corpus = &planted.corpus;
    println!("{} documents, {} words in vocabulary", corpus.n_docs(), corpus.vocab_size());

    let params = LdaParams {
        k: 4,
        alpha: Some(0.1),
        beta: 0.01,
        iterations: 150,
        burn_in: 75,
        seed: 3,
    };
    let model = fit_lda_gibbs(corpus, &params)?;
    let coherence = umass_coherence(&model, corpus, 10);
    for k in 0..model.k {
        let words: Vec<String> = model.top_words(k, 6).into_iter().map(|(w, _)| w).collect();
        println!("topic {}: {}  (UMass {:.2})", k + 1, words.join(" "), coherence[k]);
    }

    let sel = select_topic_count(corpus, &[2, 3, 4, 5, 6], &params, 10)?;
    for (k, c) in &sel.coherence {
        println!("K={k}: mean coherence {c:.3}");
    }
    println!("selected K = {}", sel.best_k);

    let trend = topic_trend(&model, corpus, 4)?;
    for s in &trend.slices {
        let p: Vec<String> = s.prevalence.iter().flatten().map(|v| format!("{v:.2}")).collect();
        println!("{} .. {}: [{}]", s.start, s.end, p.join(", "));
    }
    Ok(())
}
