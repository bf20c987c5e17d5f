//! Tokenization, LDA topic modeling by collapsed Gibbs sampling, topic-count
//! selection, per-day topic scores and topic prevalence trends.

mod coherence;
mod lda;
mod scores;
mod tokenize;
mod trend;

pub use coherence::{select_topic_count, umass_coherence, TopicCountSelection};
pub use lda::{fit_lda_gibbs, GibbsSampler, LdaParams, TopicModel};
pub use scores::{topic_day_scores, AssignmentRule, TopicDayScores};
pub use tokenize::{tokenize, tokenize_text, Stopwords, TokenizeOptions, TokenizedCorpus};
pub use trend::{topic_trend, TopicTrend, TrendSlice};
