//! Synthetic data with planted structure: topic corpora and a price series
//! whose returns partly follow a document sentiment signal.

mod market;
mod topics;

pub use market::{synthetic_market, SyntheticMarket, SyntheticMarketConfig, SyntheticPaths};
pub use topics::{planted_phi, planted_topic_corpus, sample_dirichlet, PlantedCorpus, PlantedTopicsConfig};
