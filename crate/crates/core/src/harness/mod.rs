//! Experiment configuration and the comparison, ablation and DM harnesses
//! that reproduce the evaluation tables, plus plot-data emission.

mod config;
mod experiments;
mod features;
mod models;
mod plot;

pub use config::{
    BaselineConfig, CompareConfig, DataConfig, DmConfig, ExperimentConfig, ExternalModel, FeatureConfig, FeatureRecipe,
    KindAblationConfig, LdaConfig, ModelKind, OptimizerConfigs, RnnConfig, SearchConfig, SentimentConfig,
    TextAblationConfig, KIND_COMBINATIONS,
};
pub use experiments::{
    all_failed, dm_from_runs, dm_ranking, kind_label, predictions_csv, run_compare, run_dm, run_kind_ablation,
    run_text_ablation, AblationCell, CompareReport, DmPair, DmReport, DmTable, KindAblationReport, Provenance, Session,
    TextAblationReport, TextAblationRow,
};
pub use features::{build_dataset, fit_topics, load_inputs, Dataset, FeatureSet, TopicOutputs};
pub use models::{model_seed, run_model, ModelRun, RowStatus};
pub use plot::{emit_plot_data, PlotSources, PlotTarget};
