//! Forecast and classification metrics, improvement rates, the
//! Diebold–Mariano test, rank tables and correlation matrices.

mod correlation;
mod dm;
mod metrics;
mod rank;

pub use correlation::{correlation_matrix, CorrelationMatrix};
pub use dm::{dm_test, DmLoss, DmResult};
pub use metrics::{
    classification_metrics, improvement_rate, regression_metrics, AveragedMetrics, ClassMetrics,
    ClassificationReport, RateCheck, RegressionMetrics,
};
pub use rank::{average_ranks, rank_models, MetricTable, Ranking};
