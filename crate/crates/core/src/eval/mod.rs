//! Classification metrics, cross-validation, a fixed-feature classifier and
//! nearest-neighbor queries.

mod cv;
mod metrics;
mod neighbors;
mod probe;

pub use cv::{cross_validate, cross_validate_on, evaluate_split, FoldMetrics, GraphRecipe, MetricsReport, TaskMean, TaskMetrics};
pub use metrics::{confusion, f1_from_confusion, f1_scores, ClassScores, ConfusionMatrix, F1Summary};
pub use neighbors::nearest_neighbors;
pub use probe::{cross_validate_features, train_probe, Probe, ProbeConfig};
