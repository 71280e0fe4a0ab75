//! Tree-ensemble classifiers, majority-class undersampling, isotonic
//! calibration and ranking metrics.

mod isotonic;
mod metrics;
mod sampling;
mod tree;

pub use isotonic::{fit_isotonic, IsotonicCalibrator};
pub use metrics::{average_precision, best_f1_threshold, brier_score, compute_metrics, f1_at, roc_auc, MetricSet};
pub use sampling::undersample;
pub use tree::{predict_proba, train, ModelKind, ModelParams, Node, Tree, TreeEnsembleModel, MODEL_FORMAT_VERSION};
