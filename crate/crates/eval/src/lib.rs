//! Classification metrics, threshold selection, cross-validation plans and
//! hyperparameter grid search for the tensor kernel classifier.
//!
//! Labels are `+1` (seizure) and `-1` (background) throughout. A score is
//! predicted positive when it is strictly greater than the threshold.

pub mod cv;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod report;

pub use cv::{losi_fold, make_cv_plan, CvPlan, CvScheme, Fold};
pub use error::{Error, Result};
pub use grid::{grid_search, GridPoint, GridResult, GridSearchConfig};
pub use metrics::{best_f1_threshold, confusion_metrics, pr_auc, roc_auc, Confusion, ConfusionMetrics};
pub use report::{EvaluationReport, FoldReport};
