//! Splitting, cross-validation, selection and metrics.

pub mod cv;
pub mod metrics;
pub mod select;
pub mod split;

pub use cv::{cross_validate, cv_fold_seed, kfold_cv, CvConfig, CvOutcome, SelectionMetric};
pub use metrics::{auroc, compute_metrics, Confusion, DatasetTag, EvaluationReport};
pub use select::{select_best, write_accuracy_table};
pub use split::{stratified_folds, stratified_indices, stratified_split};
