//! Evaluation protocol: stratified k-fold cross-validation, training-data
//! proportions, hidden-unit search, metrics and the side-by-side
//! s2sL / baseline experiment runner.

mod experiment;
mod folds;
mod metrics;
mod report;

pub use experiment::{
    fit_method, fold_plan, hidden_grid, run_experiment, run_fold, run_holdout, search_hidden_units,
    FoldOutcome, GridMode, HarnessConfig, HiddenSpec, HoldoutResult, Method, RefPolicyKind,
    TrainedModel, WorkItem,
};
pub use folds::{
    stratified_holdout, stratified_kfold, take_proportion, Fold, FoldPlan, ProportionSpec,
};
pub use metrics::{accuracy, confusion, f1_minority, Confusion};
pub use report::{EvalReport, MetricRow, Summary, CSV_HEADER};
