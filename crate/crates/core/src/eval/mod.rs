//! Evaluation protocols and metrics: decision-level classification rate,
//! per-emotion recall, top-k accuracy, rejection curves, stratified splits
//! and class-balancing oversampling.

mod metrics;
mod scenario;
mod split;

pub use metrics::{
    dl_classification_rate, dl_recall, rejection_curve, threshold_sweep, topk_accuracy,
    unweighted_average_recall, ConfusionStats, CurvePoint,
};
pub use scenario::{
    fit_model, run_scenario, EmotionRecall, EvalConfig, EvaluationReport, FoldDetail, RoundMetrics, SplitMode,
    SplitPlan, REPORT_SCHEMA_VERSION,
};
pub use split::{
    oversample, speaker_kfold, stratified_holdout, stratified_kfold, Fold, OversampleMode,
};
