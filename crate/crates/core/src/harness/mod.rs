//! Nested cross-validation: ten stratified outer folds per repetition, the
//! fold after the test fold as validation, and the remaining eight for
//! fitting. Pipelines report one accuracy per outer fold.

mod config;
mod folds;
mod report;
mod run;

pub use config::{ExperimentConfig, KernelName, Method, PairSampling};
pub use folds::{make_fold_plan, FoldPlan, Split, FOLDS};
pub use report::{aggregate, Comparison, FoldResult, Report, Spread};
pub use run::{
    evaluate, run_dgcnn, run_kernel_svm, run_pretrain_diagnostics, run_pretrained_dgcnn, split_seed, Access, AccessLog,
    Observer, Phase, PretrainDiagnostics, Silent,
};
