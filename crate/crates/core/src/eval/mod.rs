//! Classification metrics, annotator agreement and significance testing.

mod agreement;
mod metrics;
mod report;
mod ttest;

pub use agreement::{cohen_kappa, majority_vote, mean_pairwise_kappa, AgreementMatrix};
pub use metrics::{f1_scores, weighted_average, ConfusionMatrix, F1Scores};
pub use report::{evaluate_predictions, DatasetMetrics, EvalReport, Prediction};
pub use ttest::{ln_gamma, paired_ttest, regularized_incomplete_beta, student_t_two_sided, TTest};
