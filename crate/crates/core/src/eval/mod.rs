//! Qini evaluation, cross-validation and the ensemble ablation.

mod ablation;
mod cv;
mod qini;

pub use ablation::{ablate_ensembles, format_ablation_table, write_ablation_csv, AblationRow};
pub use cv::{cross_validate, mean_and_std_error, uplift_scores, CvReport};
pub use qini::{qini_coefficient, qini_curve, qini_score, write_curve_csv, QiniCurve};
