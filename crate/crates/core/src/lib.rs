//! Gradient boosted decision trees for uplift modeling.
//!
//! Two boosters share one histogram-based, leaf-wise tree grower:
//!
//! * [`tddp`] fits the treatment effect directly. Each round grows a tree that
//!   maximizes the difference in uplift between children, then subtracts the
//!   tree's prediction from the treated units' working labels.
//! * [`causalgbm`] is a second-order booster whose leaves carry a baseline
//!   weight `v` (control potential outcome) and one effect weight `u_a` per
//!   treatment arm, so a single model predicts both outcomes and effects.
//!
//! [`eval`] provides the Qini curve and coefficient, stratified
//! cross-validation and the boosting-versus-bagging ablation, and
//! [`model_io`] a versioned JSON model format.

pub mod causalgbm;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod model;
pub mod model_io;
pub mod rng;
pub mod tddp;
pub mod trees;

pub use causalgbm::{CausalConfig, LossKind};
pub use dataset::{BinnedDataset, Matrix, OutcomeKind, SyntheticSpec, UpliftDataset};
pub use error::{Result, UpliftError};
pub use model::{Aggregation, BoosterConfig, BoosterKind, BoosterModel, EnsembleMode, Scale};
pub use tddp::TddpConfig;
pub use trees::{GrowthConfig, UpliftTree};
