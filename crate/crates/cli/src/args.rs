use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "utb", version, about = "Gradient boosted uplift trees: train, predict, evaluate")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "UTB_THREADS")]
    pub threads: Option<usize>,

    /// Log per-iteration training progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    /// TOML file of `flag_name = value` defaults; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and save it as JSON.
    Train(TrainArgs),
    /// Predict effects or outcomes for every row of a CSV file.
    Predict(PredictArgs),
    /// Qini curve and coefficient of precomputed scores.
    Eval(EvalArgs),
    /// Stratified k-fold cross-validated Qini coefficient.
    Cv(CvArgs),
    /// Write a synthetic randomized experiment with known effects.
    Synth(SynthArgs),
    /// Compare boosting with bagging across feature counts.
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoosterArg {
    Tddp,
    Causalgbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Squared,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Boosting,
    Bagging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Effect,
    Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Margin,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutcomeKindArg {
    Binary,
    Continuous,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, default_value = "y")]
    pub outcome: String,

    /// Column of non-negative integer arms, 0 = control.
    #[arg(long, default_value = "w")]
    pub treatment: String,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,

    /// Learning rate applied to every boosted tree.
    #[arg(long, default_value_t = 0.1)]
    pub shrinkage: f64,

    #[arg(long, default_value_t = 31)]
    pub max_leaves: usize,

    #[arg(long)]
    pub max_depth: Option<usize>,

    #[arg(long, default_value_t = 20)]
    pub min_samples_leaf: usize,

    /// Minimum rows of every arm in a leaf.
    #[arg(long, default_value_t = 5)]
    pub min_samples_per_arm: usize,

    #[arg(long, default_value_t = 0.0)]
    pub min_gain: f64,

    /// L2 penalty on leaf denominators.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,

    #[arg(long, default_value_t = 255)]
    pub max_bins: usize,

    /// CausalGBM loss [default: squared].
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,

    #[arg(long, value_enum, default_value_t = ModeArg::Boosting)]
    pub mode: ModeArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub booster: BoosterArg,

    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Where to write the model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// CSV containing every feature column the model was trained on.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputArg::Effect)]
    pub output: OutputArg,

    /// Arm to predict; effects default to every treatment arm, outcomes to control.
    #[arg(long)]
    pub arm: Option<usize>,

    #[arg(long, value_enum, default_value_t = ScaleArg::Margin)]
    pub scale: ScaleArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// CSV of scores, one row per data row.
    #[arg(long)]
    pub scores: PathBuf,

    /// Score column [default: `effect` if present, else the first column].
    #[arg(long)]
    pub score_column: Option<String>,

    #[command(flatten)]
    pub data: DataArgs,

    /// Write the curve points as `fraction,gain` CSV.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, value_enum)]
    pub booster: BoosterArg,

    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200_000)]
    pub n: usize,

    #[arg(long, default_value_t = 100)]
    pub p: usize,

    /// Probability of treatment.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,

    /// Effect strength; the average effect is half of it.
    #[arg(long, default_value_t = 0.48)]
    pub effect: f64,

    /// Noise standard deviation for continuous outcomes.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    #[arg(long, value_enum, default_value_t = OutcomeKindArg::Binary)]
    pub outcome_kind: OutcomeKindArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,

    /// Add `__true_effect_1` with each row's true effect.
    #[arg(long)]
    pub with_truth: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Feature counts to compare.
    #[arg(long, value_delimiter = ',', default_value = "5,20,50,100")]
    pub dims: Vec<usize>,

    /// Rows per synthetic dataset, split 50/50 into train and test.
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,

    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,

    #[arg(long, default_value_t = 0.48)]
    pub effect: f64,

    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    #[arg(long, value_enum, default_value_t = OutcomeKindArg::Binary)]
    pub outcome_kind: OutcomeKindArg,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
