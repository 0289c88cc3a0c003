//! Flag surface. Every flag can also be set through an `SVMP_`-prefixed
//! environment variable; explicit flags win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "svmp",
    version,
    about = "Max-margin sequence pooling: synthesis, pooling, training, evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a planted-signal synthetic dataset
    Synth(SynthArgs),
    /// Pool every sequence of a dataset into descriptors
    Pool(PoolArgs),
    /// Jointly train per-class classifiers and write a model file
    Train(TrainArgs),
    /// Cross-validated evaluation of one method
    Eval(EvalArgs),
    /// Cross-validated comparison table over all baseline methods
    Report(ReportArgs),
}

/// Pooling-loop flags shared by every command that solves per-bag
/// separation problems.
#[derive(Args, Debug, Clone)]
pub struct PoolFlags {
    /// Minimum fraction of a bag that must land on the positive side
    #[arg(long, env = "SVMP_ETA", default_value_t = 0.9)]
    pub eta: f64,
    /// Starting value of the geometric C schedule
    #[arg(long = "c-init", env = "SVMP_C_INIT", default_value_t = 1e-4)]
    pub c_init: f64,
    /// Multiplicative growth factor of the C schedule
    #[arg(long = "c-growth", env = "SVMP_C_GROWTH", default_value_t = 10.0)]
    pub c_growth: f64,
    /// Largest C the schedule may exceed once before giving up
    #[arg(long = "c-cap", env = "SVMP_C_CAP", default_value_t = 1e4)]
    pub c_cap: f64,
    /// Disable the schedule and solve once at this fixed C
    #[arg(long = "c-fixed", env = "SVMP_C_FIXED")]
    pub c_fixed: Option<f64>,
    /// Kernel for dual-coefficient pooling: linear or rbf
    #[arg(long, env = "SVMP_KERNEL", default_value = "rbf")]
    pub kernel: String,
    /// RBF width; omitted means the median heuristic on training frames
    #[arg(long, env = "SVMP_GAMMA")]
    pub gamma: Option<f64>,
}

/// Bag subsampling flags.
#[derive(Args, Debug, Clone)]
pub struct BagFlags {
    /// Frames sampled per positive bag (with replacement when shorter)
    #[arg(long = "pos-bag-size", env = "SVMP_POS_BAG_SIZE", default_value_t = 25)]
    pub pos_bag_size: usize,
    /// Frames sampled for the shared negative bag
    #[arg(long = "neg-bag-size", env = "SVMP_NEG_BAG_SIZE", default_value_t = 50)]
    pub neg_bag_size: usize,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output dataset manifest path (the blob is written next to it)
    #[arg(long, env = "SVMP_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "SVMP_CLASSES", default_value_t = 10)]
    pub classes: usize,
    #[arg(long = "sequences-per-class", env = "SVMP_SEQUENCES_PER_CLASS", default_value_t = 30)]
    pub sequences_per_class: usize,
    /// Frames per sequence
    #[arg(long, env = "SVMP_FRAMES", default_value_t = 25)]
    pub frames: usize,
    /// Feature dimension
    #[arg(long, env = "SVMP_DIM", default_value_t = 128)]
    pub dim: usize,
    /// Fraction of each sequence carrying the class signal
    #[arg(long, env = "SVMP_RHO", default_value_t = 0.2)]
    pub rho: f64,
    /// Norm of the informative component
    #[arg(long, env = "SVMP_SIGNAL", default_value_t = 3.0)]
    pub signal: f64,
    /// Per-coordinate Gaussian noise level
    #[arg(long, env = "SVMP_SIGMA", default_value_t = 0.8)]
    pub sigma: f64,
    /// Frames in the shared negative bag
    #[arg(long = "neg-frames", env = "SVMP_NEG_FRAMES", default_value_t = 50)]
    pub neg_frames: usize,
    #[arg(long, env = "SVMP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct PoolArgs {
    /// Input features: native dataset manifest or tabular text
    #[arg(long, env = "SVMP_DATA")]
    pub data: PathBuf,
    /// Output descriptor manifest path
    #[arg(long, env = "SVMP_OUT")]
    pub out: PathBuf,
    /// Descriptor kind: avg, max, svmp, or nsvmp
    #[arg(long, env = "SVMP_METHOD", default_value = "svmp")]
    pub method: String,
    #[command(flatten)]
    pub pool: PoolFlags,
    #[command(flatten)]
    pub bags: BagFlags,
    #[arg(long, env = "SVMP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Parallel pooling workers (1 = serial)
    #[arg(long, env = "SVMP_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, env = "SVMP_DATA")]
    pub data: PathBuf,
    /// Output model manifest path
    #[arg(long, env = "SVMP_OUT")]
    pub out: PathBuf,
    #[command(flatten)]
    pub pool: PoolFlags,
    #[command(flatten)]
    pub bags: BagFlags,
    /// Regularizer of the per-class action classifiers
    #[arg(long, env = "SVMP_C2", default_value_t = 10.0)]
    pub c2: f64,
    #[arg(long = "max-bcd-iters", env = "SVMP_MAX_BCD_ITERS", default_value_t = 10)]
    pub max_bcd_iters: usize,
    /// Relative classifier-change threshold that stops the joint loop
    #[arg(long = "z-tol", env = "SVMP_Z_TOL", default_value_t = 1e-3)]
    pub z_tol: f64,
    #[arg(long, env = "SVMP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "SVMP_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EvalCommonArgs {
    #[arg(long, env = "SVMP_DATA")]
    pub data: PathBuf,
    /// Optional report file; the same text minus timings goes to stdout
    #[arg(long, env = "SVMP_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "SVMP_FOLDS", default_value_t = 3)]
    pub folds: usize,
    #[arg(long, env = "SVMP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub pool: PoolFlags,
    #[command(flatten)]
    pub bags: BagFlags,
    #[arg(long, env = "SVMP_C2", default_value_t = 10.0)]
    pub c2: f64,
    /// Weight of the max-margin descriptor kernel in the fusion
    #[arg(long, env = "SVMP_BETA1", default_value_t = 1.0)]
    pub beta1: f64,
    /// Weight of the dual-coefficient descriptor kernel in the fusion
    #[arg(long, env = "SVMP_BETA2", default_value_t = 1.0)]
    pub beta2: f64,
    /// Approximation order of the homogeneous kernel map
    #[arg(long = "hom-order", env = "SVMP_HOM_ORDER", default_value_t = 3)]
    pub hom_order: u32,
    /// Sampling period of the homogeneous kernel map
    #[arg(long = "hom-period", env = "SVMP_HOM_PERIOD", default_value_t = 0.6)]
    pub hom_period: f64,
    #[arg(long = "max-bcd-iters", env = "SVMP_MAX_BCD_ITERS", default_value_t = 10)]
    pub max_bcd_iters: usize,
    #[arg(long = "z-tol", env = "SVMP_Z_TOL", default_value_t = 1e-3)]
    pub z_tol: f64,
    #[arg(long, env = "SVMP_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Method to evaluate: avg, max, svmp, nsvmp, fused, or joint
    #[arg(long, env = "SVMP_METHOD", default_value = "fused")]
    pub method: String,
    #[command(flatten)]
    pub common: EvalCommonArgs,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: EvalCommonArgs,
}
