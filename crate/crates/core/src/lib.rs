//! Bayesian optimization with kernel regression surrogates and kernel density
//! exploration (BOKE, BOKE+), together with GP-UCB, KR-UCB, random search and
//! density-based space-filling baselines.
//!
//! Kernel-based pieces work on raw coordinates; [`driver::run`] maps box
//! domains to the unit cube first so a single bandwidth applies to every axis.

pub mod acquisition;
pub mod bench;
pub mod driver;
pub mod error;
pub mod exploration;
pub mod gp;
pub mod kernel;
pub mod maximizer;
pub mod surrogate;

pub use acquisition::{score_density_explore, score_gp_ucb, score_ikr_ucb, score_kr_exploit, KrUcbParams};
pub use bench::{problem, Objective};
pub use driver::{eval_beta, run, Algorithm, BandwidthRule, BetaRule, RunConfig, Schedules, Trace};
pub use error::{Error, Result};
pub use exploration::{exploration_sigma, fill_distance, kde_weight, ExtendedReal};
pub use gp::{merge_duplicates, GpPosterior};
pub use kernel::{KernelFamily, KernelSpec};
pub use maximizer::{maximize, Acquisition, DecisionSet, MaximizerConfig};
pub use surrogate::{predict_kr, scott_bandwidth, silverman_bandwidth, Dataset, PointCloud};
