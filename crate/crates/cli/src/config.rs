use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use boke::driver::{Algorithm, BandwidthRule, BetaRule, GpSettings, KrUcbSettings, RunConfig, Schedules};
use boke::kernel::{KernelFamily, DEFAULT_TRUNCATION_RADIUS};
use boke::maximizer::MaximizerConfig;
use boke::bench;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Seeds as an explicit list or a count `n` meaning `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Count(u64),
}

impl Seeds {
    pub fn values(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Count(n) => (0..*n).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub family: KernelFamily,
    pub truncation_radius: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { family: KernelFamily::Gaussian, truncation_radius: DEFAULT_TRUNCATION_RADIUS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaximizerSection {
    /// Defaults to `10 · d`.
    pub n_starts: Option<usize>,
    pub local_budget: usize,
}

impl Default for MaximizerSection {
    fn default() -> Self {
        let d = MaximizerConfig::default();
        MaximizerSection { n_starts: d.n_starts, local_budget: d.local_budget }
    }
}

impl From<MaximizerSection> for MaximizerConfig {
    fn from(m: MaximizerSection) -> Self {
        MaximizerConfig { n_starts: m.n_starts, local_budget: m.local_budget }
    }
}

/// Settings shared by `run` and `fill`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Common {
    pub kernel: KernelSection,
    pub bandwidth: BandwidthRule,
    pub beta: BetaRule,
    pub maximizer: MaximizerSection,
    pub gp: GpSettings,
    pub kr_ucb: KrUcbSettings,
}

impl Common {
    pub fn run_config(&self, algorithm: Algorithm, dim: usize, init: usize, budget: usize, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(algorithm, dim, budget, seed);
        cfg.family = self.kernel.family;
        cfg.truncation_radius = self.kernel.truncation_radius;
        cfg.schedules = Schedules { beta: self.beta, bandwidth: self.bandwidth };
        cfg.init = init;
        cfg.maximizer = self.maximizer.into();
        cfg.gp = self.gp;
        cfg.kr_ucb = self.kr_ucb;
        cfg
    }
}

/// Configuration of the `run` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Seeds,
    pub budget: usize,
    /// Initial design size; defaults to `2d + 3` per problem.
    #[serde(default)]
    pub init: Option<usize>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default)]
    pub beta: BetaRule,
    #[serde(default)]
    pub maximizer: MaximizerSection,
    #[serde(default)]
    pub gp: GpSettings,
    #[serde(default)]
    pub kr_ucb: KrUcbSettings,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillMethod {
    DensityExplore,
    GpVarianceExplore,
    Lhs,
    UniformRandom,
}

impl FillMethod {
    pub fn name(self) -> &'static str {
        match self {
            FillMethod::DensityExplore => "density_explore",
            FillMethod::GpVarianceExplore => "gp_variance_explore",
            FillMethod::Lhs => "lhs",
            FillMethod::UniformRandom => "uniform_random",
        }
    }
}

/// Configuration of the `fill` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillConfig {
    pub methods: Vec<FillMethod>,
    pub dims: Vec<usize>,
    pub t_max: usize,
    pub seeds: Seeds,
    /// Design sizes at which fill distance is measured; defaults to a
    /// half-octave ladder from `slope_t_min` to `t_max`.
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    /// Probe grid resolution; defaults per dimension.
    #[serde(default)]
    pub probes_per_axis: Option<usize>,
    #[serde(default = "default_slope_t_min")]
    pub slope_t_min: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_fill_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub kernel: KernelSection,
    /// Bandwidth schedule of the density-explore method.
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default)]
    pub maximizer: MaximizerSection,
    #[serde(default)]
    pub gp: GpSettings,
}

fn default_slope_t_min() -> usize {
    20
}

fn default_fill_output() -> PathBuf {
    PathBuf::from("fill")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = parse(&read(path)?, path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_fill(path: &Path) -> Result<FillConfig, CliError> {
    let cfg: FillConfig = parse(&read(path)?, path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn common(&self) -> Common {
        Common {
            kernel: self.kernel,
            bandwidth: self.bandwidth,
            beta: self.beta,
            maximizer: self.maximizer,
            gp: self.gp,
            kr_ucb: self.kr_ucb,
        }
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn init_for(&self, dim: usize) -> usize {
        self.init.unwrap_or(2 * dim + 3)
    }

    /// Checks every (problem, algorithm) combination before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.problems.is_empty() {
            return Err(config_err("`problems` must name at least one problem"));
        }
        if self.algorithms.is_empty() {
            return Err(config_err("`algorithms` must list at least one algorithm"));
        }
        if self.seeds.values().is_empty() {
            return Err(config_err("`seeds` must contain at least one seed"));
        }
        let labels: BTreeSet<String> = self.algorithms.iter().map(|a| a.label()).collect();
        if labels.len() != self.algorithms.len() {
            return Err(config_err("`algorithms` contains duplicates"));
        }
        let seeds: BTreeSet<u64> = self.seeds.values().into_iter().collect();
        if seeds.len() != self.seeds.values().len() {
            return Err(config_err("`seeds` contains duplicates"));
        }
        for name in &self.problems {
            let obj = bench::problem(name).map_err(config_err)?;
            let init = self.init_for(obj.dim());
            for alg in &self.algorithms {
                let mut run = self.common().run_config(*alg, obj.dim(), init, self.budget, 0);
                run.noise_std = self.noise_std;
                run.validate().map_err(|e| CliError::Config(format!("{name} / {alg}: {e}")))?;
            }
        }
        if self.workers == Some(0) {
            return Err(config_err("`workers` must be at least 1"));
        }
        Ok(())
    }
}

impl FillConfig {
    pub fn common(&self) -> Common {
        Common {
            kernel: self.kernel,
            bandwidth: self.bandwidth,
            maximizer: self.maximizer,
            gp: self.gp,
            ..Common::default()
        }
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let cfg: FillConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn checkpoints(&self) -> Vec<usize> {
        if let Some(c) = &self.checkpoints {
            return c.clone();
        }
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let t = (self.slope_t_min as f64 * 2f64.powf(k as f64 / 2.0)).round() as usize;
            if t >= self.t_max {
                break;
            }
            out.push(t);
            k += 1;
        }
        out.push(self.t_max);
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() || self.dims.is_empty() || self.seeds.values().is_empty() {
            return Err(config_err("`methods`, `dims` and `seeds` must be non-empty"));
        }
        if self.dims.contains(&0) {
            return Err(config_err("`dims` entries must be >= 1"));
        }
        if self.t_max < 2 || self.slope_t_min < 1 || self.slope_t_min >= self.t_max {
            return Err(config_err("need 1 <= slope_t_min < t_max and t_max >= 2"));
        }
        let cps = self.checkpoints();
        if cps.iter().any(|&t| t == 0 || t > self.t_max) || cps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("`checkpoints` must be increasing and within 1..=t_max"));
        }
        let run = self.common().run_config(Algorithm::DensityExplore, 1, 1, self.t_max, 0);
        run.validate().map_err(config_err)?;
        if self.workers == Some(0) {
            return Err(config_err("`workers` must be at least 1"));
        }
        Ok(())
    }
}
