use std::fs;
use std::path::Path;

use boke::bench::{lhs_sample, Objective};
use boke::driver::{run, stream, Algorithm, Stream};
use boke::exploration::{default_probes_per_axis, fill_distance};
use boke::maximizer::DecisionSet;
use boke::surrogate::PointCloud;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Common, FillConfig, FillMethod};
use crate::matrix::{pool, run_seed, worker_count};
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Points of one design of size `n` on `[0,1]^d`, in the order they were added.
/// LHS is not sequential, so it is drawn afresh for every requested size.
fn design(method: FillMethod, d: usize, n: usize, seed: u64, common: &Common) -> Result<PointCloud, CliError> {
    let unit = DecisionSet::unit_box(d);
    let pts: Vec<Vec<f64>> = match method {
        FillMethod::Lhs => lhs_sample(&vec![0.0; d], &vec![1.0; d], n, &mut stream(seed, Stream::Init)),
        FillMethod::UniformRandom => {
            let mut rng = stream(seed, Stream::Random);
            (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
        }
        FillMethod::DensityExplore | FillMethod::GpVarianceExplore => {
            let alg = if method == FillMethod::DensityExplore {
                Algorithm::DensityExplore
            } else {
                Algorithm::GpVarianceExplore
            };
            let flat = Objective::new("flat", vec![0.0; d], vec![1.0; d], |_| 0.0).map_err(runtime)?;
            let cfg = common.run_config(alg, d, 1, n.max(2), seed);
            let trace = run(&flat, &unit, &cfg).map_err(runtime)?;
            trace.records.iter().take(n).map(|r| r.x.clone()).collect()
        }
    };
    PointCloud::from_points(d, &pts).map_err(runtime)
}

/// Fill distance of `method`'s design on `[0,1]^d` at each checkpoint.
pub fn fill_curve(
    method: FillMethod,
    d: usize,
    checkpoints: &[usize],
    seed: u64,
    common: &Common,
    probes_per_axis: Option<usize>,
) -> Result<Vec<f64>, CliError> {
    let unit = DecisionSet::unit_box(d);
    let probes = probes_per_axis.unwrap_or_else(|| default_probes_per_axis(d));
    let t_max = checkpoints.iter().copied().max().unwrap_or(1);
    let sequential = (method != FillMethod::Lhs).then(|| design(method, d, t_max, seed, common)).transpose()?;
    checkpoints
        .iter()
        .map(|&t| {
            let cloud = match &sequential {
                Some(c) => c.prefix(t),
                None => design(method, d, t, seed, common)?,
            };
            fill_distance(&unit, &cloud, probes).map_err(runtime)
        })
        .collect()
}

/// Least-squares slope of `ln h` against `ln t`.
pub fn loglog_slope(ts: &[usize], hs: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| (*t as f64).ln()).collect();
    let ys: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillRow {
    pub method: String,
    pub d: usize,
    pub t: usize,
    pub mean_fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillSlope {
    pub method: String,
    pub d: usize,
    pub slope: f64,
    pub t_min: usize,
    pub t_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillReport {
    pub rows: Vec<FillRow>,
    pub slopes: Vec<FillSlope>,
}

/// Mean fill distance per (method, d, t) over seeds, plus the log-log slope of
/// each mean curve over checkpoints in `[slope_t_min, t_max]`.
pub fn report_fill(cfg: &FillConfig) -> Result<FillReport, CliError> {
    cfg.validate()?;
    let checkpoints = cfg.checkpoints();
    let common = cfg.common();
    let seeds = cfg.seeds.values();
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &d in &cfg.dims {
            for &seed in &seeds {
                jobs.push((method, d, seed));
            }
        }
    }
    let curves: Vec<Vec<f64>> = pool(worker_count(cfg.workers)?)?.install(|| {
        jobs.par_iter()
            .map(|&(method, d, seed)| {
                fill_curve(method, d, &checkpoints, run_seed(cfg.master_seed, seed), &common, cfg.probes_per_axis)
            })
            .collect::<Result<_, _>>()
    })?;

    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (group, chunk) in curves.chunks(seeds.len()).enumerate() {
        let (method, d, _) = jobs[group * seeds.len()];
        let mean: Vec<f64> = (0..checkpoints.len())
            .map(|i| chunk.iter().map(|c| c[i]).sum::<f64>() / chunk.len() as f64)
            .collect();
        for (&t, &h) in checkpoints.iter().zip(&mean) {
            rows.push(FillRow { method: method.name().into(), d, t, mean_fill: h });
        }
        let (ts, hs): (Vec<usize>, Vec<f64>) =
            checkpoints.iter().zip(&mean).filter(|(t, _)| **t >= cfg.slope_t_min).map(|(t, h)| (*t, *h)).unzip();
        slopes.push(FillSlope {
            method: method.name().into(),
            d,
            slope: loglog_slope(&ts, &hs),
            t_min: cfg.slope_t_min,
            t_max: cfg.t_max,
        });
    }
    Ok(FillReport { rows, slopes })
}

/// Writes `fill.csv` and `fill_slopes.csv` into `out_dir`.
pub fn write_fill(report: &FillReport, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(runtime)?;
    let mut w = csv::Writer::from_path(out_dir.join("fill.csv")).map_err(runtime)?;
    for r in &report.rows {
        w.serialize(r).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    let mut w = csv::Writer::from_path(out_dir.join("fill_slopes.csv")).map_err(runtime)?;
    for s in &report.slopes {
        w.serialize(s).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}
