use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use boke::bench::{self, Objective};
use boke::driver::{run, Trace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Per-run seed derived from the master seed and the configured seed only, so
/// every (problem, algorithm) pair under one seed shares its initial design
/// and dropping a seed leaves the others untouched.
pub fn run_seed(master_seed: u64, seed: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(seed))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trace_file_name(problem: &str, algorithm: &str, seed: u64) -> String {
    format!("{problem}__{algorithm}__seed{seed}.csv")
}

fn parse_trace_file_name(name: &str) -> Option<(String, String, u64)> {
    let stem = name.strip_suffix(".csv")?;
    let mut parts = stem.split("__");
    let problem = parts.next()?.to_string();
    let algorithm = parts.next()?.to_string();
    let seed = parts.next()?.strip_prefix("seed")?.parse().ok()?;
    parts.next().is_none().then_some((problem, algorithm, seed))
}

/// Worker count: `BOKE_WORKERS` overrides the configured value.
pub fn worker_count(configured: Option<usize>) -> Result<usize, CliError> {
    match std::env::var("BOKE_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("BOKE_WORKERS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(configured.unwrap_or_else(rayon::current_num_threads)),
    }
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Runtime(e.to_string()))
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn parse_value(s: &str) -> Result<f64, CliError> {
    match s {
        "" => Ok(f64::NAN),
        _ => s.parse().map_err(|_| CliError::Runtime(format!("bad number `{s}` in trace"))),
    }
}

/// Trace CSV header for a `dim`-dimensional problem.
pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=dim).map(|k| format!("x{k}")));
    h.extend(["y", "ell", "beta", "acq", "best", "update_us", "infer_us"].map(String::from));
    h
}

/// Writes a trace; an incomplete run ends with a `# incomplete: <reason>` line.
pub fn write_trace(path: &Path, trace: &Trace, dim: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(trace_header(dim)).map_err(io_err)?;
    for r in &trace.records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.x.iter().map(|v| fmt_value(*v)));
        row.extend([r.y, r.ell, r.beta, r.acq, r.best, r.update_us, r.infer_us].map(fmt_value));
        w.write_record(&row).map_err(io_err)?;
    }
    let mut file = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(reason) = &trace.failure {
        writeln!(file, "# incomplete: {}", reason.replace('\n', " ")).map_err(io_err)?;
    }
    Ok(())
}

/// Rows of a trace file as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRows {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub step_us: Vec<f64>,
    pub incomplete: Option<String>,
}

pub fn read_trace(path: &Path) -> Result<TraceRows, CliError> {
    let text = fs::read_to_string(path).map_err(io_err)?;
    let incomplete = text.lines().find_map(|l| l.strip_prefix("# incomplete: ").map(String::from));
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(io_err)?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    if header.iter().collect::<Vec<_>>() != trace_header(dim) {
        return Err(CliError::Runtime(format!("{}: unexpected header", path.display())));
    }
    let mut rows = TraceRows { x: Vec::new(), y: Vec::new(), step_us: Vec::new(), incomplete };
    for rec in r.records() {
        let rec = rec.map_err(io_err)?;
        let vals: Vec<f64> = rec.iter().skip(1).map(parse_value).collect::<Result<_, _>>()?;
        rows.x.push(vals[..dim].to_vec());
        rows.y.push(vals[dim]);
        rows.step_us.push(vals[dim + 5] + vals[dim + 6]);
    }
    Ok(rows)
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// What the summary needs from one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub problem: String,
    pub algorithm: String,
    pub seed: u64,
    /// Noise-free objective values in evaluation order.
    pub fx: Vec<f64>,
    /// Update plus inference time per evaluation, in microseconds.
    pub step_us: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub runs: usize,
    /// Seeds whose run stopped early.
    pub incomplete: Vec<u64>,
    /// Mean over runs of the simple regret after `t` evaluations, `t = 1..T`.
    pub mean_simple_regret: Vec<f64>,
    pub median_final_simple_regret: f64,
    /// Mean over runs of cumulative update plus inference time in seconds.
    pub mean_cumulative_time_s: Vec<f64>,
}

/// `problem → algorithm → summary`.
pub type Summary = BTreeMap<String, BTreeMap<String, AlgorithmSummary>>;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Averages per-iteration curves; runs that stopped early drop out of later means.
fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let vals: Vec<f64> = curves.iter().filter_map(|c| c.get(t).copied()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

pub fn summarize_outcomes(outcomes: &[RunOutcome]) -> Result<Summary, CliError> {
    let mut groups: BTreeMap<(String, String), Vec<&RunOutcome>> = BTreeMap::new();
    for o in outcomes {
        groups.entry((o.problem.clone(), o.algorithm.clone())).or_default().push(o);
    }
    let mut summary = Summary::new();
    for ((problem, algorithm), mut runs) in groups {
        runs.sort_by_key(|o| o.seed);
        let obj = bench::problem(&problem).map_err(|e| CliError::Runtime(e.to_string()))?;
        let f_star = obj.known_max().expect("registered problems carry a known maximum").value;
        let regret: Vec<Vec<f64>> = runs
            .iter()
            .map(|o| {
                let mut best = f64::NEG_INFINITY;
                o.fx.iter()
                    .map(|v| {
                        best = best.max(*v);
                        f_star - best
                    })
                    .collect()
            })
            .collect();
        let time: Vec<Vec<f64>> = runs
            .iter()
            .map(|o| {
                let mut acc = 0.0;
                o.step_us.iter().map(|us| {
                    acc += us * 1e-6;
                    acc
                })
                .collect()
            })
            .collect();
        let finals = regret.iter().filter_map(|c| c.last().copied()).collect();
        summary.entry(problem).or_default().insert(
            algorithm,
            AlgorithmSummary {
                runs: runs.len(),
                incomplete: runs.iter().filter(|o| o.failure.is_some()).map(|o| o.seed).collect(),
                mean_simple_regret: mean_curve(&regret),
                median_final_simple_regret: median(finals),
                mean_cumulative_time_s: mean_curve(&time),
            },
        );
    }
    Ok(summary)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(summary).map_err(io_err)?;
    fs::write(path, text + "\n").map_err(io_err)
}

#[derive(Debug)]
pub struct MatrixResult {
    pub trace_files: Vec<PathBuf>,
    pub summary: Summary,
    pub incomplete_runs: usize,
}

/// Runs every (problem, algorithm, seed) combination of `cfg` and writes one
/// trace per run plus `summary.json` into `out_dir`.
pub fn run_matrix(cfg: &ExperimentConfig, out_dir: &Path) -> Result<MatrixResult, CliError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err)?;
    let objectives: Vec<Objective> =
        cfg.problems.iter().map(|p| bench::problem(p)).collect::<Result<_, _>>().map_err(io_err)?;
    let common = cfg.common();
    let mut jobs = Vec::new();
    for obj in &objectives {
        for alg in &cfg.algorithms {
            for seed in cfg.seeds.values() {
                jobs.push((obj, *alg, seed));
            }
        }
    }

    let workers = worker_count(cfg.workers)?;
    let results: Vec<Result<(PathBuf, RunOutcome), CliError>> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|(obj, alg, seed)| {
                let mut run_cfg =
                    common.run_config(*alg, obj.dim(), cfg.init_for(obj.dim()), cfg.budget, run_seed(cfg.master_seed, *seed));
                run_cfg.noise_std = cfg.noise_std;
                let trace = run(obj, &obj.domain(), &run_cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
                let path = out_dir.join(trace_file_name(obj.name(), &alg.label(), *seed));
                write_trace(&path, &trace, obj.dim())?;
                let outcome = RunOutcome {
                    problem: obj.name().to_string(),
                    algorithm: alg.label(),
                    seed: *seed,
                    fx: trace.fx(),
                    step_us: trace.records.iter().map(|r| r.update_us + r.infer_us).collect(),
                    failure: trace.failure.clone(),
                };
                Ok((path, outcome))
            })
            .collect()
    });

    let mut trace_files = Vec::new();
    let mut outcomes = Vec::new();
    for r in results {
        let (path, outcome) = r?;
        trace_files.push(path);
        outcomes.push(outcome);
    }
    let incomplete_runs = outcomes.iter().filter(|o| o.failure.is_some()).count();
    let summary = summarize_outcomes(&outcomes)?;
    write_summary(&out_dir.join("summary.json"), &summary)?;
    Ok(MatrixResult { trace_files, summary, incomplete_runs })
}

/// Rebuilds `summary.json` from the trace files in `dir`, re-evaluating the
/// noise-free objective at every recorded point.
pub fn summarize_dir(dir: &Path) -> Result<Summary, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    entries.sort();
    let mut outcomes = Vec::new();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let Some((problem, algorithm, seed)) = parse_trace_file_name(name) else {
            continue;
        };
        let obj = bench::problem(&problem).map_err(io_err)?;
        let rows = read_trace(&path)?;
        let fx = rows.x.iter().map(|x| obj.eval(x)).collect::<Result<Vec<_>, _>>().map_err(io_err)?;
        outcomes.push(RunOutcome { problem, algorithm, seed, fx, step_us: rows.step_us, failure: rows.incomplete });
    }
    if outcomes.is_empty() {
        return Err(CliError::Runtime(format!("no trace files found in {}", dir.display())));
    }
    let summary = summarize_outcomes(&outcomes)?;
    write_summary(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Value columns of a trace file, i.e. everything except the two timing columns.
pub fn value_columns(path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(io_err)?;
    Ok(text
        .lines()
        .map(|l| {
            if l.starts_with('#') {
                return l.to_string();
            }
            let cols: Vec<&str> = l.split(',').collect();
            cols[..cols.len().saturating_sub(2)].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_round_trip() {
        let n = trace_file_name("toy1d", "boke_plus_p0.5", 12);
        assert_eq!(parse_trace_file_name(&n), Some(("toy1d".into(), "boke_plus_p0.5".into(), 12)));
        assert_eq!(parse_trace_file_name("summary.json"), None);
    }

    #[test]
    fn median_and_means() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean_curve(&[vec![1.0, 2.0], vec![3.0]]), vec![2.0, 2.0]);
    }

    #[test]
    fn seeds_are_isolated() {
        assert_eq!(run_seed(7, 3), run_seed(7, 3));
        assert_ne!(run_seed(7, 3), run_seed(7, 4));
        assert_ne!(run_seed(7, 3), run_seed(8, 3));
    }

    #[test]
    fn values_format_round_trip() {
        for v in [0.1, -3.5e-300, 1e22, f64::INFINITY] {
            assert_eq!(parse_value(&fmt_value(v)).unwrap(), v);
        }
        assert!(parse_value(&fmt_value(f64::NAN)).unwrap().is_nan());
    }
}
