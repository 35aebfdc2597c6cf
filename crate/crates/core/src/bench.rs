//! Synthetic benchmark objectives, observation noise, regret metrics, Latin
//! hypercube sampling and a Lipschitz-based modulus-of-continuity estimate.
//!
//! Every registered problem is stated as a maximization. The suite uses the
//! standard forms collected by Jamil & Yang (2013) and Picheny et al. (2013),
//! negated where the literature states a minimization:
//!
//! | name             | domain            | negated function                                              |
//! |------------------|-------------------|---------------------------------------------------------------|
//! | `toy1d`          | `[0, 1]`          | `-exp(-1.4x) cos(3.5πx)` (not negated)                         |
//! | `forrester`      | `[0, 1]`          | `(6x - 2)² sin(12x - 4)`                                      |
//! | `goldstein_price`| `[-2, 2]²`        | Goldstein-Price product form                                  |
//! | `six_hump_camel` | `[-3,3]×[-2,2]`   | `(4 - 2.1x₁² + x₁⁴/3)x₁² + x₁x₂ + (-4 + 4x₂²)x₂²`              |
//! | `hartmann3`      | `[0, 1]³`         | `-Σ αᵢ exp(-Σ Aᵢⱼ (xⱼ - Pᵢⱼ)²)`                                |
//! | `rosenbrock4`    | `[-5, 10]⁴`       | `Σ 100(xᵢ₊₁ - xᵢ²)² + (xᵢ - 1)²`                                |
//! | `sphere6`        | `[-5.12, 5.12]⁶`  | `Σ xᵢ²`                                                       |
//!
//! Known maxima are not typed in by hand. They come from [`locate_max`] and
//! are frozen in [`KNOWN_MAXIMA`]; a test re-runs the oracle and compares.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::maximizer::DecisionSet;

pub const PROBLEMS: [&str; 7] =
    ["toy1d", "forrester", "goldstein_price", "six_hump_camel", "hartmann3", "rosenbrock4", "sphere6"];

/// Oracle settings used to produce [`KNOWN_MAXIMA`].
pub const ORACLE_GRID_POINTS: usize = 1_000_000;
pub const ORACLE_REFINE_STARTS: usize = 20;
pub const ORACLE_REFINE_BUDGET: usize = 100_000;

/// `(name, value, location)` as produced by [`locate_max`] with the oracle settings above.
pub const KNOWN_MAXIMA: [(&str, f64, &[f64]); 7] = [
    ("toy1d", 0.6757608313797879, &[0.2741966936639617]),
    ("forrester", 6.020740055767083, &[0.7572487574350218]),
    ("goldstein_price", -2.999999999999911, &[-5.996263926496545e-10, -0.9999999997061526]),
    ("six_hump_camel", 1.0316284534898776, &[-0.08984201078837356, 0.7126564029649414]),
    ("hartmann3", 3.862779787332663, &[0.11458887524074977, 0.5556488949391577, 0.852546985492562]),
    ("rosenbrock4", -6.072631274433229e-22, &[1.000000000002112, 1.0000000000048406, 1.000000000007569, 1.0000000000157545]),
    ("sphere6", -4.112917548882932e-24, &[-8.279409750381698e-13, -8.279409750381698e-13, -8.279409750381698e-13, -8.279409750381698e-13, -8.279409750381698e-13, -8.279409750381698e-13]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct KnownMax {
    pub value: f64,
    pub location: Vec<f64>,
    /// Where the value came from, e.g. the oracle settings.
    pub provenance: String,
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A deterministic objective on an axis-aligned box.
#[derive(Clone)]
pub struct Objective {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    f: Evaluator,
    known_max: Option<KnownMax>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("known_max", &self.known_max)
            .finish()
    }
}

impl Objective {
    pub fn new<F>(name: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        DecisionSet::new_box(lower.clone(), upper.clone())?;
        Ok(Objective { name: name.into(), lower, upper, f: Arc::new(f), known_max: None })
    }

    pub fn with_known_max(mut self, known: KnownMax) -> Self {
        self.known_max = Some(known);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn domain(&self) -> DecisionSet {
        DecisionSet::Box { lower: self.lower.clone(), upper: self.upper.clone() }
    }

    pub fn known_max(&self) -> Option<&KnownMax> {
        self.known_max.as_ref()
    }

    /// Noise-free value at `x`. Points outside the box and non-finite values are errors.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if x.iter().zip(self.lower.iter().zip(&self.upper)).any(|(v, (l, u))| !(*l <= *v && *v <= *u)) {
            return Err(Error::OutOfDomain { objective: self.name.clone(), point: x.to_vec() });
        }
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("`{}` returned {v} at {x:?}", self.name)));
        }
        Ok(v)
    }

    fn raw(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

pub fn toy1d(x: f64) -> f64 {
    -(-1.4 * x).exp() * (3.5 * PI * x).cos()
}

fn forrester(x: &[f64]) -> f64 {
    let v = 6.0 * x[0] - 2.0;
    -(v * v * (12.0 * x[0] - 4.0).sin())
}

fn goldstein_price(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let p = 1.0
        + (a + b + 1.0).powi(2) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    let q = 30.0
        + (2.0 * a - 3.0 * b).powi(2)
            * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    -(p * q)
}

fn six_hump_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let a2 = a * a;
    -((4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (-4.0 + 4.0 * b * b) * b * b)
}

const H3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const H3_A: [[f64; 3]; 4] = [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
const H3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

fn hartmann3(x: &[f64]) -> f64 {
    (0..4)
        .map(|i| {
            let e: f64 = (0..3).map(|j| H3_A[i][j] * (x[j] - H3_P[i][j]).powi(2)).sum();
            H3_ALPHA[i] * (-e).exp()
        })
        .sum()
}

fn rosenbrock(x: &[f64]) -> f64 {
    -x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2)).sum::<f64>()
}

fn sphere(x: &[f64]) -> f64 {
    -x.iter().map(|v| v * v).sum::<f64>()
}

/// The registered problem `name` without a known maximum attached.
pub fn problem_unseeded(name: &str) -> Result<Objective> {
    match name {
        "toy1d" => Objective::new(name, vec![0.0], vec![1.0], |x| toy1d(x[0])),
        "forrester" => Objective::new(name, vec![0.0], vec![1.0], forrester),
        "goldstein_price" => Objective::new(name, vec![-2.0; 2], vec![2.0; 2], goldstein_price),
        "six_hump_camel" => Objective::new(name, vec![-3.0, -2.0], vec![3.0, 2.0], six_hump_camel),
        "hartmann3" => Objective::new(name, vec![0.0; 3], vec![1.0; 3], hartmann3),
        "rosenbrock4" => Objective::new(name, vec![-5.0; 4], vec![10.0; 4], rosenbrock),
        "sphere6" => Objective::new(name, vec![-5.12; 6], vec![5.12; 6], sphere),
        other => Err(Error::InvalidParameter(format!("unknown problem `{other}`; known: {}", PROBLEMS.join(", ")))),
    }
}

/// The registered problem `name` with its frozen known maximum.
pub fn problem(name: &str) -> Result<Objective> {
    let obj = problem_unseeded(name)?;
    let (_, value, location) = KNOWN_MAXIMA.iter().find(|(n, _, _)| *n == name).expect("registry and table agree");
    Ok(obj.with_known_max(KnownMax {
        value: *value,
        location: location.to_vec(),
        provenance: format!(
            "grid oracle, {ORACLE_GRID_POINTS} points, {ORACLE_REFINE_STARTS} pattern-search refinements of {ORACLE_REFINE_BUDGET} evaluations"
        ),
    }))
}

/// Dense-grid search followed by pattern-search refinement of the best grid points.
///
/// The grid has `round(grid_points^(1/d))` points per axis, endpoints included.
pub fn locate_max(obj: &Objective, grid_points: usize, refine_starts: usize, refine_budget: usize) -> KnownMax {
    let d = obj.dim();
    let per_axis = ((grid_points as f64).powf(1.0 / d as f64).round() as usize).max(2);
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
    let keep = refine_starts.max(1);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        for k in 0..d {
            x[k] = obj.lower[k] + (obj.upper[k] - obj.lower[k]) * idx[k] as f64 / (per_axis - 1) as f64;
        }
        let v = obj.raw(&x);
        if top.len() < keep || v > top[top.len() - 1].0 {
            let pos = top.partition_point(|(tv, _)| *tv >= v);
            top.insert(pos, (v, x.clone()));
            top.truncate(keep);
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let mut best = top[0].clone();
    for (v0, start) in top {
        let (p, v) = hooke_jeeves(|x| obj.raw(x), &obj.lower, &obj.upper, start, v0, refine_budget);
        if v > best.0 {
            best = (v, p);
        }
    }
    KnownMax {
        value: best.0,
        location: best.1,
        provenance: format!("grid oracle, {grid_points} points, {refine_starts} refinements of {refine_budget} evaluations"),
    }
}

/// Hooke-Jeeves pattern search (maximization) inside a box.
fn hooke_jeeves<F: Fn(&[f64]) -> f64>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    start: Vec<f64>,
    f_start: f64,
    budget: usize,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut step: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.2 * (u - l)).collect();
    let min_step: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 1e-13 * (u - l)).collect();
    let mut evals = 0;
    let explore = |mut x: Vec<f64>, mut fx: f64, step: &[f64], evals: &mut usize| {
        for k in 0..d {
            let orig = x[k];
            for dir in [1.0, -1.0] {
                let v = (orig + dir * step[k]).clamp(lower[k], upper[k]);
                if v == orig {
                    continue;
                }
                x[k] = v;
                let fv = f(&x);
                *evals += 1;
                if fv > fx {
                    fx = fv;
                    break;
                }
                x[k] = orig;
            }
        }
        (x, fx)
    };
    let (mut base, mut fb) = (start, f_start);
    while evals < budget && step.iter().zip(&min_step).any(|(s, m)| s > m) {
        let (mut x, mut fx) = explore(base.clone(), fb, &step, &mut evals);
        if fx > fb {
            while fx > fb && evals < budget {
                let prev = std::mem::replace(&mut base, x);
                fb = fx;
                let p: Vec<f64> = (0..d).map(|k| (2.0 * base[k] - prev[k]).clamp(lower[k], upper[k])).collect();
                let fp = f(&p);
                evals += 1;
                (x, fx) = explore(p, fp, &step, &mut evals);
            }
        } else {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
        }
    }
    (base, fb)
}

/// Additive Gaussian observation noise with its own generator stream.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    std: f64,
    rng: ChaCha8Rng,
}

impl NoiseModel {
    pub fn new(std: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise std must be >= 0, got {std}")));
        }
        Ok(NoiseModel { std, rng })
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    /// One noise draw. A standard normal is drawn even when `std == 0` so the
    /// stream position does not depend on the noise level.
    pub fn sample(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.std * z
    }
}

fn optimum(obj: &Objective) -> Result<f64> {
    obj.known_max().map(|k| k.value).ok_or_else(|| Error::MissingKnownMax(obj.name.clone()))
}

/// `f(x*) - max_t f(x_t)` over noise-free values `fx`.
pub fn simple_regret(obj: &Objective, fx: &[f64]) -> Result<f64> {
    let best = fx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(optimum(obj)? - best)
}

/// `f(x*) - f(x̂)` for a recommended point.
pub fn recommendation_regret(obj: &Objective, x: &[f64]) -> Result<f64> {
    Ok(optimum(obj)? - obj.eval(x)?)
}

/// `Σ_t (f(x*) - f(x_t))` over noise-free values `fx`.
pub fn cumulative_regret(obj: &Objective, fx: &[f64]) -> Result<f64> {
    let f_star = optimum(obj)?;
    Ok(fx.iter().map(|v| f_star - v).sum())
}

/// Latin hypercube sample of `n` points in the box: along every axis each of
/// the `n` equal strata holds exactly one point.
pub fn lhs_sample<R: Rng + ?Sized>(lower: &[f64], upper: &[f64], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = lower.len();
    let mut points = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for k in 0..d {
        strata.shuffle(rng);
        for (p, &s) in points.iter_mut().zip(&strata) {
            let u = (s as f64 + rng.random::<f64>()) / n as f64;
            p[k] = (lower[k] + u * (upper[k] - lower[k])).min(upper[k]);
        }
    }
    points
}

pub fn lhs_sample_seeded(lower: &[f64], upper: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    lhs_sample(lower, upper, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Conservative bound on the modulus of continuity `ω_f(radius)`: `1.5 · L̂ · radius`,
/// where `L̂` is the largest finite-difference slope between grid neighbours on a
/// grid of about `grid_points` points.
pub fn estimate_modulus(obj: &Objective, radius: f64, grid_points: usize) -> f64 {
    if !(radius > 0.0) {
        return 0.0;
    }
    let d = obj.dim();
    let per_axis = ((grid_points as f64).powf(1.0 / d as f64).round() as usize).max(2);
    let step: Vec<f64> = (0..d).map(|k| (obj.upper[k] - obj.lower[k]) / (per_axis - 1) as f64).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut lip: f64 = 0.0;
    loop {
        for k in 0..d {
            x[k] = obj.lower[k] + step[k] * idx[k] as f64;
        }
        let fx = obj.raw(&x);
        for k in 0..d {
            if idx[k] + 1 < per_axis {
                y.copy_from_slice(&x);
                y[k] = obj.lower[k] + step[k] * (idx[k] + 1) as f64;
                lip = lip.max((obj.raw(&y) - fx).abs() / (y[k] - x[k]));
            }
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    1.5 * lip * radius
}
