//! Acquisition scores: IKR-UCB, pure-exploit kernel regression, density
//! exploration, GP-UCB, and the two-step KR-UCB selection rule.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::exploration::{exploration_sigma, kde_weight, kde_weight_unchecked, ExtendedReal};
use crate::gp::GpPosterior;
use crate::kernel::{sq_dist, KernelSpec};
use crate::maximizer::{maximize, Acquisition, DecisionSet, MaximizerConfig};
use crate::surrogate::{predict_kr, predict_kr_unchecked, Dataset, PointCloud};

/// `m_t(x) + β · σ̂_t(x)`; `+∞` where no observation is in range and `β > 0`.
pub fn score_ikr_ucb(data: &Dataset, kernel: &KernelSpec, beta: f64, x: &[f64]) -> Result<ExtendedReal> {
    let m = predict_kr(data, kernel, x)?;
    let w = kde_weight(data.points(), kernel, x)?;
    Ok(exploration_sigma(w).scale(beta).add(m))
}

pub fn score_kr_exploit(data: &Dataset, kernel: &KernelSpec, x: &[f64]) -> Result<f64> {
    predict_kr(data, kernel, x)
}

/// `-W_t(x)`, so that maximizing the score minimizes the density.
pub fn score_density_explore(points: &PointCloud, kernel: &KernelSpec, x: &[f64]) -> Result<f64> {
    Ok(-kde_weight(points, kernel, x)?)
}

/// `μ_t(x) + β · σ_t(x)`.
pub fn score_gp_ucb(post: &GpPosterior, beta: f64, x: &[f64]) -> Result<f64> {
    let (mu, var) = post.predict(x)?;
    Ok(mu + beta * var.sqrt())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// IKR-UCB as a maximizer objective. Infinite scores are ranked by distance to data.
#[derive(Debug, Clone, Copy)]
pub struct IkrUcb<'a> {
    data: &'a Dataset,
    kernel: &'a KernelSpec,
    beta: f64,
}

impl<'a> IkrUcb<'a> {
    pub fn new(data: &'a Dataset, kernel: &'a KernelSpec, beta: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_beta(beta)?;
        Ok(IkrUcb { data, kernel, beta })
    }
}

impl Acquisition for IkrUcb<'_> {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        debug_assert_eq!(x.len(), self.data.dim());
        let w = kde_weight_unchecked(self.data.points(), self.kernel, x);
        let sigma = exploration_sigma(w).scale(self.beta);
        if sigma.is_infinite() {
            return sigma;
        }
        sigma.add(predict_kr_unchecked(self.data, self.kernel, x))
    }

    fn infinite_rank(&self, x: &[f64]) -> f64 {
        self.data.points().distance_to(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrExploit<'a> {
    data: &'a Dataset,
    kernel: &'a KernelSpec,
}

impl<'a> KrExploit<'a> {
    pub fn new(data: &'a Dataset, kernel: &'a KernelSpec) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(KrExploit { data, kernel })
    }
}

impl Acquisition for KrExploit<'_> {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        ExtendedReal::Finite(predict_kr_unchecked(self.data, self.kernel, x))
    }
}

/// Density minimization. Points with `W = 0` score `+∞` and are ranked by
/// distance to data, which orders candidates the same way as `-W` while
/// still separating them where `W` is flat at zero.
#[derive(Debug, Clone, Copy)]
pub struct DensityExplore<'a> {
    points: &'a PointCloud,
    kernel: &'a KernelSpec,
}

impl<'a> DensityExplore<'a> {
    pub fn new(points: &'a PointCloud, kernel: &'a KernelSpec) -> Self {
        DensityExplore { points, kernel }
    }
}

impl Acquisition for DensityExplore<'_> {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        let w = kde_weight_unchecked(self.points, self.kernel, x);
        if w > 0.0 {
            ExtendedReal::Finite(-w)
        } else {
            ExtendedReal::Infinity
        }
    }

    fn infinite_rank(&self, x: &[f64]) -> f64 {
        if self.points.is_empty() {
            0.0
        } else {
            self.points.distance_to(x)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GpUcb<'a> {
    post: &'a GpPosterior,
    beta: f64,
}

impl<'a> GpUcb<'a> {
    pub fn new(post: &'a GpPosterior, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(GpUcb { post, beta })
    }
}

impl Acquisition for GpUcb<'_> {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        ExtendedReal::Finite(score_gp_ucb(self.post, self.beta, x).unwrap_or(f64::NEG_INFINITY))
    }
}

/// Posterior standard deviation alone; used as a space-filling comparator.
#[derive(Debug, Clone, Copy)]
pub struct GpVariance<'a> {
    post: &'a GpPosterior,
}

impl<'a> GpVariance<'a> {
    pub fn new(post: &'a GpPosterior) -> Self {
        GpVariance { post }
    }
}

impl Acquisition for GpVariance<'_> {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        ExtendedReal::Finite(self.post.predict(x).map_or(f64::NEG_INFINITY, |(_, v)| v))
    }
}

/// KR-UCB parameters: exploration weight `C`, widening radius `ρ`, widening exponent `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrUcbParams {
    pub c: f64,
    pub rho: f64,
    pub alpha: f64,
}

impl KrUcbParams {
    /// `C = 1`, `α = 0.5`, `ρ = R_Ψ ℓ / 2`.
    pub fn defaults_for(kernel: &KernelSpec) -> Self {
        KrUcbParams { c: 1.0, rho: 0.5 * kernel.support_radius(), alpha: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.rho > 0.0 && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "KR-UCB needs C > 0, rho > 0 and 0 < alpha < 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrUcbChoice {
    /// The point to query next.
    pub point: Vec<f64>,
    /// The queried point selected by the bandit step.
    pub anchor: Vec<f64>,
    /// Bandit index of the anchor.
    pub index: f64,
    /// Whether the widening step produced a new point.
    pub widened: bool,
}

/// Two-step KR-UCB.
///
/// The bandit step picks, among distinct queried points, the one maximizing
/// `m_t(x_i) + C sqrt(ln(Σ_j W_t(x_j)) / W_t(x_i))` with the logarithm clamped
/// at zero. When the number of distinct queried points is at most `t^α` the
/// widening step replaces it by the least-dense point of the domain within
/// distance `ρ` of it.
pub fn kr_ucb_select<R: Rng + ?Sized>(
    data: &Dataset,
    kernel: &KernelSpec,
    params: &KrUcbParams,
    domain: &DecisionSet,
    t: usize,
    maximizer: &MaximizerConfig,
    rng: &mut R,
) -> Result<KrUcbChoice> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    params.validate()?;
    check_dim(domain.dim(), data.dim())?;

    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut arms: Vec<&[f64]> = Vec::new();
    for p in data.points().iter() {
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert(key, ()).is_none() {
            arms.push(p);
        }
    }

    let points = data.points();
    let weights: Vec<f64> = points.iter().map(|p| kde_weight_unchecked(points, kernel, p)).collect();
    let log_total = weights.iter().sum::<f64>().ln().max(0.0);

    let mut best = 0;
    let mut best_index = f64::NEG_INFINITY;
    for (i, arm) in arms.iter().enumerate() {
        let w = kde_weight_unchecked(points, kernel, arm);
        let index = predict_kr_unchecked(data, kernel, arm) + params.c * (log_total / w).sqrt();
        if index > best_index {
            best = i;
            best_index = index;
        }
    }
    let anchor = arms[best].to_vec();

    let widen = (arms.len() as f64) <= (t as f64).powf(params.alpha);
    let point = if widen { least_dense_in_ball(points, kernel, &anchor, params.rho, domain, maximizer, rng) } else { anchor.clone() };
    Ok(KrUcbChoice { point, anchor, index: best_index, widened: widen })
}

fn least_dense_in_ball<R: Rng + ?Sized>(
    points: &PointCloud,
    kernel: &KernelSpec,
    center: &[f64],
    rho: f64,
    domain: &DecisionSet,
    maximizer: &MaximizerConfig,
    rng: &mut R,
) -> Vec<f64> {
    match domain {
        DecisionSet::Finite { arms } => {
            let mut best = center.to_vec();
            let mut best_w = kde_weight_unchecked(points, kernel, center);
            for a in arms {
                if sq_dist(a, center) < rho * rho {
                    let w = kde_weight_unchecked(points, kernel, a);
                    if w < best_w {
                        best = a.clone();
                        best_w = w;
                    }
                }
            }
            best
        }
        DecisionSet::Box { lower, upper } => {
            let ball = BallProjection { center, radius: rho * (1.0 - 1e-9), lower, upper };
            let acq = Projected { inner: DensityExplore::new(points, kernel), ball: &ball };
            let m = maximize(&acq, domain, maximizer, rng);
            ball.project(&m.point)
        }
    }
}

/// Radial projection into the open ball, followed by clipping to the box.
/// Clipping is non-expansive and the centre lies in the box, so the result
/// stays inside the ball.
struct BallProjection<'a> {
    center: &'a [f64],
    radius: f64,
    lower: &'a [f64],
    upper: &'a [f64],
}

impl BallProjection<'_> {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let dist = sq_dist(x, self.center).sqrt();
        let shrink = if dist > self.radius { self.radius / dist } else { 1.0 };
        x.iter()
            .zip(self.center)
            .zip(self.lower.iter().zip(self.upper))
            .map(|((v, c), (l, u))| (c + (v - c) * shrink).clamp(*l, *u))
            .collect()
    }
}

struct Projected<'a, A> {
    inner: A,
    ball: &'a BallProjection<'a>,
}

impl<A: Acquisition> Acquisition for Projected<'_, A> {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        self.inner.score(&self.ball.project(x))
    }

    fn infinite_rank(&self, x: &[f64]) -> f64 {
        self.inner.infinite_rank(&self.ball.project(x))
    }
}
