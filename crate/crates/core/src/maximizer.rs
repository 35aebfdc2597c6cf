//! Acquisition maximization over a decision set.
//!
//! Finite sets are enumerated. Boxes use a multi-start coordinate pattern
//! search: start points come from a Latin hypercube over the box and each one
//! is refined with shrinking axis-aligned steps under a per-start evaluation
//! budget.

use std::collections::HashSet;

use rand::Rng;

use crate::bench::lhs_sample;
use crate::error::{check_dim, Error, Result};
use crate::exploration::ExtendedReal;

/// Initial pattern step as a fraction of each side length.
const INITIAL_STEP: f64 = 0.2;
/// Search stops once every step is below this fraction of its side length.
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Finite { arms: Vec<Vec<f64>> },
}

impl DecisionSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidParameter("box must have at least one dimension".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter(format!("box needs lower < upper, got {lower:?} / {upper:?}")));
        }
        Ok(DecisionSet::Box { lower, upper })
    }

    pub fn unit_box(dim: usize) -> Self {
        DecisionSet::Box { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    /// Finite arm set; exact duplicates are dropped keeping first occurrence.
    pub fn finite(arms: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = arms.first() else {
            return Err(Error::InvalidParameter("finite decision set needs at least one arm".into()));
        };
        let dim = first.len();
        let mut seen = HashSet::new();
        let mut unique = Vec::with_capacity(arms.len());
        for a in arms {
            check_dim(dim, a.len())?;
            let key: Vec<u64> = a.iter().map(|v| (v + 0.0).to_bits()).collect();
            if seen.insert(key) {
                unique.push(a);
            }
        }
        Ok(DecisionSet::Finite { arms: unique })
    }

    pub fn dim(&self) -> usize {
        match self {
            DecisionSet::Box { lower, .. } => lower.len(),
            DecisionSet::Finite { arms } => arms[0].len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DecisionSet::Box { lower, upper } => {
                x.len() == lower.len() && x.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
            }
            DecisionSet::Finite { arms } => arms.iter().any(|a| a.as_slice() == x),
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, DecisionSet::Box { .. })
    }
}

/// A score to maximize. Scores may be `+∞`; ties among infinite scores are
/// broken by [`Acquisition::infinite_rank`] (larger wins) on boxes.
pub trait Acquisition {
    fn score(&self, x: &[f64]) -> ExtendedReal;

    fn infinite_rank(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

impl<F: Fn(&[f64]) -> f64> Acquisition for F {
    fn score(&self, x: &[f64]) -> ExtendedReal {
        ExtendedReal::Finite(self(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaximizerConfig {
    /// Number of multi-start points; `None` means `10 · d`.
    pub n_starts: Option<usize>,
    /// Score evaluations allowed per start.
    pub local_budget: usize,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        MaximizerConfig { n_starts: None, local_budget: 50 }
    }
}

impl MaximizerConfig {
    pub fn starts_for(&self, dim: usize) -> usize {
        self.n_starts.unwrap_or(10 * dim).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub point: Vec<f64>,
    pub value: ExtendedReal,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Key {
    value: ExtendedReal,
    rank: f64,
}

impl Key {
    fn of<A: Acquisition + ?Sized>(acq: &A, x: &[f64]) -> Key {
        let value = match acq.score(x) {
            ExtendedReal::Finite(v) if v.is_nan() => ExtendedReal::Finite(f64::NEG_INFINITY),
            v => v,
        };
        let rank = if value.is_infinite() { acq.infinite_rank(x) } else { 0.0 };
        Key { value, rank }
    }

    fn beats(&self, other: &Key) -> bool {
        match (self.value, other.value) {
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => self.rank > other.rank,
            (a, b) => a > b,
        }
    }
}

pub fn maximize<A, R>(acq: &A, domain: &DecisionSet, config: &MaximizerConfig, rng: &mut R) -> Maximum
where
    A: Acquisition + ?Sized,
    R: Rng + ?Sized,
{
    match domain {
        DecisionSet::Finite { arms } => {
            let mut best = 0;
            let mut best_key = Key::of(acq, &arms[0]);
            for (i, a) in arms.iter().enumerate().skip(1) {
                let key = Key::of(acq, a);
                if key.value > best_key.value {
                    best = i;
                    best_key = key;
                }
            }
            Maximum { point: arms[best].clone(), value: best_key.value, evaluations: arms.len() }
        }
        DecisionSet::Box { lower, upper } => {
            let starts = lhs_sample(lower, upper, config.starts_for(lower.len()), rng);
            let mut best: Option<(Vec<f64>, Key)> = None;
            let mut evaluations = 0;
            for start in starts {
                let (x, key, used) = pattern_search(acq, lower, upper, start, config.local_budget.max(1));
                evaluations += used;
                if best.as_ref().map_or(true, |(_, b)| key.beats(b)) {
                    best = Some((x, key));
                }
            }
            let (point, key) = best.expect("at least one start");
            Maximum { point, value: key.value, evaluations }
        }
    }
}

/// Coordinate pattern search from `start` within the box, using at most
/// `budget` score evaluations. Returns the refined point, its score and the
/// number of evaluations spent.
pub fn local_search<A: Acquisition + ?Sized>(
    acq: &A,
    lower: &[f64],
    upper: &[f64],
    start: Vec<f64>,
    budget: usize,
) -> (Vec<f64>, ExtendedReal, usize) {
    let (x, key, used) = pattern_search(acq, lower, upper, start, budget.max(1));
    (x, key.value, used)
}

fn pattern_search<A: Acquisition + ?Sized>(
    acq: &A,
    lower: &[f64],
    upper: &[f64],
    mut x: Vec<f64>,
    budget: usize,
) -> (Vec<f64>, Key, usize) {
    for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper)) {
        *v = v.clamp(*l, *u);
    }
    let mut fx = Key::of(acq, &x);
    let mut used = 1;
    let mut step: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| INITIAL_STEP * (u - l)).collect();
    let mut cand = x.clone();

    'outer: while used < budget {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                if used >= budget {
                    break 'outer;
                }
                let moved = (x[k] + dir * step[k]).clamp(lower[k], upper[k]);
                if moved == x[k] {
                    continue;
                }
                cand.copy_from_slice(&x);
                cand[k] = moved;
                let fc = Key::of(acq, &cand);
                used += 1;
                if fc.beats(&fx) {
                    x.copy_from_slice(&cand);
                    fx = fc;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            if step.iter().zip(lower.iter().zip(upper)).all(|(s, (l, u))| *s < MIN_STEP * (u - l)) {
                break;
            }
        }
    }
    (x, fx, used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> MaximizerConfig {
        MaximizerConfig { n_starts: Some(n), local_budget: 50 }
    }

    #[test]
    fn finite_enumeration() {
        let dom = DecisionSet::finite(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = maximize(&|x: &[f64]| -(x[0] - 1.0).powi(2), &dom, &cfg(1), &mut rng);
        assert_eq!(m.point, vec![1.0]);
        assert_eq!(m.value, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn finite_ties_pick_lowest_index() {
        let dom = DecisionSet::finite(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = maximize(&|x: &[f64]| if x[0] > 0.5 { 1.0 } else { 0.0 }, &dom, &cfg(1), &mut rng);
        assert_eq!(m.point, vec![1.0]);
    }

    #[test]
    fn monotone_score_reaches_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = maximize(&|x: &[f64]| x[0], &DecisionSet::unit_box(1), &cfg(10), &mut rng);
        assert!((m.point[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn interior_quadratic() {
        // Dense-grid oracle over 10^4 points locates the maximizer at 0.3.
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2);
        let grid_best = (0..10_000)
            .map(|i| i as f64 / 9_999.0)
            .max_by(|a, b| f(&[*a]).total_cmp(&f(&[*b])))
            .unwrap();
        assert!((grid_best - 0.3).abs() < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = maximize(&f, &DecisionSet::unit_box(1), &cfg(8), &mut rng);
        assert!((m.point[0] - 0.3).abs() < 1e-3);
    }

    #[test]
    fn infinite_scores_rank_by_secondary_key() {
        struct Holes;
        impl Acquisition for Holes {
            fn score(&self, x: &[f64]) -> ExtendedReal {
                if x[0] > 0.5 {
                    ExtendedReal::Infinity
                } else {
                    ExtendedReal::Finite(10.0)
                }
            }
            fn infinite_rank(&self, x: &[f64]) -> f64 {
                x[0]
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = maximize(&Holes, &DecisionSet::unit_box(1), &cfg(4), &mut rng);
        assert!(m.value.is_infinite());
        assert!(m.point[0] > 0.999);
    }

    #[test]
    fn decision_set_validation() {
        assert!(DecisionSet::new_box(vec![0.0], vec![0.0]).is_err());
        assert!(DecisionSet::new_box(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(DecisionSet::finite(vec![]).is_err());
        assert!(DecisionSet::finite(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        let d = DecisionSet::finite(vec![vec![0.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(d, DecisionSet::Finite { arms: vec![vec![0.0], vec![1.0]] });
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn inside_domain_never_worse_than_starts_and_deterministic(
            seed in 0u64..1000,
            c in prop::array::uniform2(-1.0f64..2.0),
            w in 1.0f64..40.0,
        ) {
            let dom = DecisionSet::new_box(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
            let f = move |x: &[f64]| (w * x[0]).sin() * (x[1] - c[1]).cos() - (x[0] - c[0]).abs();
            let config = cfg(6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = maximize(&f, &dom, &config, &mut rng);
            prop_assert!(dom.contains(&m.point));
            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            prop_assert_eq!(&m, &maximize(&f, &dom, &config, &mut rng2));
            let mut rng3 = ChaCha8Rng::seed_from_u64(seed);
            let DecisionSet::Box { lower, upper } = &dom else { unreachable!() };
            for s in lhs_sample(lower, upper, 6, &mut rng3) {
                prop_assert!(m.value.to_f64() >= f(&s));
            }
        }

        #[test]
        fn finite_matches_brute_force(vals in prop::collection::vec(-5.0f64..5.0, 1..30)) {
            let arms: Vec<Vec<f64>> = (0..vals.len()).map(|i| vec![i as f64]).collect();
            let dom = DecisionSet::finite(arms).unwrap();
            let v2 = vals.clone();
            let f = move |x: &[f64]| v2[x[0] as usize];
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let m = maximize(&f, &dom, &cfg(1), &mut rng);
            let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let idx = vals.iter().position(|&v| v == best).unwrap();
            prop_assert_eq!(m.point[0] as usize, idx);
            prop_assert_eq!(m.value, ExtendedReal::Finite(best));
        }
    }
}
