//! Unnormalized kernel density `W_t`, the density-based exploration term
//! `σ̂_t = W_t^(-1/2)` and fill-distance measurement.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{sq_dist, KernelSpec};
use crate::maximizer::DecisionSet;
use crate::surrogate::PointCloud;

/// Number of random probes used to approximate fill distance when a full grid is too large.
pub const RANDOM_PROBES: usize = 4096;
/// Largest probe grid that is enumerated exhaustively.
pub const MAX_GRID_PROBES: usize = 1 << 20;
const PROBE_SEED: u64 = 0x5eed_f111;

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinity)
    }

    /// Materialize as a float, mapping `+∞` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinity => f64::INFINITY,
        }
    }

    /// `c · self` for `c ≥ 0`, with `0 · ∞ = 0`.
    pub fn scale(self, c: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(c * v),
            ExtendedReal::Infinity if c > 0.0 => ExtendedReal::Infinity,
            ExtendedReal::Infinity => ExtendedReal::Finite(0.0),
        }
    }

    pub fn add(self, v: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(a) => ExtendedReal::Finite(a + v),
            ExtendedReal::Infinity => ExtendedReal::Infinity,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinity) => Some(Ordering::Less),
            (Infinity, Finite(_)) => Some(Ordering::Greater),
            (Infinity, Infinity) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}

/// `W(x; X) = Σ_i k(x, x_i)`; zero for an empty cloud.
pub fn kde_weight(points: &PointCloud, kernel: &KernelSpec, x: &[f64]) -> Result<f64> {
    check_dim(points.dim(), x.len())?;
    Ok(kde_weight_unchecked(points, kernel, x))
}

#[inline]
pub(crate) fn kde_weight_unchecked(points: &PointCloud, kernel: &KernelSpec, x: &[f64]) -> f64 {
    points.iter().map(|p| kernel.weight_sq(sq_dist(p, x))).sum()
}

/// `W^(-1/2)`, or `+∞` when `W == 0`.
pub fn exploration_sigma(w: f64) -> ExtendedReal {
    debug_assert!(w >= 0.0);
    if w > 0.0 {
        ExtendedReal::Finite(1.0 / w.sqrt())
    } else {
        ExtendedReal::Infinity
    }
}

/// Probes per axis used by [`fill_distance`] when the caller has no preference.
/// Zero selects random probing.
pub fn default_probes_per_axis(dim: usize) -> usize {
    match dim {
        1 => 1025,
        2 => 65,
        _ => 0,
    }
}

/// Fill distance `sup_{x ∈ X} d(x, points)`.
///
/// Finite domains are enumerated exactly. Boxes are probed on a uniform grid
/// with `probes_per_axis` points per axis (endpoints included), or with
/// [`RANDOM_PROBES`] seeded uniform probes plus the box corners when the grid
/// would exceed [`MAX_GRID_PROBES`] or `probes_per_axis == 0`. Box results
/// are therefore lower bounds.
pub fn fill_distance(domain: &DecisionSet, points: &PointCloud, probes_per_axis: usize) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(domain.dim(), points.dim())?;
    let farthest = |probe: &[f64]| points.distance_to(probe);

    match domain {
        DecisionSet::Finite { arms } => Ok(arms.iter().map(|a| farthest(a)).fold(0.0, f64::max)),
        DecisionSet::Box { lower, upper } => {
            let d = lower.len();
            let grid_total = (probes_per_axis as f64).powi(d as i32);
            let mut probe = vec![0.0; d];
            let mut h: f64 = 0.0;
            if probes_per_axis >= 2 && grid_total <= MAX_GRID_PROBES as f64 {
                let n = probes_per_axis;
                let mut idx = vec![0usize; d];
                loop {
                    for k in 0..d {
                        let frac = idx[k] as f64 / (n - 1) as f64;
                        probe[k] = lower[k] + frac * (upper[k] - lower[k]);
                    }
                    h = h.max(farthest(&probe));
                    // Odometer increment.
                    let mut k = 0;
                    while k < d {
                        idx[k] += 1;
                        if idx[k] < n {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == d {
                        break;
                    }
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
                for _ in 0..RANDOM_PROBES {
                    for k in 0..d {
                        probe[k] = lower[k] + rng.random::<f64>() * (upper[k] - lower[k]);
                    }
                    h = h.max(farthest(&probe));
                }
                if d <= 16 {
                    for mask in 0u32..(1 << d) {
                        for k in 0..d {
                            probe[k] = if mask & (1 << k) != 0 { upper[k] } else { lower[k] };
                        }
                        h = h.max(farthest(&probe));
                    }
                }
            }
            Ok(h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;
    use proptest::prelude::*;

    fn cloud1(xs: &[f64]) -> PointCloud {
        let pts: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        PointCloud::from_points(1, &pts).unwrap()
    }

    fn unit(d: usize) -> DecisionSet {
        DecisionSet::unit_box(d)
    }

    #[test]
    fn kde_examples() {
        let g = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
        assert_eq!(kde_weight(&cloud1(&[0.4, 0.4, 0.4]), &g, &[0.4]).unwrap(), 3.0);
        let e = KernelSpec::new(KernelFamily::Epanechnikov, 1.0).unwrap();
        assert!((kde_weight(&cloud1(&[0.0, 1.0]), &e, &[0.5]).unwrap() - 1.5).abs() < 1e-15);
        let u = KernelSpec::new(KernelFamily::Uniform, 0.1).unwrap();
        assert_eq!(kde_weight(&cloud1(&[0.0]), &u, &[0.5]).unwrap(), 0.0);
        assert_eq!(kde_weight(&cloud1(&[]), &u, &[0.5]).unwrap(), 0.0);
        assert!(kde_weight(&cloud1(&[0.0]), &u, &[0.5, 0.1]).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(exploration_sigma(4.0), ExtendedReal::Finite(0.5));
        assert_eq!(exploration_sigma(0.0), ExtendedReal::Infinity);
        assert_eq!(exploration_sigma(1.0), ExtendedReal::Finite(1.0));
    }

    #[test]
    fn extended_arithmetic_and_order() {
        use ExtendedReal::*;
        assert!(Infinity > Finite(1e300));
        assert!(Finite(-1.0) < Finite(0.0));
        assert_eq!(Infinity.scale(0.0), Finite(0.0));
        assert_eq!(Infinity.scale(2.0), Infinity);
        assert_eq!(Infinity.add(-3.0), Infinity);
        assert_eq!(Finite(2.0).scale(3.0).add(1.0), Finite(7.0));
        assert_eq!(Infinity.to_f64(), f64::INFINITY);
    }

    #[test]
    fn fill_examples() {
        let h = fill_distance(&unit(1), &cloud1(&[0.0, 1.0]), 101).unwrap();
        assert!((h - 0.5).abs() < 1e-12);
        let h = fill_distance(&unit(1), &cloud1(&[0.25, 0.75]), 101).unwrap();
        assert!((h - 0.25).abs() < 1e-12);
        let c = PointCloud::from_points(2, &[[0.5, 0.5]]).unwrap();
        let h = fill_distance(&unit(2), &c, default_probes_per_axis(2)).unwrap();
        assert!((h - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fill_random_probes_include_corners() {
        let c = PointCloud::from_points(3, &[[0.5, 0.5, 0.5]]).unwrap();
        let h = fill_distance(&unit(3), &c, 0).unwrap();
        assert!((h - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fill_finite_is_exact() {
        let dom = DecisionSet::finite(vec![vec![0.0], vec![0.3], vec![1.0]]).unwrap();
        let h = fill_distance(&dom, &cloud1(&[0.0]), 0).unwrap();
        assert_eq!(h, 1.0);
        assert!(fill_distance(&dom, &cloud1(&[]), 0).is_err());
    }

    proptest! {
        #[test]
        fn fill_is_monotone_in_prefix(xs in prop::collection::vec(prop::array::uniform2(0.0f64..1.0), 2..20)) {
            let cloud = PointCloud::from_points(2, &xs).unwrap();
            let mut prev = f64::INFINITY;
            for n in 1..=xs.len() {
                let h = fill_distance(&unit(2), &cloud.prefix(n), 33).unwrap();
                prop_assert!(h <= prev + 1e-15);
                prev = h;
            }
        }

        #[test]
        fn kde_additive_and_peaked(
            a in prop::collection::vec(prop::array::uniform2(0.0f64..1.0), 1..10),
            b in prop::collection::vec(prop::array::uniform2(0.0f64..1.0), 0..10),
            x in prop::array::uniform2(0.0f64..1.0),
            l in 0.01f64..1.0,
        ) {
            for fam in [KernelFamily::Gaussian, KernelFamily::Triangular, KernelFamily::Epanechnikov, KernelFamily::Uniform] {
                let k = KernelSpec::new(fam, l).unwrap();
                let ca = PointCloud::from_points(2, &a).unwrap();
                let cb = PointCloud::from_points(2, &b).unwrap();
                let mut all = a.clone();
                all.extend(b.iter().cloned());
                let cab = PointCloud::from_points(2, &all).unwrap();
                let lhs = kde_weight(&cab, &k, &x).unwrap();
                let rhs = kde_weight(&ca, &k, &x).unwrap() + kde_weight(&cb, &k, &x).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs));
                prop_assert!(kde_weight(&ca, &k, &a[0]).unwrap() >= k.constants().psi0);
            }
        }
    }
}
