//! Zero-mean Gaussian-process posterior via Cholesky factorization.

use std::collections::HashMap;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{sq_dist, KernelSpec};
use crate::surrogate::Dataset;

/// Floor applied to every diagonal noise entry before factorization.
pub const JITTER: f64 = 1e-10;

/// Posterior of `f ~ GP(0, k)` given noisy observations.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    data: Dataset,
    kernel: KernelSpec,
    noise: Vec<f64>,
    /// Lower-triangular factor of `K + diag(noise)`, row-major `n × n`.
    chol: Vec<f64>,
    /// `(K + diag(noise))^{-1} y`.
    alpha: Vec<f64>,
}

impl GpPosterior {
    /// Homoscedastic fit with noise variance `noise_var` on every observation.
    pub fn fit(data: &Dataset, kernel: &KernelSpec, noise_var: f64) -> Result<Self> {
        if !(noise_var >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance must be >= 0, got {noise_var}")));
        }
        if noise_var == 0.0 {
            if let Some((i, j)) = first_duplicate(data) {
                return Err(Error::NotPositiveDefinite(format!(
                    "points {i} and {j} coincide and the noise variance is zero"
                )));
            }
        }
        Self::fit_with_noise(data, kernel, &vec![noise_var; data.len()])
    }

    /// Heteroscedastic fit with per-observation noise variances.
    pub fn fit_with_noise(data: &Dataset, kernel: &KernelSpec, noise: &[f64]) -> Result<Self> {
        if noise.len() != data.len() {
            return Err(Error::InvalidParameter(format!(
                "{} noise variances for {} observations",
                noise.len(),
                data.len()
            )));
        }
        let n = data.len();
        let effective: Vec<f64> = noise.iter().map(|&s| s.max(JITTER)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = kernel.weight_sq(sq_dist(data.point(i), data.point(j)));
                a[i * n + j] = k;
                a[j * n + i] = k;
            }
            a[i * n + i] += effective[i];
        }
        let chol = cholesky(&a, n)?;
        let mut alpha = data.values().to_vec();
        solve_lower(&chol, n, &mut alpha);
        solve_upper_transposed(&chol, n, &mut alpha);
        Ok(GpPosterior { data: data.clone(), kernel: *kernel, noise: effective, chol, alpha })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Diagonal noise actually used in the factorization (after the jitter floor).
    pub fn effective_noise(&self) -> &[f64] {
        &self.noise
    }

    /// Row-major Cholesky factor.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    fn cross_cov(&self, x: &[f64]) -> Vec<f64> {
        self.data.points().iter().map(|p| self.kernel.weight_sq(sq_dist(p, x))).collect()
    }

    /// Posterior mean in O(t).
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.data.dim(), x.len())?;
        Ok(self
            .data
            .points()
            .iter()
            .zip(&self.alpha)
            .map(|(p, a)| self.kernel.weight_sq(sq_dist(p, x)) * a)
            .sum())
    }

    /// Posterior `(μ(x), σ²(x))`; the variance costs one triangular solve.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.data.dim(), x.len())?;
        let n = self.len();
        let mut v = self.cross_cov(x);
        let mean = v.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        solve_lower(&self.chol, n, &mut v);
        let prior = self.kernel.weight_sq(0.0);
        let var = prior - v.iter().map(|z| z * z).sum::<f64>();
        Ok((mean, var.max(0.0)))
    }
}

fn first_duplicate(data: &Dataset) -> Option<(usize, usize)> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for (j, p) in data.points().iter().enumerate() {
        if let Some(&i) = seen.get(&coord_key(p)) {
            return Some((i, j));
        }
        seen.insert(coord_key(p), j);
    }
    None
}

/// Exact-equality key; `-0.0` and `0.0` collapse together.
fn coord_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Duplicate-free dataset plus per-point noise variances `σ² / ñ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactDataset {
    pub data: Dataset,
    pub noise: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Collapse exactly coincident points to one point carrying the class mean and
/// noise variance `σ² / ñ`. The GP posterior is unchanged by this transform.
pub fn merge_duplicates(data: &Dataset, noise_var: f64) -> Result<CompactDataset> {
    if !(noise_var > 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance must be > 0, got {noise_var}")));
    }
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for (i, (p, y)) in data.iter().enumerate() {
        let slot = *index.entry(coord_key(p)).or_insert_with(|| {
            reps.push(i);
            sums.push(0.0);
            counts.push(0);
            reps.len() - 1
        });
        sums[slot] += y;
        counts[slot] += 1;
    }
    let mut compact = Dataset::new(data.dim());
    let mut noise = Vec::with_capacity(reps.len());
    for ((&i, &s), &c) in reps.iter().zip(&sums).zip(&counts) {
        compact.push(data.point(i), s / c as f64)?;
        noise.push(noise_var / c as f64);
    }
    Ok(CompactDataset { data: compact, noise, counts })
}

fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(p, q)| p * q).sum();
            let s = a[i * n + j] - dot;
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite(format!("pivot {i} is {s:e}")));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L z = b` in place.
fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let dot: f64 = row.iter().zip(&b[..i]).map(|(p, q)| p * q).sum();
        b[i] = (b[i] - dot) / l[i * n + i];
    }
}

/// Solves `Lᵀ z = b` in place.
fn solve_upper_transposed(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;

    fn gauss(l: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::Gaussian, l).unwrap()
    }

    /// Brute-force posterior by explicit Gauss-Jordan inversion.
    fn direct(data: &Dataset, k: &KernelSpec, s2: f64, x: &[f64]) -> (f64, f64) {
        let n = data.len();
        let mut m = vec![vec![0.0; 2 * n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = k.eval(data.point(i), data.point(j)).unwrap() + if i == j { s2 } else { 0.0 };
            }
            m[i][n + i] = 1.0;
        }
        for c in 0..n {
            let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, p);
            let piv = m[c][c];
            for v in m[c].iter_mut() {
                *v /= piv;
            }
            for r in 0..n {
                if r != c {
                    let f = m[r][c];
                    for q in 0..2 * n {
                        m[r][q] -= f * m[c][q];
                    }
                }
            }
        }
        let kx: Vec<f64> = (0..n).map(|i| k.eval(data.point(i), x).unwrap()).collect();
        let mut mean = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                mean += kx[i] * m[i][n + j] * data.values()[j];
                quad += kx[i] * m[i][n + j] * kx[j];
            }
        }
        (mean, k.eval(x, x).unwrap() - quad)
    }

    #[test]
    fn single_observation() {
        let data = Dataset::from_pairs(1, &[[0.0]], &[1.0]).unwrap();
        let post = GpPosterior::fit(&data, &gauss(1.0), 1.0).unwrap();
        let (m, v) = post.predict(&[0.0]).unwrap();
        assert!((m - 0.5).abs() < 1e-15 && (v - 0.5).abs() < 1e-15);
        // Far outside the truncated support.
        let (m, v) = post.predict(&[100.0]).unwrap();
        assert_eq!((m, v), (0.0, 1.0));
    }

    #[test]
    fn empty_data_is_the_prior() {
        let post = GpPosterior::fit(&Dataset::new(2), &gauss(0.3), 0.1).unwrap();
        assert_eq!(post.predict(&[0.2, 0.4]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn matches_direct_inversion() {
        let data = Dataset::from_pairs(1, &[[0.0], [1.0]], &[1.0, 0.0]).unwrap();
        let k = gauss(1.0);
        let post = GpPosterior::fit(&data, &k, 0.1).unwrap();
        for x in [0.0, 0.3, 1.0, 2.5] {
            let (m, v) = post.predict(&[x]).unwrap();
            let (dm, dv) = direct(&data, &k, 0.1, &[x]);
            assert!((m - dm).abs() < 1e-12 && (v - dv).abs() < 1e-12);
        }
        // 2x2 closed form at x = 0.
        let e = (-0.5f64).exp();
        let det = 1.1 * 1.1 - e * e;
        let expected = (1.0 * 1.1 - e * e) / det;
        assert!((post.mean(&[0.0]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicates_with_noise() {
        let data = Dataset::from_pairs(1, &[[0.0], [0.0]], &[1.0, 3.0]).unwrap();
        let post = GpPosterior::fit(&data, &gauss(1.0), 1.0).unwrap();
        assert!((post.mean(&[0.0]).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!(matches!(GpPosterior::fit(&data, &gauss(1.0), 0.0), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn factor_reproduces_matrix() {
        let pts: Vec<[f64; 2]> = (0..12).map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let vals: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let data = Dataset::from_pairs(2, &pts, &vals).unwrap();
        let k = gauss(0.4);
        let post = GpPosterior::fit(&data, &k, 0.01).unwrap();
        let l = post.cholesky_factor();
        let n = 12;
        for i in 0..n {
            for j in 0..n {
                let llt: f64 = (0..n).map(|q| l[i * n + q] * l[j * n + q]).sum();
                let a = k.eval(&pts[i], &pts[j]).unwrap() + if i == j { 0.01 } else { 0.0 };
                assert!((llt - a).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn merge_examples() {
        let data = Dataset::from_pairs(1, &[[0.0], [0.0]], &[1.0, 3.0]).unwrap();
        let c = merge_duplicates(&data, 0.5).unwrap();
        assert_eq!(c.data, Dataset::from_pairs(1, &[[0.0]], &[2.0]).unwrap());
        assert_eq!(c.noise, vec![0.25]);

        let distinct = Dataset::from_pairs(1, &[[0.0], [1.0]], &[1.0, 3.0]).unwrap();
        let c = merge_duplicates(&distinct, 0.5).unwrap();
        assert_eq!(c.data, distinct);
        assert_eq!(c.noise, vec![0.5, 0.5]);

        let data = Dataset::from_pairs(1, &[[0.0], [0.0], [1.0]], &[1.0, 1.0, 5.0]).unwrap();
        let c = merge_duplicates(&data, 1.0).unwrap();
        assert_eq!(c.data, Dataset::from_pairs(1, &[[0.0], [1.0]], &[1.0, 5.0]).unwrap());
        assert_eq!(c.noise, vec![0.5, 1.0]);
        assert!(merge_duplicates(&data, 0.0).is_err());
    }

    #[test]
    fn variance_never_exceeds_prior() {
        let pts: Vec<[f64; 1]> = (0..20).map(|i| [(i as f64 * 0.731).fract()]).collect();
        let vals: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let data = Dataset::from_pairs(1, &pts, &vals).unwrap();
        let post = GpPosterior::fit(&data, &gauss(0.2), 1e-4).unwrap();
        for i in 0..200 {
            let (_, v) = post.predict(&[i as f64 / 199.0]).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let data = Dataset::from_pairs(1, &[[0.0]], &[1.0]).unwrap();
        let post = GpPosterior::fit(&data, &gauss(1.0), 1.0).unwrap();
        assert!(post.predict(&[0.0, 1.0]).is_err());
        assert!(GpPosterior::fit_with_noise(&data, &gauss(1.0), &[1.0, 2.0]).is_err());
    }
}
