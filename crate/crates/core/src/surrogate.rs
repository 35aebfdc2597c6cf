//! Nadaraya-Watson kernel regression with a nearest-neighbour fallback, and the
//! rule-of-thumb bandwidth schedules.

use crate::error::{check_dim, Error, Result};
use crate::kernel::{sq_dist, KernelFamily, KernelSpec};

/// Relative tolerance under which two distances count as tied nearest neighbours.
pub const NN_TIE_TOLERANCE: f64 = 1e-12;

/// An ordered list of `dim`-dimensional points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        PointCloud { dim, coords: Vec::new() }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut cloud = PointCloud::new(dim);
        for p in points {
            cloud.push(p.as_ref())?;
        }
        Ok(cloud)
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        self.coords.extend_from_slice(x);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// First `n` points.
    pub fn prefix(&self, n: usize) -> PointCloud {
        PointCloud { dim: self.dim, coords: self.coords[..n * self.dim].to_vec() }
    }

    /// Smallest Euclidean distance from `x` to the cloud, `d(x, X)`.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.iter().map(|p| sq_dist(p, x)).fold(f64::INFINITY, f64::min).sqrt()
    }
}

/// Observations `D_t = {(x_i, y_i)}` in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: PointCloud,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset { points: PointCloud::new(dim), values: Vec::new() }
    }

    pub fn from_pairs<P: AsRef<[f64]>>(dim: usize, points: &[P], values: &[f64]) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let mut data = Dataset::new(dim);
        for (p, &y) in points.iter().zip(values) {
            data.push(p.as_ref(), y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.points.push(x)?;
        self.values.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.iter().zip(self.values.iter().copied())
    }
}

/// Kernel-regression mean `m_t(x)`.
///
/// Falls back to the average value of the nearest queried points when no
/// observation lies inside the kernel support around `x`, which is also the
/// limit of the Gaussian estimator as the bandwidth goes to zero.
pub fn predict_kr(data: &Dataset, kernel: &KernelSpec, x: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(data.dim(), x.len())?;
    Ok(predict_kr_unchecked(data, kernel, x))
}

/// [`predict_kr`] without the emptiness and dimension checks.
pub(crate) fn predict_kr_unchecked(data: &Dataset, kernel: &KernelSpec, x: &[f64]) -> f64 {
    let inv_l2 = 1.0 / (kernel.bandwidth() * kernel.bandwidth());
    match kernel.family() {
        KernelFamily::Gaussian => {
            let min_d2 = data.points().iter().map(|p| sq_dist(p, x)).fold(f64::INFINITY, f64::min);
            let r = kernel.truncation_radius();
            if min_d2 * inv_l2 > r * r {
                return nearest_neighbour_mean(data, x, min_d2);
            }
            // Shift by the nearest squared distance so tiny bandwidths cannot
            // underflow numerator and denominator together.
            let (mut num, mut den) = (0.0, 0.0);
            for (p, y) in data.iter() {
                let d2 = sq_dist(p, x);
                if d2 * inv_l2 > r * r {
                    continue;
                }
                let w = (-0.5 * (d2 - min_d2) * inv_l2).exp();
                num += w * y;
                den += w;
            }
            num / den
        }
        _ => {
            let (mut num, mut den) = (0.0, 0.0);
            let mut min_d2 = f64::INFINITY;
            for (p, y) in data.iter() {
                let d2 = sq_dist(p, x);
                min_d2 = min_d2.min(d2);
                let w = kernel.profile_sq(d2 * inv_l2);
                if w > 0.0 {
                    num += w * y;
                    den += w;
                }
            }
            if den > 0.0 {
                num / den
            } else {
                nearest_neighbour_mean(data, x, min_d2)
            }
        }
    }
}

/// Mean of `y_i` over all `i` attaining `d(x, X_t)`, with a relative tie tolerance.
pub fn nearest_neighbour_mean(data: &Dataset, x: &[f64], min_d2: f64) -> f64 {
    let d_min = min_d2.sqrt();
    let cutoff = d_min + NN_TIE_TOLERANCE * (1.0 + d_min);
    let (mut sum, mut count) = (0.0, 0usize);
    for (p, y) in data.iter() {
        if sq_dist(p, x).sqrt() <= cutoff {
            sum += y;
            count += 1;
        }
    }
    sum / count as f64
}

/// Scott's rule, `scale · t^(-1/(d+4))`.
pub fn scott_bandwidth(t: usize, d: usize, scale: f64) -> f64 {
    debug_assert!(t >= 1 && d >= 1 && scale > 0.0);
    scale * (t as f64).powf(-1.0 / (d as f64 + 4.0))
}

/// Silverman's rule, `scale · (t (d+2) / 4)^(-1/(d+4))`.
pub fn silverman_bandwidth(t: usize, d: usize, scale: f64) -> f64 {
    debug_assert!(t >= 1 && d >= 1 && scale > 0.0);
    let d = d as f64;
    scale * (t as f64 * (d + 2.0) / 4.0).powf(-1.0 / (d + 4.0))
}
