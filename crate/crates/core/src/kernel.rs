//! Stationary, isotropic kernels `k(x, x') = Ψ((x - x') / ℓ)` with compact support.
//!
//! All four families peak at `Ψ(0) = 1` and vanish outside a ball of radius
//! `R_Ψ` in scaled units. The Gaussian profile is truncated at a configurable
//! radius so that it has compact support as well.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Default truncation radius of the Gaussian profile, in units of `ℓ`.
pub const DEFAULT_TRUNCATION_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Triangular,
    Epanechnikov,
    Uniform,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Triangular => "triangular",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Uniform => "uniform",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "triangular" => Ok(KernelFamily::Triangular),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            "uniform" => Ok(KernelFamily::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Constants of a kernel profile: `sup Ψ`, support radius and peak value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    pub m_psi: f64,
    pub r_psi: f64,
    pub psi0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    truncation_radius: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        Self::with_truncation(family, bandwidth, DEFAULT_TRUNCATION_RADIUS)
    }

    /// `truncation_radius` only affects the Gaussian family.
    pub fn with_truncation(family: KernelFamily, bandwidth: f64, truncation_radius: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if !(truncation_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius must be positive, got {truncation_radius}"
            )));
        }
        Ok(KernelSpec { family, bandwidth, truncation_radius })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// Same family and truncation, different bandwidth.
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Self::with_truncation(self.family, bandwidth, self.truncation_radius)
    }

    pub fn constants(&self) -> KernelConstants {
        let r_psi = match self.family {
            KernelFamily::Gaussian => self.truncation_radius,
            _ => 1.0,
        };
        KernelConstants { m_psi: 1.0, r_psi, psi0: 1.0 }
    }

    /// Support radius in domain units, `R_Ψ · ℓ`.
    pub fn support_radius(&self) -> f64 {
        self.constants().r_psi * self.bandwidth
    }

    /// Profile `Ψ` as a function of the squared scaled distance `‖u‖²`.
    #[inline]
    pub fn profile_sq(&self, u2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                if u2 > self.truncation_radius * self.truncation_radius {
                    0.0
                } else {
                    (-0.5 * u2).exp()
                }
            }
            KernelFamily::Triangular => (1.0 - u2.sqrt()).max(0.0),
            KernelFamily::Epanechnikov => (1.0 - u2).max(0.0),
            KernelFamily::Uniform => {
                if u2 <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Kernel weight from a squared Euclidean distance in domain units.
    #[inline]
    pub fn weight_sq(&self, dist2: f64) -> f64 {
        self.profile_sq(dist2 / (self.bandwidth * self.bandwidth))
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.weight_sq(sq_dist(x, y)))
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}
