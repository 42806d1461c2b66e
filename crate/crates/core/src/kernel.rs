//! Smoothing kernels `K_ε(u) = ε^{-d} K(u/ε)` and bandwidth rules.

use statrs::function::gamma::gamma_lr;

use crate::error::{FremError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `K(u) = Π_i ¾(1 - u_i²)₊`, supported on the unit cube.
    EpanechnikovProduct,
    /// Standard normal density restricted to the ball `|u|₂ ≤ R` and
    /// renormalized. Meant for diagnostics.
    GaussianTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    /// Support radius in unscaled units, measured in the max-norm.
    support_radius: f64,
    bandwidth: f64,
    norm: f64,
}

impl KernelSpec {
    pub fn epanechnikov(dim: usize, bandwidth: f64) -> Result<Self> {
        Self::build(KernelFamily::EpanechnikovProduct, dim, 1.0, bandwidth)
    }

    pub fn gaussian_truncated(dim: usize, bandwidth: f64, radius: f64) -> Result<Self> {
        Self::build(KernelFamily::GaussianTruncated, dim, radius, bandwidth)
    }

    fn build(family: KernelFamily, dim: usize, support_radius: f64, bandwidth: f64) -> Result<Self> {
        if dim == 0 {
            return Err(FremError::InvalidInput("kernel dimension must be positive".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(FremError::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(FremError::InvalidInput(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        let norm = match family {
            KernelFamily::EpanechnikovProduct => 0.75f64.powi(dim as i32),
            KernelFamily::GaussianTruncated => {
                let mass = gamma_lr(dim as f64 / 2.0, support_radius * support_radius / 2.0);
                (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0) / mass
            }
        };
        Ok(KernelSpec {
            family,
            dim,
            support_radius,
            bandwidth,
            norm,
        })
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Self::build(self.family, self.dim, self.support_radius, bandwidth)
    }

    /// Same family and bandwidth in a different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::build(self.family, dim, self.support_radius, self.bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        2
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Unscaled kernel `K(v)`.
    pub fn eval_unit(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        match self.family {
            KernelFamily::EpanechnikovProduct => {
                let mut prod = self.norm;
                for &vi in v {
                    let t = 1.0 - vi * vi;
                    if t <= 0.0 {
                        return 0.0;
                    }
                    prod *= t;
                }
                prod
            }
            KernelFamily::GaussianTruncated => {
                let r2: f64 = v.iter().map(|x| x * x).sum();
                if r2 > self.support_radius * self.support_radius {
                    0.0
                } else {
                    self.norm * (-0.5 * r2).exp()
                }
            }
        }
    }

    /// `K_ε(u) = ε^{-d} K(u/ε)`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        let inv = 1.0 / self.bandwidth;
        match self.family {
            KernelFamily::EpanechnikovProduct => {
                let mut prod = self.norm * inv.powi(self.dim as i32);
                for &ui in u {
                    let v = ui * inv;
                    let t = 1.0 - v * v;
                    if t <= 0.0 {
                        return 0.0;
                    }
                    prod *= t;
                }
                prod
            }
            KernelFamily::GaussianTruncated => {
                let scaled: Vec<f64> = u.iter().map(|x| x * inv).collect();
                inv.powi(self.dim as i32) * self.eval_unit(&scaled)
            }
        }
    }

    /// `K_ε(a - b)` without allocating.
    #[inline]
    pub fn eval_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        let inv = 1.0 / self.bandwidth;
        match self.family {
            KernelFamily::EpanechnikovProduct => {
                let mut prod = self.norm * inv.powi(self.dim as i32);
                for (ai, bi) in a.iter().zip(b) {
                    let v = (ai - bi) * inv;
                    let t = 1.0 - v * v;
                    if t <= 0.0 {
                        return 0.0;
                    }
                    prod *= t;
                }
                prod
            }
            KernelFamily::GaussianTruncated => {
                let r2: f64 = a.iter().zip(b).map(|(x, y)| ((x - y) * inv).powi(2)).sum();
                if r2 > self.support_radius * self.support_radius {
                    0.0
                } else {
                    inv.powi(self.dim as i32) * self.norm * (-0.5 * r2).exp()
                }
            }
        }
    }

    /// Max-norm distance beyond which `K_ε` vanishes.
    pub fn reach(&self) -> f64 {
        self.support_radius * self.bandwidth
    }
}

/// Bandwidth `c·M^{-1/d}` for `d ≤ 4` and `c·M^{-2/(4+d)}` for `d > 4`.
pub fn default_bandwidth(samples: usize, dim: usize, constant: f64) -> Result<f64> {
    if samples < 2 {
        return Err(FremError::InvalidInput("bandwidth rule needs at least two samples".into()));
    }
    if dim == 0 {
        return Err(FremError::InvalidInput("dimension must be positive".into()));
    }
    let m = samples as f64;
    let rate = if dim <= 4 {
        -1.0 / dim as f64
    } else {
        -2.0 / (4.0 + dim as f64)
    };
    Ok(constant * m.powf(rate))
}
