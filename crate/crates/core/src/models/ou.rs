//! Discretized Ornstein-Uhlenbeck chain `X_{n+1} = X_n + λ X_n Δt + ΔW`.

use std::f64::consts::PI;

use crate::chain::{check_param_len, ChainModel, ObservationSet};
use crate::em::SuffStatModel;
use crate::error::{FremError, Result};
use crate::optimize::maximize_scalar;
use crate::reverse::{NormalizedReverse, ReverseChain};
use crate::rng::{std_normal, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuModel {
    dt: f64,
}

impl OuModel {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FremError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        Ok(OuModel { dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

impl ChainModel for OuModel {
    fn name(&self) -> &str {
        "ou"
    }

    fn dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        check_param_len(self, theta)?;
        if !theta[0].is_finite() {
            return Err(FremError::ParameterDomain {
                theta: theta.to_vec(),
                reason: "λ must be finite".into(),
            });
        }
        Ok(())
    }

    fn step_logdensity(&self, _k: usize, theta: &[f64], x: &[f64], y: &[f64]) -> f64 {
        normal_logpdf(y[0], x[0] * (1.0 + theta[0] * self.dt), self.dt)
    }

    fn step_sample(&self, _k: usize, theta: &[f64], x: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        out[0] = x[0] * (1.0 + theta[0] * self.dt) + self.dt.sqrt() * std_normal(rng);
    }

    /// Exact normalization: `q(y, ·) = N(y/a, Δt/a²)` and `ψ ≡ 1/a` with
    /// `a = 1 + λΔt`.
    fn reverse<'a>(&'a self, theta: &[f64], horizon: usize) -> Result<Box<dyn ReverseChain + 'a>> {
        self.check_params(theta)?;
        let a = 1.0 + theta[0] * self.dt;
        if !(a > 0.0) {
            return Err(FremError::ParameterDomain {
                theta: theta.to_vec(),
                reason: "the exact reverse chain needs 1 + λΔt > 0".into(),
            });
        }
        let sd = self.dt.sqrt() / a;
        let log_norm = -a.ln();
        Ok(Box::new(NormalizedReverse::new(
            self,
            theta,
            horizon,
            move |_m: usize, y: &[f64], rng: &mut StreamRng, out: &mut [f64]| {
                out[0] = y[0] / a + sd * std_normal(rng);
            },
            move |_m: usize, _y: &[f64]| log_norm,
        )))
    }
}

/// Statistics `S_1 = Σ x_{k-1}(x_k - x_{k-1})`, `S_2 = Σ x_{k-1}²` and the
/// θ-free part of the log-likelihood `S_3`, with `ψ(λ) = (λ, -λ²Δt/2, 1)`
/// and `φ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuStats {
    dt: f64,
    log_norm: f64,
}

pub fn ou_suffstats(dt: f64) -> Result<OuStats> {
    OuModel::new(dt)?;
    Ok(OuStats {
        dt,
        log_norm: -0.5 * (2.0 * PI * dt).ln(),
    })
}

impl SuffStatModel for OuStats {
    fn stat_dim(&self) -> usize {
        3
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn phi(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn psi(&self, theta: &[f64], out: &mut [f64]) {
        let l = theta[0];
        out[0] = l;
        out[1] = -0.5 * l * l * self.dt;
        out[2] = 1.0;
    }

    #[inline]
    fn add_step_stats(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let (x, dx) = (x[0], y[0] - x[0]);
        out[0] += x * dx;
        out[1] += x * x;
        out[2] += self.log_norm - dx * dx / (2.0 * self.dt);
    }

    fn closed_form_maximizer(&self, z: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(if z[1] > 0.0 && z[1].is_finite() && z[0].is_finite() {
            Ok(vec![z[0] / (self.dt * z[1])])
        } else {
            Err(FremError::MStepFailure(format!("Σ x² estimate {} is not positive", z[1])))
        })
    }

    fn phi_gradient(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    fn psi_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        vec![1.0, -theta[0] * self.dt, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuMle {
    pub lambda: f64,
    pub loglik: f64,
    /// Set when the data carry no information on λ (all states zero).
    pub flat: bool,
}

/// Exact log-likelihood of discretely observed OU data. Over a gap of `g`
/// steps, `X_{n+g} | X_n = x ~ N(x a^g, Δt Σ_{i<g} a^{2i})` with `a = 1 + λΔt`.
pub fn ou_incomplete_loglik(obs: &ObservationSet, dt: f64, lambda: f64) -> Result<f64> {
    if obs.dim() != 1 || obs.has_mask() {
        return Err(FremError::InvalidInput("OU likelihood needs fully observed 1-D data".into()));
    }
    let a = 1.0 + lambda * dt;
    let t = obs.times();
    let mut total = 0.0;
    for i in 1..obs.len() {
        let g = (t[i] - t[i - 1]) as i32;
        let a2 = a * a;
        let var = if (a2 - 1.0).abs() < 1e-12 {
            dt * g as f64
        } else {
            dt * (a2.powi(g) - 1.0) / (a2 - 1.0)
        };
        total += normal_logpdf(obs.value(i)[0], obs.value(i - 1)[0] * a.powi(g), var);
    }
    Ok(total)
}

/// Maximizer of [`ou_incomplete_loglik`] over `a = 1 + λΔt ∈ (0, 5]`.
pub fn ou_exact_mle(obs: &ObservationSet, dt: f64) -> Result<OuMle> {
    OuModel::new(dt)?;
    ou_incomplete_loglik(obs, dt, 0.0)?;
    if obs.len() < 2 {
        return Err(FremError::InvalidInput("need at least two observations".into()));
    }
    let flat = (0..obs.len() - 1).all(|i| obs.value(i)[0] == 0.0);
    if flat {
        return Ok(OuMle {
            lambda: 0.0,
            loglik: ou_incomplete_loglik(obs, dt, 0.0)?,
            flat: true,
        });
    }
    let ll = |a: f64| ou_incomplete_loglik(obs, dt, (a - 1.0) / dt).unwrap_or(f64::NEG_INFINITY);
    let (a, v) = maximize_scalar(ll, 1e-6, 5.0, 5000);
    Ok(OuMle {
        lambda: (a - 1.0) / dt,
        loglik: v,
        flat: false,
    })
}
