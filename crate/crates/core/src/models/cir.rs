//! Euler chain `X_{n+1} = X_n + λ(θ - X_n)Δt + σ|X_n|^γ ΔW` with known
//! exponent γ. Parameters are ordered `(σ, λ, θ)`.

use std::f64::consts::PI;

use crate::chain::{check_param_len, ChainModel};
use crate::em::SuffStatModel;
use crate::error::{FremError, Result};
use crate::reverse::ReverseChain;
use crate::rng::{std_normal, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirModel {
    dt: f64,
    gamma: f64,
}

impl CirModel {
    pub fn new(dt: f64, gamma: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FremError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(FremError::InvalidInput(format!("exponent γ must be nonnegative, got {gamma}")));
        }
        Ok(CirModel { dt, gamma })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `|x|^γ`, with `0^0 = 1`.
#[inline]
fn abs_pow(x: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        x.abs().powf(gamma)
    }
}

#[inline]
fn gaussian_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    -0.5 * (2.0 * PI).ln() - sd.ln() - (x - mean) * (x - mean) / (2.0 * sd * sd)
}

impl ChainModel for CirModel {
    fn name(&self) -> &str {
        "cir"
    }

    fn dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        check_param_len(self, theta)?;
        if !(theta[0] > 0.0) || theta.iter().any(|v| !v.is_finite()) {
            return Err(FremError::ParameterDomain {
                theta: theta.to_vec(),
                reason: "σ must be positive and all parameters finite".into(),
            });
        }
        Ok(())
    }

    fn step_logdensity(&self, _k: usize, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let (sigma, lambda, theta) = (p[0], p[1], p[2]);
        let x = x[0];
        let sd = sigma * abs_pow(x, self.gamma) * self.dt.sqrt();
        gaussian_logpdf(y[0], x + lambda * (theta - x) * self.dt, sd)
    }

    fn step_sample(&self, _k: usize, p: &[f64], x: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        let (sigma, lambda, theta) = (p[0], p[1], p[2]);
        let x = x[0];
        out[0] = x + lambda * (theta - x) * self.dt + sigma * abs_pow(x, self.gamma) * self.dt.sqrt() * std_normal(rng);
    }

    fn reverse<'a>(&'a self, theta: &[f64], horizon: usize) -> Result<Box<dyn ReverseChain + 'a>> {
        Ok(Box::new(cir_reverse(self.dt, self.gamma, theta, horizon)?))
    }
}

/// Drift-flipped reverse chain `Y_{n+1} = Y_n - λ(θ - Y_n)Δt + σ|Y_n|^γ ΔW̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirReverse {
    dt: f64,
    gamma: f64,
    sigma: f64,
    lambda: f64,
    theta: f64,
    horizon: usize,
}

pub fn cir_reverse(dt: f64, gamma: f64, params: &[f64], horizon: usize) -> Result<CirReverse> {
    CirModel::new(dt, gamma)?.check_params(params)?;
    Ok(CirReverse {
        dt,
        gamma,
        sigma: params[0],
        lambda: params[1],
        theta: params[2],
        horizon,
    })
}

impl ReverseChain for CirReverse {
    fn dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn step_sample(&self, _m: usize, y: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        let y = y[0];
        out[0] = y - self.lambda * (self.theta - y) * self.dt
            + self.sigma * abs_pow(y, self.gamma) * self.dt.sqrt() * std_normal(rng);
    }

    fn step_logdensity(&self, _m: usize, y: &[f64], z: &[f64]) -> f64 {
        let y = y[0];
        let sd = self.sigma * abs_pow(y, self.gamma) * self.dt.sqrt();
        gaussian_logpdf(z[0], y - self.lambda * (self.theta - y) * self.dt, sd)
    }

    /// `log ψ(y, z) = γ log|y/z| - [(y - z - λ(θ - z)Δt)²/|z|^{2γ}
    /// - (z - y + λ(θ - y)Δt)²/|y|^{2γ}] / (2σ²Δt)`.
    fn log_psi(&self, _m: usize, y: &[f64], z: &[f64]) -> f64 {
        let (y, z) = (y[0], z[0]);
        let (l, th, dt) = (self.lambda, self.theta, self.dt);
        let ratio = if self.gamma == 0.0 { 0.0 } else { self.gamma * (y / z).abs().ln() };
        let a = (y - z - l * (th - z) * dt).powi(2) / abs_pow(z, 2.0 * self.gamma);
        let b = (z - y + l * (th - y) * dt).powi(2) / abs_pow(y, 2.0 * self.gamma);
        ratio - (a - b) / (2.0 * self.sigma * self.sigma * dt)
    }
}

/// Statistics `Z_0 … Z_6` with weights `|X_{i-1}|^{-2γ}` plus the θ-free
/// part `Z_7 = Σ(-½log 2πΔt - γ log|X_{i-1}|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirStats {
    dt: f64,
    gamma: f64,
}

pub fn cir_suffstats(dt: f64, gamma: f64) -> Result<CirStats> {
    CirModel::new(dt, gamma)?;
    if gamma >= 0.5 {
        return Err(FremError::NonIntegrable(format!(
            "with γ = {gamma} ≥ 1/2 the conditional expectation of Σ|X|^{{-2γ}} may not exist"
        )));
    }
    Ok(CirStats { dt, gamma })
}

/// Closed-form maximizer of the CIR `Q`, returned as `(σ², λ, θ)`.
pub fn cir_maximizer(z: &[f64], dt: f64) -> Result<[f64; 3]> {
    let (z0, z1, z2, z3, z4, z5, z6) = (z[0], z[1], z[2], z[3], z[4], z[5], z[6]);
    let den = z5 * z5 - z4 * z6;
    let lam_num = z3 * z4 - z2 * z5 + z5 * z5 - z4 * z6;
    if den == 0.0 || !den.is_finite() {
        return Err(FremError::MStepFailure("degenerate maximizer: z5² - z4 z6 = 0".into()));
    }
    if lam_num == 0.0 {
        return Err(FremError::MStepFailure("degenerate maximizer: λ = 0 leaves θ undetermined".into()));
    }
    let sigma2 = (z3 * z3 * z4 - 2.0 * z2 * z3 * z5 + z1 * z5 * z5 + z2 * z2 * z6 - z1 * z4 * z6) / (dt * z0 * den);
    let lambda = lam_num / (dt * den);
    let theta = (z3 * z5 - z2 * z6) / lam_num;
    Ok([sigma2, lambda, theta])
}

impl CirStats {
    fn coefficients(&self, p: &[f64]) -> (f64, f64, f64) {
        let c = 1.0 / (2.0 * p[0] * p[0] * self.dt);
        let a = 1.0 - p[1] * self.dt;
        let b = p[1] * p[2] * self.dt;
        (c, a, b)
    }
}

impl SuffStatModel for CirStats {
    fn stat_dim(&self) -> usize {
        8
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn is_admissible(&self, theta: &[f64]) -> bool {
        theta[0] > 0.0 && theta.iter().all(|v| v.is_finite())
    }

    fn phi(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn psi(&self, p: &[f64], out: &mut [f64]) {
        let (c, a, b) = self.coefficients(p);
        out[0] = -p[0].ln();
        out[1] = -c;
        out[2] = 2.0 * c * b;
        out[3] = 2.0 * c * a;
        out[4] = -c * b * b;
        out[5] = -2.0 * c * a * b;
        out[6] = -c * a * a;
        out[7] = 1.0;
    }

    #[inline]
    fn add_step_stats(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let (x, y) = (x[0], y[0]);
        let w = 1.0 / abs_pow(x, 2.0 * self.gamma);
        out[0] += 1.0;
        out[1] += y * y * w;
        out[2] += y * w;
        out[3] += x * y * w;
        out[4] += w;
        out[5] += x * w;
        out[6] += x * x * w;
        let log_scale = if self.gamma == 0.0 { 0.0 } else { self.gamma * x.abs().ln() };
        out[7] += -0.5 * (2.0 * PI * self.dt).ln() - log_scale;
    }

    fn closed_form_maximizer(&self, z: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(cir_maximizer(z, self.dt).and_then(|[s2, l, t]| {
            if s2 > 0.0 && s2.is_finite() && l.is_finite() && t.is_finite() {
                Ok(vec![s2.sqrt(), l, t])
            } else {
                Err(FremError::MStepFailure(format!("σ² estimate {s2} is not positive")))
            }
        }))
    }

    fn phi_gradient(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0; 3]
    }

    fn psi_jacobian(&self, p: &[f64]) -> Vec<f64> {
        let (c, a, b) = self.coefficients(p);
        let (s, l, th, dt) = (p[0], p[1], p[2], self.dt);
        let (da_l, db_l, db_t) = (-dt, th * dt, l * dt);
        #[rustfmt::skip]
        let jac = vec![
            -1.0 / s, 0.0, 0.0,
            2.0 * c / s, 0.0, 0.0,
            -4.0 * c * b / s, 2.0 * c * db_l, 2.0 * c * db_t,
            -4.0 * c * a / s, 2.0 * c * da_l, 0.0,
            2.0 * c * b * b / s, -2.0 * c * b * db_l, -2.0 * c * b * db_t,
            4.0 * c * a * b / s, -2.0 * c * (da_l * b + a * db_l), -2.0 * c * a * db_t,
            2.0 * c * a * a / s, -2.0 * c * a * da_l, 0.0,
            0.0, 0.0, 0.0,
        ];
        jac
    }
}
