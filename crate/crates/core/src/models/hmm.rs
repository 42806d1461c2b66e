//! Two-dimensional chain `X_{n+1} ~ N(θ + X_n², Σ)` (squares taken
//! componentwise) with the second component observed every `k` steps.

use std::f64::consts::PI;

use crate::chain::{check_param_len, ChainModel, ObservationSet};
use crate::em::SuffStatModel;
use crate::error::{FremError, Result};
use crate::reverse::ReverseChain;
use crate::rng::{std_normal, uniform, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hmm2dModel {
    sigma: [[f64; 2]; 2],
    omega: [[f64; 2]; 2],
    chol: [[f64; 2]; 2],
    log_det: f64,
}

impl Hmm2dModel {
    pub fn new(sigma: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = sigma;
        let det = a * d - b * c;
        if !(sigma.iter().flatten().all(|v| v.is_finite()) && (b - c).abs() <= 1e-12 * (1.0 + b.abs()) && a > 0.0 && det > 0.0) {
            return Err(FremError::InvalidInput(format!("Σ = {sigma:?} is not symmetric positive definite")));
        }
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (d - l21 * l21).sqrt();
        Ok(Hmm2dModel {
            sigma,
            omega: [[d / det, -b / det], [-b / det, a / det]],
            chol: [[l11, 0.0], [l21, l22]],
            log_det: det.ln(),
        })
    }

    pub fn sigma(&self) -> [[f64; 2]; 2] {
        self.sigma
    }

    pub fn omega(&self) -> [[f64; 2]; 2] {
        self.omega
    }

    /// Observations of a full row-major path: component 1 at every time,
    /// component 2 only at multiples of `k`.
    pub fn observe(path: &[f64], k: usize) -> Result<ObservationSet> {
        if k == 0 {
            return Err(FremError::InvalidInput("observation interval must be positive".into()));
        }
        let n = path.len() / 2;
        let times: Vec<usize> = (0..n).collect();
        let values = (0..n).map(|t| path[2 * t..2 * t + 2].to_vec()).collect();
        let mask = (0..n).map(|t| vec![true, t % k == 0]).collect();
        ObservationSet::with_mask(times, values, Some(mask))
    }

    fn quad(&self, v: [f64; 2]) -> f64 {
        let o = &self.omega;
        v[0] * v[0] * o[0][0] + 2.0 * v[0] * v[1] * o[0][1] + v[1] * v[1] * o[1][1]
    }
}

impl ChainModel for Hmm2dModel {
    fn name(&self) -> &str {
        "hmm2d"
    }

    fn dim(&self) -> usize {
        2
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        check_param_len(self, theta)?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(FremError::ParameterDomain {
                theta: theta.to_vec(),
                reason: "θ must be finite".into(),
            });
        }
        Ok(())
    }

    fn step_logdensity(&self, _k: usize, theta: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let v = [y[0] - theta[0] - x[0] * x[0], y[1] - theta[1] - x[1] * x[1]];
        -(2.0 * PI).ln() - 0.5 * self.log_det - 0.5 * self.quad(v)
    }

    fn step_sample(&self, _k: usize, theta: &[f64], x: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        let (e1, e2) = (std_normal(rng), std_normal(rng));
        let l = &self.chol;
        out[0] = theta[0] + x[0] * x[0] + l[0][0] * e1;
        out[1] = theta[1] + x[1] * x[1] + l[1][0] * e1 + l[1][1] * e2;
    }

    fn reverse<'a>(&'a self, theta: &[f64], horizon: usize) -> Result<Box<dyn ReverseChain + 'a>> {
        self.check_params(theta)?;
        Ok(Box::new(HmmReverse {
            model: self,
            theta: [theta[0], theta[1]],
            horizon,
        }))
    }
}

/// Reverse chain inverting `y ≈ θ + z²` per coordinate: `z` is drawn from
/// the two-component mixture `½N(r, τ²) + ½N(-r, τ²)` with
/// `r = √max(y - θ, 0)`, and `ψ = p(z, y) / q(y, z)`.
pub struct HmmReverse<'a> {
    model: &'a Hmm2dModel,
    theta: [f64; 2],
    horizon: usize,
}

impl HmmReverse<'_> {
    fn component(&self, y: &[f64], i: usize) -> (f64, f64) {
        let s = self.model.sigma[i][i].sqrt();
        let w = y[i] - self.theta[i];
        let r = w.max(0.0).sqrt();
        // linearized spread of the root, floored near the fold at 0
        let tau = s / (2.0 * w.max(s).sqrt());
        (r, tau)
    }
}

fn log_mixture(z: f64, r: f64, tau: f64) -> f64 {
    let a = -(z - r) * (z - r) / (2.0 * tau * tau);
    let b = -(z + r) * (z + r) / (2.0 * tau * tau);
    let m = a.max(b);
    m + (0.5 * ((a - m).exp() + (b - m).exp())).ln() - 0.5 * (2.0 * PI * tau * tau).ln()
}

impl ReverseChain for HmmReverse<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn step_sample(&self, _m: usize, y: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(2) {
            let (r, tau) = self.component(y, i);
            let sign = if uniform(rng) < 0.5 { -1.0 } else { 1.0 };
            *o = sign * r + tau * std_normal(rng);
        }
    }

    fn step_logdensity(&self, _m: usize, y: &[f64], z: &[f64]) -> f64 {
        (0..2)
            .map(|i| {
                let (r, tau) = self.component(y, i);
                log_mixture(z[i], r, tau)
            })
            .sum()
    }

    fn log_psi(&self, m: usize, y: &[f64], z: &[f64]) -> f64 {
        self.model.step_logdensity(0, &self.theta, z, y) - self.step_logdensity(m, y, z)
    }
}

/// Statistics `(ΣV_1, ΣV_2, N, S_0)` with `V_l = X_l - X_{l-1}²` and the
/// θ-free part `S_0`; `ψ(θ) = ((Ωθ)_1, (Ωθ)_2, -½θᵀΩθ, 1)`, `φ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmmStats {
    model: Hmm2dModel,
}

pub fn hmm_suffstats(sigma: [[f64; 2]; 2]) -> Result<HmmStats> {
    Ok(HmmStats {
        model: Hmm2dModel::new(sigma)?,
    })
}

impl SuffStatModel for HmmStats {
    fn stat_dim(&self) -> usize {
        4
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn phi(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn psi(&self, theta: &[f64], out: &mut [f64]) {
        let o = &self.model.omega;
        let w = [o[0][0] * theta[0] + o[0][1] * theta[1], o[1][0] * theta[0] + o[1][1] * theta[1]];
        out[0] = w[0];
        out[1] = w[1];
        out[2] = -0.5 * (theta[0] * w[0] + theta[1] * w[1]);
        out[3] = 1.0;
    }

    #[inline]
    fn add_step_stats(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let v = [y[0] - x[0] * x[0], y[1] - x[1] * x[1]];
        out[0] += v[0];
        out[1] += v[1];
        out[2] += 1.0;
        out[3] += -(2.0 * PI).ln() - 0.5 * self.model.log_det - 0.5 * self.model.quad(v);
    }

    /// Solves `z_N Ω θ = Ω (z_1, z_2)`.
    fn closed_form_maximizer(&self, z: &[f64]) -> Option<Result<Vec<f64>>> {
        let o = &self.model.omega;
        let a = [[z[2] * o[0][0], z[2] * o[0][1]], [z[2] * o[1][0], z[2] * o[1][1]]];
        let b = [o[0][0] * z[0] + o[0][1] * z[1], o[1][0] * z[0] + o[1][1] * z[1]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        Some(if det.abs() > 1e-300 && det.is_finite() {
            Ok(vec![
                (b[0] * a[1][1] - a[0][1] * b[1]) / det,
                (a[0][0] * b[1] - a[1][0] * b[0]) / det,
            ])
        } else {
            Err(FremError::MStepFailure("singular 2×2 system in the HMM M-step".into()))
        })
    }

    fn phi_gradient(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0]
    }

    fn psi_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        let o = &self.model.omega;
        let w = [o[0][0] * theta[0] + o[0][1] * theta[1], o[1][0] * theta[0] + o[1][1] * theta[1]];
        vec![o[0][0], o[0][1], o[1][0], o[1][1], -w[0], -w[1], 0.0, 0.0]
    }
}

/// Score `∂l_c/∂θ = Ω(Σ_l V_l - Nθ)` of a fully observed row-major path.
pub fn hmm_score(sigma: [[f64; 2]; 2], theta: &[f64], path: &[f64]) -> Result<[f64; 2]> {
    let m = Hmm2dModel::new(sigma)?;
    let n = path.len() / 2;
    if n < 2 {
        return Err(FremError::InvalidInput("path needs at least two states".into()));
    }
    let mut r = [0.0; 2];
    for l in 1..n {
        for i in 0..2 {
            r[i] += path[2 * l + i] - path[2 * (l - 1) + i].powi(2) - theta[i];
        }
    }
    let o = &m.omega;
    Ok([o[0][0] * r[0] + o[0][1] * r[1], o[1][0] * r[0] + o[1][1] * r[1]])
}
