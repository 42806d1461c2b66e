//! Reverse chains `(Y, 𝒴)`.
//!
//! A reverse chain runs backwards in label time with transition density
//! `q_m(y, ·)` and carries a multiplicative weight
//! `𝒴_{m+1} = 𝒴_m ψ_m(Y_m, Y_{m+1})`, where
//! `ψ_m(y, z) q_m(y, z) = p_{N-m-1}(z, y)`. Weighted expectations of the
//! reverse chain then reproduce integrals against the forward transition
//! densities in their first argument.

use rayon::prelude::*;

use crate::chain::ChainModel;
use crate::error::{FremError, Result};
use crate::rng::{Seed, StreamRng};

/// How many times a reverse step is redrawn when its weight is singular.
pub const MAX_WEIGHT_RESAMPLES: usize = 100;

pub trait ReverseChain: Send + Sync {
    fn dim(&self) -> usize;

    /// Horizon `N` of the forward chain this reverse chain is built against.
    fn horizon(&self) -> usize;

    /// Draw `Y_{m+1} ~ q_m(y, ·)` into `out`.
    fn step_sample(&self, m: usize, y: &[f64], rng: &mut StreamRng, out: &mut [f64]);

    /// `log q_m(y, z)`.
    fn step_logdensity(&self, m: usize, y: &[f64], z: &[f64]) -> f64;

    /// `log ψ_m(y, z)`. May be `-inf` (zero weight); `NaN` or `+inf` mark a
    /// singular weight.
    fn log_psi(&self, m: usize, y: &[f64], z: &[f64]) -> f64;
}

/// Reverse chain for models whose adjoint normalizer
/// `ψ_m(y) = ∫ p_{N-m-1}(z, y) dz` is available in closed form. Then
/// `q_m(y, z) = p_{N-m-1}(z, y) / ψ_m(y)` and the weight does not depend on
/// the new state.
pub struct NormalizedReverse<'a, M: ?Sized, S, N> {
    model: &'a M,
    theta: Vec<f64>,
    horizon: usize,
    sampler: S,
    log_normalizer: N,
}

impl<'a, M, S, N> NormalizedReverse<'a, M, S, N>
where
    M: ChainModel + ?Sized,
    S: Fn(usize, &[f64], &mut StreamRng, &mut [f64]) + Send + Sync,
    N: Fn(usize, &[f64]) -> f64 + Send + Sync,
{
    /// `sampler` must draw from `p_{N-m-1}(·, y) / exp(log_normalizer(m, y))`.
    pub fn new(model: &'a M, theta: &[f64], horizon: usize, sampler: S, log_normalizer: N) -> Self {
        NormalizedReverse {
            model,
            theta: theta.to_vec(),
            horizon,
            sampler,
            log_normalizer,
        }
    }
}

impl<M, S, N> ReverseChain for NormalizedReverse<'_, M, S, N>
where
    M: ChainModel + ?Sized,
    S: Fn(usize, &[f64], &mut StreamRng, &mut [f64]) + Send + Sync,
    N: Fn(usize, &[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn step_sample(&self, m: usize, y: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        (self.sampler)(m, y, rng, out)
    }

    fn step_logdensity(&self, m: usize, y: &[f64], z: &[f64]) -> f64 {
        let k = self.horizon.saturating_sub(m + 1);
        self.model.step_logdensity(k, &self.theta, z, y) - (self.log_normalizer)(m, y)
    }

    fn log_psi(&self, m: usize, y: &[f64], _z: &[f64]) -> f64 {
        (self.log_normalizer)(m, y)
    }
}

/// Reverse trajectory `Y_0 = y, …, Y_L` with cumulative weights kept in log
/// space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversePath {
    pub dim: usize,
    pub states: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub rng_stream_id: u64,
}

impl ReversePath {
    pub fn anchor(&self) -> &[f64] {
        &self.states[..self.dim]
    }

    pub fn steps(&self) -> usize {
        self.log_weights.len() - 1
    }

    pub fn at(&self, m: usize) -> &[f64] {
        &self.states[m * self.dim..(m + 1) * self.dim]
    }

    /// Linear-scale weights `𝒴_0 = 1, …, 𝒴_L`.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn terminal_weight(&self) -> f64 {
        self.log_weights.last().unwrap().exp()
    }
}

/// Fill `buf` (length `(L+1)·d`, first state already set) with a reverse
/// path and return `log 𝒴_L`. `log_weights`, when given, receives the
/// cumulative log weights.
#[inline]
pub(crate) fn simulate_reverse_into<R: ReverseChain + ?Sized>(
    spec: &R,
    rng: &mut StreamRng,
    buf: &mut [f64],
    mut log_weights: Option<&mut [f64]>,
) -> Result<f64> {
    let d = spec.dim();
    let steps = buf.len() / d - 1;
    let mut logw = 0.0;
    if let Some(lw) = log_weights.as_deref_mut() {
        lw[0] = 0.0;
    }
    for m in 0..steps {
        let (done, rest) = buf.split_at_mut((m + 1) * d);
        let y = &done[m * d..];
        let z = &mut rest[..d];
        let mut attempts = 0;
        loop {
            spec.step_sample(m, y, rng, z);
            let lp = spec.log_psi(m, y, z);
            if !(lp.is_nan() || lp == f64::INFINITY) {
                logw += lp;
                break;
            }
            attempts += 1;
            if attempts >= MAX_WEIGHT_RESAMPLES {
                return Err(FremError::WeightSingularity {
                    step: m,
                    y: y.to_vec(),
                    z: z.to_vec(),
                });
            }
        }
        if let Some(lw) = log_weights.as_deref_mut() {
            lw[m + 1] = logw;
        }
    }
    Ok(logw)
}

/// Simulate `steps` reverse steps from the anchor `y`.
pub fn simulate_reverse<R: ReverseChain + ?Sized>(spec: &R, y: &[f64], steps: usize, seed: Seed) -> Result<ReversePath> {
    let d = spec.dim();
    if y.len() != d {
        return Err(FremError::InvalidInput(format!(
            "anchor has length {}, reverse chain dimension is {d}",
            y.len()
        )));
    }
    if steps > spec.horizon() {
        return Err(FremError::InvalidInput(format!(
            "{steps} reverse steps exceed the horizon {}",
            spec.horizon()
        )));
    }
    let mut states = vec![0.0; (steps + 1) * d];
    states[..d].copy_from_slice(y);
    let mut log_weights = vec![0.0; steps + 1];
    let mut rng = seed.rng();
    simulate_reverse_into(spec, &mut rng, &mut states, Some(&mut log_weights))?;
    Ok(ReversePath {
        dim: d,
        states,
        log_weights,
        rng_stream_id: seed.value(),
    })
}

/// Summary of a set of terminal reverse weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSummary {
    pub mean: f64,
    pub second_moment: f64,
    /// Coefficient of variation; large values flag weights without a usable
    /// second moment.
    pub cv: f64,
}

pub fn summarize_weights(weights: &[f64]) -> WeightSummary {
    let n = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / n;
    let second_moment = weights.iter().map(|w| w * w).sum::<f64>() / n;
    let var = (second_moment - mean * mean).max(0.0);
    WeightSummary {
        mean,
        second_moment,
        cv: if mean > 0.0 { var.sqrt() / mean } else { f64::INFINITY },
    }
}

/// Monte Carlo check of `∫ g(x) p_{n,N}(x, y) dx = E[g(Y_{N-n}) 𝒴_{N-n}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub estimate: f64,
    pub oracle: f64,
    pub std_error: f64,
    pub weights: WeightSummary,
    pub passed: bool,
}

impl IdentityReport {
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.oracle) / self.std_error
    }
}

/// Compare the weighted reverse estimate of `∫ g(x) p_{N-steps,N}(x, y) dx`
/// with an externally computed `oracle`. Passes within 4 standard errors.
pub fn check_reverse_identity<R, G>(
    spec: &R,
    y: &[f64],
    steps: usize,
    g: G,
    samples: usize,
    seed: Seed,
    oracle: f64,
) -> Result<IdentityReport>
where
    R: ReverseChain + ?Sized,
    G: Fn(&[f64]) -> f64 + Sync,
{
    if steps == 0 {
        let estimate = g(y);
        return Ok(IdentityReport {
            estimate,
            oracle,
            std_error: 0.0,
            weights: WeightSummary {
                mean: 1.0,
                second_moment: 1.0,
                cv: 0.0,
            },
            passed: (estimate - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()),
        });
    }
    let d = spec.dim();
    let draws: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; (steps + 1) * d],
            |buf, i| {
                buf[..d].copy_from_slice(y);
                let mut rng = seed.child(i).rng();
                let logw = simulate_reverse_into(spec, &mut rng, buf, None)?;
                let w = logw.exp();
                Ok((g(&buf[steps * d..]) * w, w))
            },
        )
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let mean = draws.iter().map(|v| v.0).sum::<f64>() / n;
    let var = draws.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let weights: Vec<f64> = draws.iter().map(|v| v.1).collect();
    Ok(IdentityReport {
        estimate: mean,
        oracle,
        std_error,
        weights: summarize_weights(&weights),
        passed: (mean - oracle).abs() <= 4.0 * std_error,
    })
}
