//! Forward-reverse EM: E-step by bridge estimation of the sufficient
//! statistics, closed-form or quasi-Newton M-step, and the stabilized
//! iteration with growing compacts and a reset counter.

use rayon::prelude::*;

use crate::chain::{ChainModel, ObservationSet};
use crate::error::{FremError, Result};
use crate::estimator::{estimate_z_vector, ZEstimate};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::optimize::{maximize_bfgs, numeric_gradient, BfgsOptions};
use crate::rng::Seed;

/// Curved exponential family `l_c(θ; x) = φ(θ) + Σ_i S_i(x) ψ_i(θ)` with
/// statistics that are sums over transitions.
pub trait SuffStatModel: Send + Sync {
    fn stat_dim(&self) -> usize;

    fn param_dim(&self) -> usize;

    fn phi(&self, theta: &[f64]) -> f64;

    /// Writes `ψ(θ)` into `out`.
    fn psi(&self, theta: &[f64], out: &mut [f64]);

    /// Adds the contribution of the transition `x → y` to each `S_i`.
    fn add_step_stats(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    fn is_admissible(&self, theta: &[f64]) -> bool {
        theta.iter().all(|v| v.is_finite())
    }

    /// Closed-form maximizer of `Q(·; z)`; `None` selects the numeric M-step.
    fn closed_form_maximizer(&self, _z: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    /// `∇φ(θ)`. Defaults to central differences.
    fn phi_gradient(&self, theta: &[f64]) -> Vec<f64> {
        numeric_gradient(&|t: &[f64]| self.phi(t), theta)
    }

    /// Row-major `q × s` Jacobian `∂ψ_i/∂θ_j`. Defaults to central
    /// differences.
    fn psi_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        let q = self.stat_dim();
        let s = theta.len();
        let mut jac = vec![0.0; q * s];
        let mut p = theta.to_vec();
        let (mut up, mut down) = (vec![0.0; q], vec![0.0; q]);
        for j in 0..s {
            let h = 1e-6 * (1.0 + theta[j].abs());
            p[j] = theta[j] + h;
            self.psi(&p, &mut up);
            p[j] = theta[j] - h;
            self.psi(&p, &mut down);
            p[j] = theta[j];
            for i in 0..q {
                jac[i * s + j] = (up[i] - down[i]) / (2.0 * h);
            }
        }
        jac
    }
}

/// Statistics of a fully observed row-major path.
pub fn path_stats<S: SuffStatModel + ?Sized>(stats: &S, path: &[f64], dim: usize) -> Vec<f64> {
    let mut z = vec![0.0; stats.stat_dim()];
    let n = path.len() / dim;
    for i in 1..n {
        stats.add_step_stats(&path[(i - 1) * dim..i * dim], &path[i * dim..(i + 1) * dim], &mut z);
    }
    z
}

/// `θ ↦ φ(θ) + ⟨z, ψ(θ)⟩`.
pub fn q_function<'a, S: SuffStatModel + ?Sized>(stats: &'a S, z: &'a [f64]) -> impl Fn(&[f64]) -> f64 + 'a {
    move |theta: &[f64]| q_value(stats, z, theta)
}

pub fn q_value<S: SuffStatModel + ?Sized>(stats: &S, z: &[f64], theta: &[f64]) -> f64 {
    let mut psi = vec![0.0; stats.stat_dim()];
    stats.psi(theta, &mut psi);
    stats.phi(theta) + z.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>()
}

/// `∇_θ Q(θ; z)` from the model's φ gradient and ψ Jacobian.
pub fn q_gradient<S: SuffStatModel + ?Sized>(stats: &S, z: &[f64], theta: &[f64]) -> Vec<f64> {
    let s = theta.len();
    let mut g = stats.phi_gradient(theta);
    let jac = stats.psi_jacobian(theta);
    for (i, zi) in z.iter().enumerate() {
        for j in 0..s {
            g[j] += zi * jac[i * s + j];
        }
    }
    g
}

/// `argmax_θ Q(θ; z)`, closed form when the model has one, otherwise
/// quasi-Newton ascent from `start` within 500 evaluations.
pub fn m_step<S: SuffStatModel + ?Sized>(stats: &S, z: &[f64], start: &[f64]) -> Result<Vec<f64>> {
    if z.len() != stats.stat_dim() {
        return Err(FremError::InvalidInput(format!(
            "z has length {}, expected {}",
            z.len(),
            stats.stat_dim()
        )));
    }
    if let Some(res) = stats.closed_form_maximizer(z) {
        return res;
    }
    numeric_m_step(stats, z, start, BfgsOptions::default())
}

pub fn numeric_m_step<S: SuffStatModel + ?Sized>(stats: &S, z: &[f64], start: &[f64], opts: BfgsOptions) -> Result<Vec<f64>> {
    let f = |t: &[f64]| {
        if stats.is_admissible(t) {
            q_value(stats, z, t)
        } else {
            f64::NEG_INFINITY
        }
    };
    Ok(maximize_bfgs(f, |t| q_gradient(stats, z, t), start, opts)?.x)
}

/// Schedules and compacts of a FREM run.
#[derive(Debug, Clone, PartialEq)]
pub struct FremConfig {
    pub theta0: Vec<f64>,
    pub iterations: usize,
    /// `M_m = samples0 · sample_growth^m`.
    pub samples0: usize,
    pub sample_growth: f64,
    /// `ε_m = bandwidth0 / bandwidth_shrink^m`.
    pub bandwidth0: f64,
    pub bandwidth_shrink: f64,
    /// `K_m = [θ0 - c·2^m, θ0 + c·2^m]^s ∩ Θ`.
    pub compact_half_width: f64,
    pub kernel: KernelFamily,
    pub seed: u64,
}

impl FremConfig {
    /// Table-style defaults: `M_m = 2000·4^m`, `ε_m = 0.0005·4^{-m}`.
    pub fn new(theta0: Vec<f64>, iterations: usize, seed: u64) -> Self {
        FremConfig {
            theta0,
            iterations,
            samples0: 2000,
            sample_growth: 4.0,
            bandwidth0: 5e-4,
            bandwidth_shrink: 4.0,
            compact_half_width: 10.0,
            kernel: KernelFamily::EpanechnikovProduct,
            seed,
        }
    }

    pub fn samples(&self, m: usize) -> usize {
        (self.samples0 as f64 * self.sample_growth.powi(m as i32)).round() as usize
    }

    pub fn bandwidth(&self, m: usize) -> f64 {
        self.bandwidth0 / self.bandwidth_shrink.powi(m as i32)
    }

    pub fn compact_contains(&self, m: usize, theta: &[f64]) -> bool {
        let r = self.compact_half_width * 2f64.powi(m as i32);
        theta.len() == self.theta0.len() && theta.iter().zip(&self.theta0).all(|(t, c)| (t - c).abs() <= r)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(FremError::InvalidInput(s.to_string()));
        if self.samples0 < 2 {
            return bad("initial sample count must be at least 2");
        }
        if !(self.sample_growth >= 1.0 && self.sample_growth.is_finite()) {
            return bad("sample growth must be at least 1 so budgets are nondecreasing");
        }
        if !(self.bandwidth0 > 0.0 && self.bandwidth0.is_finite()) {
            return bad("initial bandwidth must be positive");
        }
        if !(self.bandwidth_shrink >= 1.0 && self.bandwidth_shrink.is_finite()) {
            return bad("bandwidth shrink factor must be at least 1");
        }
        if !(self.compact_half_width > 0.0 && self.compact_half_width.is_finite()) {
            return bad("compact half-width must be positive");
        }
        if self.theta0.iter().any(|v| !v.is_finite()) {
            return bad("initial parameter must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// `Q` at the maximizer; `None` for the initial entry and for resets.
    pub q_value: Option<f64>,
    /// `Q` at the maximizer divided by the number of transitions.
    pub likel: Option<f64>,
    pub z: Option<Vec<f64>>,
    pub samples: usize,
    pub bandwidth: f64,
    pub reset: bool,
    pub step_norm: f64,
    pub note: Option<String>,
    pub min_pairs_hit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FremState {
    pub theta: Vec<f64>,
    pub resets: usize,
    pub iteration: usize,
    pub trace: Vec<TraceEntry>,
}

impl FremState {
    pub fn initial(config: &FremConfig) -> Self {
        FremState {
            theta: config.theta0.clone(),
            resets: 0,
            iteration: 0,
            trace: vec![TraceEntry {
                iteration: 0,
                theta: config.theta0.clone(),
                q_value: None,
                likel: None,
                z: None,
                samples: 0,
                bandwidth: 0.0,
                reset: false,
                step_norm: 0.0,
                note: None,
                min_pairs_hit: None,
            }],
        }
    }
}

/// One E-step plus stable M-step. A maximizer outside `K_m`, a degenerate
/// E-step or a failed M-step resets θ to θ0 and bumps the reset counter.
pub fn stable_iterate<M, S>(model: &M, stats: &S, obs: &ObservationSet, config: &FremConfig, mut state: FremState) -> Result<FremState>
where
    M: ChainModel + ?Sized,
    S: SuffStatModel + ?Sized,
{
    let m = state.iteration;
    let samples = config.samples(m);
    let bandwidth = config.bandwidth(m);
    let kernel = match config.kernel {
        KernelFamily::EpanechnikovProduct => KernelSpec::epanechnikov(model.dim(), bandwidth)?,
        KernelFamily::GaussianTruncated => KernelSpec::gaussian_truncated(model.dim(), bandwidth, 3.0)?,
    };
    let seed = Seed::new(config.seed).child(m as u64);
    let transitions = obs.horizon() as f64;

    let outcome: Result<(ZEstimate, Vec<f64>)> =
        estimate_z_vector(model, &state.theta, obs, stats, samples, &kernel, seed).and_then(|ze| {
            let theta = m_step(stats, &ze.z, &state.theta)?;
            Ok((ze, theta))
        });

    let mut entry = TraceEntry {
        iteration: m + 1,
        theta: config.theta0.clone(),
        q_value: None,
        likel: None,
        z: None,
        samples,
        bandwidth,
        reset: true,
        step_norm: 0.0,
        note: None,
        min_pairs_hit: None,
    };
    match outcome {
        Ok((ze, theta)) => {
            entry.min_pairs_hit = ze.gaps.iter().filter_map(|g| g.estimate.as_ref().map(|e| e.pairs_hit)).min();
            let inside = config.compact_contains(m, &theta)
                && stats.is_admissible(&theta)
                && model.is_admissible(&theta);
            if inside {
                let q = q_value(stats, &ze.z, &theta);
                entry.q_value = Some(q);
                entry.likel = Some(q / transitions);
                entry.theta = theta;
                entry.reset = false;
            } else {
                entry.note = Some(format!("maximizer {theta:?} outside K_{m}"));
            }
            entry.z = Some(ze.z);
        }
        Err(e) if e.is_numerical() => entry.note = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    entry.step_norm = entry
        .theta
        .iter()
        .zip(&state.theta)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if entry.reset {
        state.resets += 1;
    }
    state.theta = entry.theta.clone();
    state.iteration += 1;
    state.trace.push(entry);
    Ok(state)
}

pub fn run_frem<M, S>(model: &M, stats: &S, obs: &ObservationSet, config: &FremConfig) -> Result<FremState>
where
    M: ChainModel + ?Sized,
    S: SuffStatModel + ?Sized,
{
    config.validate()?;
    if config.theta0.len() != model.param_dim() || stats.param_dim() != model.param_dim() {
        return Err(FremError::InvalidInput(format!(
            "initial parameter has length {}, model expects {}",
            config.theta0.len(),
            model.param_dim()
        )));
    }
    model.check_params(&config.theta0)?;
    let mut state = FremState::initial(config);
    for _ in 0..config.iterations {
        state = stable_iterate(model, stats, obs, config, state)?;
    }
    Ok(state)
}

/// Independent FREM runs on the same data; replicate `r` uses master seed
/// `Seed::new(config.seed).child(r)`. Runs in parallel over replicates.
pub fn run_replicates<M, S>(model: &M, stats: &S, obs: &ObservationSet, config: &FremConfig, replicates: usize) -> Result<Vec<FremState>>
where
    M: ChainModel + ?Sized,
    S: SuffStatModel + ?Sized,
{
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut c = config.clone();
            c.seed = Seed::new(config.seed).child(r).value();
            run_frem(model, stats, obs, &c)
        })
        .collect()
}
