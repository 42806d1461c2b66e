//! Parameterized Markov chains on ℝ^d, forward simulation and observation data.

use crate::error::{FremError, Result};
use crate::reverse::ReverseChain;
use crate::rng::{Seed, StreamRng};

/// A parameterized discrete-time Markov chain with known one-step transition
/// densities.
///
/// States are `dim`-long slices, parameters `param_dim`-long slices. Time
/// indices `k` refer to the transition from time `k` to `k + 1`.
pub trait ChainModel: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn param_dim(&self) -> usize;

    /// Admissibility predicate for θ. Returns a parameter-domain error when
    /// θ is outside the model's parameter space.
    fn check_params(&self, theta: &[f64]) -> Result<()>;

    /// `log p_k^θ(x, y)`.
    fn step_logdensity(&self, k: usize, theta: &[f64], x: &[f64], y: &[f64]) -> f64;

    /// Draw `X_{k+1}` given `X_k = x` into `out`.
    fn step_sample(&self, k: usize, theta: &[f64], x: &[f64], rng: &mut StreamRng, out: &mut [f64]);

    fn time_homogeneous(&self) -> bool {
        true
    }

    /// Reverse chain `(Y, 𝒴)` over `horizon` steps at parameter θ.
    fn reverse<'a>(&'a self, _theta: &[f64], _horizon: usize) -> Result<Box<dyn ReverseChain + 'a>> {
        Err(FremError::UnsupportedModel(self.name().to_string()))
    }

    fn is_admissible(&self, theta: &[f64]) -> bool {
        self.check_params(theta).is_ok()
    }
}

pub(crate) fn check_param_len<M: ChainModel + ?Sized>(model: &M, theta: &[f64]) -> Result<()> {
    if theta.len() != model.param_dim() {
        return Err(FremError::InvalidInput(format!(
            "{} expects {} parameters, got {}",
            model.name(),
            model.param_dim(),
            theta.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_state_len<M: ChainModel + ?Sized>(model: &M, x: &[f64]) -> Result<()> {
    if x.len() != model.dim() {
        return Err(FremError::InvalidInput(format!(
            "{} has state dimension {}, got a state of length {}",
            model.name(),
            model.dim(),
            x.len()
        )));
    }
    Ok(())
}

/// A simulated forward trajectory `X_n, …, X_m`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPath {
    pub start_index: usize,
    pub dim: usize,
    pub states: Vec<f64>,
    pub rng_stream_id: u64,
}

impl ForwardPath {
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State at absolute time `t`.
    pub fn at(&self, t: usize) -> &[f64] {
        let i = t - self.start_index;
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        &self.states[self.states.len() - self.dim..]
    }
}

/// Simulate into a caller-owned buffer of `(m - n + 1) * dim` values.
#[inline]
pub(crate) fn simulate_into<M: ChainModel + ?Sized>(
    model: &M,
    theta: &[f64],
    x: &[f64],
    n: usize,
    rng: &mut StreamRng,
    buf: &mut [f64],
) {
    let d = x.len();
    buf[..d].copy_from_slice(x);
    let steps = buf.len() / d - 1;
    for s in 0..steps {
        let (done, rest) = buf.split_at_mut((s + 1) * d);
        model.step_sample(n + s, theta, &done[s * d..], rng, &mut rest[..d]);
    }
}

/// Simulate `X_n = x, X_{n+1}, …, X_m` on the stream derived from `seed`.
pub fn simulate_forward<M: ChainModel + ?Sized>(
    model: &M,
    theta: &[f64],
    x: &[f64],
    n: usize,
    m: usize,
    seed: Seed,
) -> Result<ForwardPath> {
    check_param_len(model, theta)?;
    check_state_len(model, x)?;
    model.check_params(theta)?;
    if n > m {
        return Err(FremError::InvalidInput(format!("start index {n} exceeds end index {m}")));
    }
    let d = model.dim();
    let mut states = vec![0.0; (m - n + 1) * d];
    if m > n {
        let mut rng = seed.rng();
        simulate_into(model, theta, x, n, &mut rng, &mut states);
    } else {
        states.copy_from_slice(x);
    }
    Ok(ForwardPath {
        start_index: n,
        dim: d,
        states,
        rng_stream_id: seed.value(),
    })
}

/// Full-data log-likelihood `Σ log p_i^θ(x_i, x_{i+1})` of a row-major path
/// starting at time 0.
pub fn path_loglikelihood<M: ChainModel + ?Sized>(model: &M, theta: &[f64], path: &[f64]) -> Result<f64> {
    check_param_len(model, theta)?;
    let d = model.dim();
    if path.len() % d != 0 {
        return Err(FremError::InvalidInput("path length is not a multiple of the state dimension".into()));
    }
    let len = path.len() / d;
    if len < 2 {
        return Err(FremError::InvalidInput("path needs at least two states".into()));
    }
    let mut total = 0.0;
    for i in 0..len - 1 {
        let lp = model.step_logdensity(i, theta, &path[i * d..(i + 1) * d], &path[(i + 1) * d..(i + 2) * d]);
        if !lp.is_finite() {
            return Err(FremError::EstimatorFailure { index: i });
        }
        total += lp;
    }
    Ok(total)
}

/// Partial observations `x_{i_0}, …, x_{i_r}` of a chain at strictly
/// increasing times starting at 0.
///
/// Coordinates that were not observed at a given time are flagged in the
/// mask; their stored values are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    times: Vec<usize>,
    dim: usize,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl ObservationSet {
    pub fn new(times: Vec<usize>, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_mask(times, values, None)
    }

    /// `mask[t][c]` is true when coordinate `c` was observed at `times[t]`.
    pub fn with_mask(times: Vec<usize>, values: Vec<Vec<f64>>, mask: Option<Vec<Vec<bool>>>) -> Result<Self> {
        if times.is_empty() {
            return Err(FremError::InvalidInput("observation set is empty".into()));
        }
        if times[0] != 0 {
            return Err(FremError::InvalidInput("first observation time must be 0".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FremError::InvalidInput("observation times must be strictly increasing".into()));
        }
        if values.len() != times.len() {
            return Err(FremError::InvalidInput(format!(
                "{} observation times but {} values",
                times.len(),
                values.len()
            )));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(FremError::InvalidInput("observed states must share a positive dimension".into()));
        }
        let mask = match mask {
            None => None,
            Some(m) => {
                if m.len() != times.len() || m.iter().any(|row| row.len() != dim) {
                    return Err(FremError::InvalidInput("mask shape does not match observations".into()));
                }
                if m.iter().all(|row| row.iter().all(|&b| b)) {
                    None
                } else {
                    Some(m.into_iter().flatten().collect())
                }
            }
        };
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        for (i, v) in flat.iter().enumerate() {
            let observed = mask.as_ref().is_none_or(|m: &Vec<bool>| m[i]);
            if observed && !v.is_finite() {
                return Err(FremError::InvalidInput(format!(
                    "non-finite observed value at time {}",
                    times[i / dim]
                )));
            }
        }
        Ok(ObservationSet {
            times,
            dim,
            values: flat,
            mask,
        })
    }

    /// Every `every`-th state of a full row-major path, always keeping the
    /// last one.
    pub fn subsample(path: &[f64], dim: usize, every: usize) -> Result<Self> {
        if every == 0 {
            return Err(FremError::InvalidInput("subsampling interval must be positive".into()));
        }
        let len = path.len() / dim;
        let mut times: Vec<usize> = (0..len).step_by(every).collect();
        if *times.last().unwrap() != len - 1 {
            times.push(len - 1);
        }
        let values = times.iter().map(|&t| path[t * dim..(t + 1) * dim].to_vec()).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last observation time.
    pub fn horizon(&self) -> usize {
        *self.times.last().unwrap()
    }

    pub fn value(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn is_observed(&self, idx: usize, coord: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[idx * self.dim + coord])
    }

    pub fn is_fully_observed(&self, idx: usize) -> bool {
        (0..self.dim).all(|c| self.is_observed(idx, c))
    }

    pub fn has_mask(&self) -> bool {
        self.mask.is_some()
    }

    /// Observed coordinates at observation `idx`.
    pub fn observed_coords(&self, idx: usize) -> Vec<usize> {
        (0..self.dim).filter(|&c| self.is_observed(idx, c)).collect()
    }

    /// Indices of fully observed times; these split the data into
    /// independent bridge segments.
    pub fn anchors(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_fully_observed(i)).collect()
    }
}
