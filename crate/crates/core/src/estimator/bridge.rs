use rayon::prelude::*;

use crate::chain::{check_param_len, check_state_len, simulate_into, ChainModel, ObservationSet};
use crate::em::SuffStatModel;
use crate::error::{FremError, Result};
use crate::estimator::binning::fast_double_sum;
use crate::kernel::KernelSpec;
use crate::reverse::{simulate_reverse_into, summarize_weights};
use crate::rng::Seed;

/// Denominators at or below this are treated as an empty kernel match.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Conditional expectation query `E[g(X_grid) | X_{n0} = x, X_N = y]`.
///
/// Forward paths run `n0 → n*`, reverse paths run `N → n*`; grid states at
/// times `≤ n*` come from the forward path and the rest from the reverse path.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeQuery {
    pub start_time: usize,
    pub start: Vec<f64>,
    pub end_time: usize,
    pub end: Vec<f64>,
    pub crossover: usize,
    pub grid: Vec<usize>,
    /// Coordinates of `Y_L - X_{n*}` the kernel acts on; all when `None`.
    pub kernel_coords: Option<Vec<usize>>,
}

impl BridgeQuery {
    /// Query with the crossover at the midpoint and no grid.
    pub fn new(start_time: usize, start: Vec<f64>, end_time: usize, end: Vec<f64>) -> Result<Self> {
        if end_time <= start_time {
            return Err(FremError::InvalidInput(format!(
                "bridge end time {end_time} must exceed start time {start_time}"
            )));
        }
        if start.len() != end.len() || start.is_empty() {
            return Err(FremError::InvalidInput("bridge endpoints must share a positive dimension".into()));
        }
        Ok(BridgeQuery {
            start_time,
            start,
            end_time,
            end,
            crossover: start_time + (end_time - start_time) / 2,
            grid: Vec::new(),
            kernel_coords: None,
        })
    }

    pub fn with_crossover(mut self, crossover: usize) -> Result<Self> {
        self.crossover = crossover;
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: Vec<usize>) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kernel_coords(mut self, coords: Vec<usize>) -> Result<Self> {
        self.kernel_coords = Some(coords);
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn forward_steps(&self) -> usize {
        self.crossover - self.start_time
    }

    pub fn reverse_steps(&self) -> usize {
        self.end_time - self.crossover
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_coords.as_ref().map_or(self.dim(), |c| c.len())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_time <= self.crossover && self.crossover < self.end_time) {
            return Err(FremError::InvalidInput(format!(
                "crossover {} outside [{}, {})",
                self.crossover, self.start_time, self.end_time
            )));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FremError::InvalidInput("grid times must be strictly increasing".into()));
        }
        if self.grid.iter().any(|&t| t <= self.start_time || t >= self.end_time) {
            return Err(FremError::InvalidInput("grid times must lie strictly inside the bridge".into()));
        }
        if let Some(c) = &self.kernel_coords {
            if c.is_empty() || c.windows(2).any(|w| w[0] >= w[1]) || c.iter().any(|&i| i >= self.dim()) {
                return Err(FremError::InvalidInput("kernel coordinates must be distinct, sorted and in range".into()));
            }
        }
        if self.start.iter().chain(&self.end).any(|v| !v.is_finite()) {
            return Err(FremError::InvalidInput("bridge endpoints must be finite".into()));
        }
        Ok(())
    }

    fn project(&self, state: &[f64], out: &mut [f64]) {
        match &self.kernel_coords {
            None => out.copy_from_slice(state),
            Some(c) => {
                for (o, &i) in out.iter_mut().zip(c) {
                    *o = state[i];
                }
            }
        }
    }
}

/// A functional of the bridge path, split into what each side must carry.
///
/// Forward states are `X_{n0}, …, X_{n*}`; reverse states are
/// `Y_0 = X_N, …, Y_L` with `Y_m` standing at time `N - m`.
pub trait BridgeFunctional: Sync {
    fn out_dim(&self) -> usize;

    fn forward_len(&self, query: &BridgeQuery) -> usize;

    fn reverse_len(&self, query: &BridgeQuery) -> usize;

    fn forward_payload(&self, query: &BridgeQuery, states: &[f64], out: &mut [f64]);

    fn reverse_payload(&self, query: &BridgeQuery, states: &[f64], out: &mut [f64]);

    /// Add `weight · g(path)` into `out` for one forward/reverse pair.
    fn accumulate(&self, query: &BridgeQuery, fwd: &[f64], rev: &[f64], weight: f64, out: &mut [f64], scratch: &mut Vec<f64>);
}

/// `g` applied to the grid states in increasing time order, concatenated.
pub struct GridFunctional<G> {
    out_dim: usize,
    g: G,
}

impl<G> GridFunctional<G>
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    pub fn new(out_dim: usize, g: G) -> Self {
        GridFunctional { out_dim, g }
    }
}

impl<G> BridgeFunctional for GridFunctional<G>
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn forward_len(&self, q: &BridgeQuery) -> usize {
        q.grid.iter().filter(|&&t| t <= q.crossover).count() * q.dim()
    }

    fn reverse_len(&self, q: &BridgeQuery) -> usize {
        q.grid.iter().filter(|&&t| t > q.crossover).count() * q.dim()
    }

    fn forward_payload(&self, q: &BridgeQuery, states: &[f64], out: &mut [f64]) {
        let d = q.dim();
        for (slot, &t) in q.grid.iter().filter(|&&t| t <= q.crossover).enumerate() {
            let i = t - q.start_time;
            out[slot * d..(slot + 1) * d].copy_from_slice(&states[i * d..(i + 1) * d]);
        }
    }

    fn reverse_payload(&self, q: &BridgeQuery, states: &[f64], out: &mut [f64]) {
        let d = q.dim();
        for (slot, &t) in q.grid.iter().filter(|&&t| t > q.crossover).enumerate() {
            let m = q.end_time - t;
            out[slot * d..(slot + 1) * d].copy_from_slice(&states[m * d..(m + 1) * d]);
        }
    }

    fn accumulate(&self, _q: &BridgeQuery, fwd: &[f64], rev: &[f64], weight: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend_from_slice(fwd);
        scratch.extend_from_slice(rev);
        let n = scratch.len();
        scratch.resize(n + self.out_dim, 0.0);
        let (args, val) = scratch.split_at_mut(n);
        (self.g)(args, val);
        for (o, v) in out.iter_mut().zip(val.iter()) {
            *o += weight * v;
        }
    }
}

/// Sum of per-transition statistics over the whole bridge path
/// `X_{n0}, …, X_N`. Partial sums are precomputed on each side so the pair
/// term only adds the crossover transition `X_{n*} → Y_{L-1}`.
pub struct AdditiveFunctional<'a, S: ?Sized> {
    stats: &'a S,
}

impl<'a, S: SuffStatModel + ?Sized> AdditiveFunctional<'a, S> {
    pub fn new(stats: &'a S) -> Self {
        AdditiveFunctional { stats }
    }
}

impl<S: SuffStatModel + ?Sized> BridgeFunctional for AdditiveFunctional<'_, S> {
    fn out_dim(&self) -> usize {
        self.stats.stat_dim()
    }

    fn forward_len(&self, q: &BridgeQuery) -> usize {
        self.stats.stat_dim() + q.dim()
    }

    fn reverse_len(&self, q: &BridgeQuery) -> usize {
        self.stats.stat_dim() + q.dim()
    }

    fn forward_payload(&self, q: &BridgeQuery, states: &[f64], out: &mut [f64]) {
        let d = q.dim();
        let s = self.stats.stat_dim();
        let (acc, last) = out.split_at_mut(s);
        acc.fill(0.0);
        let n = states.len() / d;
        for i in 0..n - 1 {
            self.stats.add_step_stats(&states[i * d..(i + 1) * d], &states[(i + 1) * d..(i + 2) * d], acc);
        }
        last.copy_from_slice(&states[(n - 1) * d..]);
    }

    fn reverse_payload(&self, q: &BridgeQuery, states: &[f64], out: &mut [f64]) {
        let d = q.dim();
        let s = self.stats.stat_dim();
        let (acc, first) = out.split_at_mut(s);
        acc.fill(0.0);
        let l = states.len() / d - 1;
        for m in 0..l - 1 {
            self.stats.add_step_stats(&states[(m + 1) * d..(m + 2) * d], &states[m * d..(m + 1) * d], acc);
        }
        first.copy_from_slice(&states[(l - 1) * d..l * d]);
    }

    fn accumulate(&self, _q: &BridgeQuery, fwd: &[f64], rev: &[f64], weight: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        let s = self.stats.stat_dim();
        scratch.clear();
        scratch.resize(s, 0.0);
        self.stats.add_step_stats(&fwd[s..], &rev[s..], scratch);
        for i in 0..s {
            out[i] += weight * (fwd[i] + rev[i] + scratch[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrEstimate {
    /// Estimate of `E[g(…) K_ε 𝒴]`.
    pub numerator: Vec<f64>,
    /// Estimate of `E[K_ε 𝒴]`, i.e. of the transition density `p_{n0,N}(x, y)`.
    pub denominator: f64,
    pub ratio: Vec<f64>,
    pub pairs_hit: u64,
    pub forward_count: usize,
    pub reverse_count: usize,
    pub bandwidth: f64,
    /// Coefficient of variation of the terminal reverse weights.
    pub weight_cv: f64,
}

/// Forward-reverse estimate of a bridge expectation with `samples` forward
/// and `samples` reverse trajectories.
pub fn estimate_bridge<M, F>(
    model: &M,
    theta: &[f64],
    query: &BridgeQuery,
    functional: &F,
    samples: usize,
    kernel: &KernelSpec,
    seed: Seed,
) -> Result<FrEstimate>
where
    M: ChainModel + ?Sized,
    F: BridgeFunctional + ?Sized,
{
    check_param_len(model, theta)?;
    model.check_params(theta)?;
    check_state_len(model, &query.start)?;
    query.validate()?;
    if samples < 2 {
        return Err(FremError::InvalidInput("bridge estimation needs at least two samples".into()));
    }
    let d = model.dim();
    let kd = query.kernel_dim();
    let kernel = if kernel.dim() == kd { *kernel } else { kernel.with_dim(kd)? };
    let reverse = model.reverse(theta, query.end_time)?;
    let q = functional.out_dim();

    let f_steps = query.forward_steps();
    let f_len = functional.forward_len(query);
    let f_rec = kd + f_len;
    let mut fwd = vec![0.0; samples * f_rec];
    let f_seed = seed.child(0);
    fwd.par_chunks_mut(f_rec).enumerate().for_each_init(
        || vec![0.0; (f_steps + 1) * d],
        |buf, (i, rec)| {
            let mut rng = f_seed.child(i as u64).rng();
            simulate_into(model, theta, &query.start, query.start_time, &mut rng, buf);
            query.project(&buf[f_steps * d..], &mut rec[..kd]);
            functional.forward_payload(query, buf, &mut rec[kd..]);
        },
    );

    let r_steps = query.reverse_steps();
    let r_len = functional.reverse_len(query);
    let r_rec = kd + 1 + r_len;
    let mut rev = vec![0.0; samples * r_rec];
    let r_seed = seed.child(1);
    let spec = reverse.as_ref();
    rev.par_chunks_mut(r_rec).enumerate().try_for_each_init(
        || vec![0.0; (r_steps + 1) * d],
        |buf, (j, rec)| -> Result<()> {
            buf[..d].copy_from_slice(&query.end);
            let mut rng = r_seed.child(j as u64).rng();
            let logw = simulate_reverse_into(spec, &mut rng, buf, None)?;
            query.project(&buf[r_steps * d..], &mut rec[..kd]);
            rec[kd] = logw;
            functional.reverse_payload(query, buf, &mut rec[kd + 1..]);
            Ok(())
        },
    )?;

    let f_points: Vec<f64> = fwd.chunks_exact(f_rec).flat_map(|r| r[..kd].iter().copied()).collect();
    let r_points: Vec<f64> = rev.chunks_exact(r_rec).flat_map(|r| r[..kd].iter().copied()).collect();
    let log_max = rev.chunks_exact(r_rec).map(|r| r[kd]).fold(f64::NEG_INFINITY, f64::max);
    if log_max == f64::NEG_INFINITY || log_max.is_nan() {
        return Err(FremError::DegenerateBridge {
            denominator: 0.0,
            pairs_hit: 0,
            bandwidth: kernel.bandwidth(),
        });
    }
    let weights: Vec<f64> = rev.chunks_exact(r_rec).map(|r| (r[kd] - log_max).exp()).collect();

    let mut scratch = Vec::new();
    let sum = fast_double_sum(&f_points, &r_points, &kernel, q + 1, |i, j, kv, acc| {
        let w = kv * weights[j];
        functional.accumulate(
            query,
            &fwd[i * f_rec + kd..(i + 1) * f_rec],
            &rev[j * r_rec + kd + 1..(j + 1) * r_rec],
            w,
            &mut acc[..q],
            &mut scratch,
        );
        acc[q] += w;
    });

    let norm = (samples as f64) * (samples as f64);
    let den_raw = sum.sums[q] / norm;
    if sum.pairs_hit == 0 || den_raw <= DENOMINATOR_FLOOR {
        return Err(FremError::DegenerateBridge {
            denominator: den_raw * log_max.exp(),
            pairs_hit: sum.pairs_hit,
            bandwidth: kernel.bandwidth(),
        });
    }
    let scale = log_max.exp();
    let ratio: Vec<f64> = sum.sums[..q].iter().map(|v| v / sum.sums[q]).collect();
    Ok(FrEstimate {
        numerator: sum.sums[..q].iter().map(|v| v / norm * scale).collect(),
        denominator: den_raw * scale,
        ratio,
        pairs_hit: sum.pairs_hit,
        forward_count: samples,
        reverse_count: samples,
        bandwidth: kernel.bandwidth(),
        weight_cv: summarize_weights(&weights).cv,
    })
}

/// Per-gap record of an E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct GapDiagnostics {
    pub start: usize,
    pub end: usize,
    /// `None` for gaps of one step, which need no simulation.
    pub estimate: Option<FrEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZEstimate {
    pub z: Vec<f64>,
    pub gaps: Vec<GapDiagnostics>,
}

/// Conditional expectations of the sufficient statistics given the
/// observations, one bridge per gap between fully observed times.
///
/// Coordinates observed only partially at intermediate times are not
/// conditioned on.
pub fn estimate_z_vector<M, S>(
    model: &M,
    theta: &[f64],
    obs: &ObservationSet,
    stats: &S,
    samples: usize,
    kernel: &KernelSpec,
    seed: Seed,
) -> Result<ZEstimate>
where
    M: ChainModel + ?Sized,
    S: SuffStatModel + ?Sized,
{
    if obs.dim() != model.dim() {
        return Err(FremError::InvalidInput(format!(
            "observations have dimension {}, model has {}",
            obs.dim(),
            model.dim()
        )));
    }
    let anchors = obs.anchors();
    if anchors.first() != Some(&0) || anchors.last() != Some(&(obs.len() - 1)) {
        return Err(FremError::InvalidInput(
            "first and last observations must be fully observed".into(),
        ));
    }
    let functional = AdditiveFunctional::new(stats);
    let mut z = vec![0.0; stats.stat_dim()];
    let mut gaps = Vec::with_capacity(anchors.len().saturating_sub(1));
    for (g, w) in anchors.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let (ta, tb) = (obs.times()[a], obs.times()[b]);
        let (x, y) = (obs.value(a), obs.value(b));
        if tb - ta == 1 {
            stats.add_step_stats(x, y, &mut z);
            gaps.push(GapDiagnostics {
                start: ta,
                end: tb,
                estimate: None,
            });
            continue;
        }
        let wrap = |e: FremError| FremError::GapFailure {
            gap: g,
            start: ta,
            end: tb,
            source: Box::new(e),
        };
        let query = BridgeQuery::new(ta, x.to_vec(), tb, y.to_vec()).map_err(wrap)?;
        let est = estimate_bridge(model, theta, &query, &functional, samples, kernel, seed.child(g as u64)).map_err(wrap)?;
        for (zi, r) in z.iter_mut().zip(&est.ratio) {
            *zi += r;
        }
        gaps.push(GapDiagnostics {
            start: ta,
            end: tb,
            estimate: Some(est),
        });
    }
    Ok(ZEstimate { z, gaps })
}
