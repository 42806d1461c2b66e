//! Small dense maximizers used by the M-step and the likelihood oracles.

use crate::error::{FremError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Stopping rules for [`maximize_bfgs`].
#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Budget of objective-plus-gradient evaluations.
    pub max_evaluations: usize,
    /// Converged when `|∇f|_∞ ≤ gtol · (1 + |f|)`.
    pub gtol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_evaluations: 500,
            gtol: 1e-10,
        }
    }
}

/// Central-difference gradient with a step scaled to each coordinate.
pub fn numeric_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + x[i].abs());
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Quasi-Newton ascent with an Armijo backtracking line search. `f` returns
/// `-inf` (or NaN) outside its domain; such points are rejected by the line
/// search.
pub fn maximize_bfgs<F, G>(f: F, grad: G, x0: &[f64], opts: BfgsOptions) -> Result<Maximum>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(FremError::MStepFailure(format!("objective is not finite at the start point {x0:?}")));
    }
    let mut g = grad(&x);
    let mut evals = 1;
    // inverse Hessian of -f
    let mut h = identity(n);
    let mut stalls = 0;
    loop {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= opts.gtol * (1.0 + fx.abs()) {
            return Ok(Maximum { x, value: fx, evaluations: evals });
        }
        if evals >= opts.max_evaluations {
            return Err(FremError::MStepFailure(format!(
                "no convergence within {} evaluations (gradient {gnorm:e})",
                opts.max_evaluations
            )));
        }
        let mut dir = mat_vec(&h, &g);
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope > 0.0) {
            h = identity(n);
            dir = g.clone();
            slope = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        }
        let mut step = 1.0;
        let mut accepted = None;
        while evals < opts.max_evaluations {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let ft = f(&trial);
            evals += 1;
            // strict ascent: at round-off level the Armijo bound alone admits
            // steps that do not change f, and the search would cycle
            if ft.is_finite() && ft > fx && ft >= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                break;
            }
        }
        let Some((xn, fnew)) = accepted else {
            // no ascent possible along any useful direction: accept if the
            // gradient is already at round-off level
            if gnorm <= 1e-6 * (1.0 + fx.abs()) {
                return Ok(Maximum { x, value: fx, evaluations: evals });
            }
            if stalls == 0 && h != identity(n) {
                stalls += 1;
                h = identity(n);
                continue;
            }
            return Err(FremError::MStepFailure(format!("line search failed (gradient {gnorm:e})")));
        };
        let gn = grad(&xn);
        evals += 1;
        // BFGS update for minimizing -f: s = Δx, y = -(Δg)
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-300 {
            let hy = mat_vec(&h, &y);
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + c.abs() + d.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid scan followed by golden-section refinement around the best point.
pub fn maximize_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let h = (hi - lo) / grid as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=grid {
        let x = lo + i as f64 * h;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - h).max(lo);
    let b = (best.0 + h).min(hi);
    let refined = golden_section_max(&f, a, b, 1e-14);
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}
