//! Independent oracles for the integration tests. Nothing here calls the
//! library's estimators; linear-Gaussian quantities are computed directly.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Prior moments of `X_1, …, X_g` for the OU chain started at `x`:
/// `E X_k = a^k x`, `Cov(X_j, X_k) = a^{|j-k|} v_{min(j,k)}`,
/// `v_n = Δt Σ_{i<n} a^{2i}`.
pub fn ou_prior(x: f64, a: f64, dt: f64, g: usize) -> (DVector<f64>, DMatrix<f64>) {
    let v = |n: usize| (0..n).map(|i| dt * a.powi(2 * i as i32)).sum::<f64>();
    let mean = DVector::from_fn(g, |k, _| a.powi(k as i32 + 1) * x);
    let cov = DMatrix::from_fn(g, g, |j, k| {
        let (j, k) = (j + 1, k + 1);
        a.powi((j as i32 - k as i32).abs()) * v(j.min(k))
    });
    (mean, cov)
}

/// Moments of `X_1, …, X_{g-1}` given `X_0 = x`, `X_g = y` (Gaussian
/// conditioning on the last coordinate).
pub fn ou_bridge(x: f64, y: f64, a: f64, dt: f64, g: usize) -> (DVector<f64>, DMatrix<f64>) {
    let (m, c) = ou_prior(x, a, dt, g);
    let n = g - 1;
    let cgg = c[(n, n)];
    let mean = DVector::from_fn(n, |k, _| m[k] + c[(k, n)] / cgg * (y - m[n]));
    let cov = DMatrix::from_fn(n, n, |j, k| c[(j, k)] - c[(j, n)] * c[(k, n)] / cgg);
    (mean, cov)
}

/// `E[X_k | X_0 = x, X_g = y]`.
pub fn ou_bridge_mean(x: f64, y: f64, a: f64, dt: f64, g: usize, k: usize) -> f64 {
    ou_bridge(x, y, a, dt, g).0[k - 1]
}

/// Exact conditional expectations of `(Σ x_{k-1}Δx_k, Σ x_{k-1}²)` over one
/// gap of `g` steps.
pub fn ou_gap_stats(x: f64, y: f64, a: f64, dt: f64, g: usize) -> [f64; 2] {
    let (mu, cov) = ou_bridge(x, y, a, dt, g);
    // full vector X_0..X_g with moments; endpoints fixed
    let mean = |k: usize| if k == 0 { x } else if k == g { y } else { mu[k - 1] };
    let c = |j: usize, k: usize| {
        if j == 0 || k == 0 || j == g || k == g {
            0.0
        } else {
            cov[(j - 1, k - 1)]
        }
    };
    let mut s = [0.0; 2];
    for k in 1..=g {
        let exx = c(k - 1, k - 1) + mean(k - 1) * mean(k - 1);
        let exy = c(k - 1, k) + mean(k - 1) * mean(k);
        s[0] += exy - exx;
        s[1] += exx;
    }
    s
}

/// Exact EM map for OU data observed at `times` (values `xs`).
pub fn ou_exact_em_step(times: &[usize], xs: &[f64], dt: f64, lambda: f64) -> f64 {
    let a = 1.0 + lambda * dt;
    let mut z = [0.0; 2];
    for i in 1..times.len() {
        let g = times[i] - times[i - 1];
        let s = if g == 1 {
            [xs[i - 1] * (xs[i] - xs[i - 1]), xs[i - 1] * xs[i - 1]]
        } else {
            ou_gap_stats(xs[i - 1], xs[i], a, dt, g)
        };
        z[0] += s[0];
        z[1] += s[1];
    }
    z[0] / (dt * z[1])
}

/// Density of `X_n` given `X_0 = x` for OU: `N(a^n x, v_n)`.
pub fn ou_n_step_density(x: f64, y: f64, a: f64, dt: f64, n: usize) -> f64 {
    let v: f64 = (0..n).map(|i| dt * a.powi(2 * i as i32)).sum();
    normal_pdf(y, a.powi(n as i32) * x, v)
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Prints one acceptance line and returns whether it passed.
pub fn report(criterion: &str, passed: bool, detail: &str) -> bool {
    println!("[{}] {criterion}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

/// Complete-data log-likelihood of an OU path.
pub fn ou_complete_loglik(path: &[f64], dt: f64, lambda: f64) -> f64 {
    path.windows(2)
        .map(|w| normal_pdf(w[1], w[0] * (1.0 + lambda * dt), dt).ln())
        .sum()
}

/// Complete-data log-likelihood of the Euler CIR-type path with parameters
/// `(σ, λ, θ)`.
pub fn cir_complete_loglik(path: &[f64], dt: f64, gamma: f64, p: [f64; 3]) -> f64 {
    let [s, l, t] = p;
    path.windows(2)
        .map(|w| {
            let sd = s * w[0].abs().powf(gamma) * dt.sqrt();
            let mean = w[0] + l * (t - w[0]) * dt;
            -0.5 * (2.0 * PI).ln() - sd.ln() - (w[1] - mean).powi(2) / (2.0 * sd * sd)
        })
        .sum()
}

/// Complete-data log-likelihood of the 2-D chain `X_{n+1} ~ N(θ + X_n², Σ)`
/// for a row-major path.
pub fn hmm_complete_loglik(path: &[f64], sigma: [[f64; 2]; 2], theta: [f64; 2]) -> f64 {
    let s = DMatrix::from_row_slice(2, 2, &[sigma[0][0], sigma[0][1], sigma[1][0], sigma[1][1]]);
    let omega = s.clone().try_inverse().unwrap();
    let log_det = s.determinant().ln();
    path.chunks_exact(2)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| {
            let v = DVector::from_fn(2, |i, _| w[1][i] - theta[i] - w[0][i] * w[0][i]);
            -(2.0 * PI).ln() - 0.5 * log_det - 0.5 * (v.transpose() * &omega * &v)[(0, 0)]
        })
        .sum()
}

/// Complete-data maximizer `[σ², λ, θ]` by weighted least squares of
/// `X_{k+1}` on `(X_k, 1)` with weights `|X_k|^{-2γ}`.
pub fn cir_wls(path: &[f64], dt: f64, gamma: f64) -> [f64; 3] {
    let n = path.len() - 1;
    let w: Vec<f64> = path[..n].iter().map(|x| x.abs().powf(-2.0 * gamma)).collect();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { path[i] } else { 1.0 });
    let wm = DMatrix::from_diagonal(&DVector::from_vec(w.clone()));
    let y = DVector::from_row_slice(&path[1..]);
    let normal = design.transpose() * &wm * &design;
    let rhs = design.transpose() * &wm * &y;
    let coef = normal.lu().solve(&rhs).unwrap();
    let (a, b) = (coef[0], coef[1]);
    let lambda = (1.0 - a) / dt;
    let theta = b / (lambda * dt);
    let rss: f64 = (0..n).map(|i| w[i] * (path[i + 1] - a * path[i] - b).powi(2)).sum();
    [rss / (n as f64 * dt), lambda, theta]
}

/// Fixed point of [`ou_exact_em_step`], i.e. the incomplete-data MLE.
pub fn ou_em_fixed_point(times: &[usize], xs: &[f64], dt: f64, start: f64) -> f64 {
    let mut l = start;
    for _ in 0..10_000 {
        let next = ou_exact_em_step(times, xs, dt, l);
        if (next - l).abs() < 1e-14 {
            return next;
        }
        l = next;
    }
    l
}

/// Expected number of kernel-active forward/reverse pairs for an OU bridge
/// over `g` steps split at the midpoint, with `m` samples per side and
/// bandwidth `eps`: `m² · 2ε · a^{g/2} p_g(x, y)`.
pub fn ou_expected_pairs(x: f64, y: f64, lambda: f64, dt: f64, g: usize, m: usize, eps: f64) -> f64 {
    let a = 1.0 + lambda * dt;
    (m as f64).powi(2) * 2.0 * eps * a.powi((g - g / 2) as i32) * ou_n_step_density(x, y, a, dt, g)
}
