use std::path::Path;
use std::time::Instant;

use frem_core::estimator::GridFunctional;
use frem_core::rng::std_normal;
use frem_core::{
    default_bandwidth, estimate_bridge, fast_double_sum, naive_double_sum, run_replicates, BridgeQuery, FremConfig,
    KernelFamily, KernelSpec, Seed,
};

use crate::config::{ExperimentConfig, KernelName};
use crate::data::{self, csv_writer};
use crate::error::CliError;
use crate::zoo::Zoo;

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Mean and sample standard deviation; the deviation is `None` below two
/// values.
fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Least-squares slope of `log t` against `log n`.
pub fn loglog_slope(n: &[f64], t: &[f64]) -> Option<f64> {
    if n.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = t.iter().map(|v| v.max(1e-12).ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    cfg.simulate_block()?;
    let mut paths = csv_writer(&out.join("path.csv"))?;
    let mut obs = csv_writer(&out.join("observations.csv"))?;
    for (k, dt) in cfg.dts()?.into_iter().enumerate() {
        let zoo = Zoo::build(cfg.model()?, dt)?;
        let d = data::load(cfg, &zoo, k)?;
        let dim = zoo.chain.dim();
        data::write_path(&mut paths, dt, d.path.as_deref().unwrap_or_default(), dim, k == 0)?;
        data::write_observations(&mut obs, dt, &d.observations, k == 0)?;
        println!(
            "dt={} simulated {} steps, {} observation rows",
            opt_cell(dt),
            d.observations.horizon(),
            d.observations.len()
        );
    }
    paths.flush()?;
    obs.flush()?;
    Ok(())
}

pub fn frem(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let fb = cfg.section(&cfg.frem, "frem")?;
    let mut table = csv_writer(&out.join("frem.csv"))?;
    let mut hist = csv_writer(&out.join("histogram.csv"))?;
    for (k, dt) in cfg.dts()?.into_iter().enumerate() {
        let zoo = Zoo::build(cfg.model()?, dt)?;
        let stats = zoo.stats()?;
        let d = data::load(cfg, &zoo, k)?;
        let names = zoo.param_names();
        if fb.theta0.len() != names.len() {
            return Err(CliError::Config(format!(
                "frem.theta0 has {} entries, the model has {} parameters",
                fb.theta0.len(),
                names.len()
            )));
        }
        if k == 0 {
            let mut h = vec!["dt".to_string(), "iteration".into(), "samples".into(), "bandwidth".into()];
            for n in names {
                h.push(format!("mean_{n}"));
                h.push(format!("sd_{n}"));
            }
            h.extend(["likel".to_string(), "sd_likel".into(), "resets".into()]);
            h.extend(names.iter().map(|n| format!("mle_{n}")));
            table.write_record(h)?;
            let mut h = vec!["dt".to_string(), "iteration".into(), "replicate".into()];
            h.extend(names.iter().map(|n| n.to_string()));
            h.push("likel".into());
            hist.write_record(h)?;
        }
        let fc = FremConfig {
            theta0: fb.theta0.clone(),
            iterations: fb.iterations,
            samples0: fb.samples0,
            sample_growth: fb.sample_growth,
            bandwidth0: fb.bandwidth0,
            bandwidth_shrink: fb.bandwidth_shrink,
            compact_half_width: fb.compact_half_width,
            kernel: match fb.kernel {
                KernelName::Epanechnikov => KernelFamily::EpanechnikovProduct,
                KernelName::Gaussian => KernelFamily::GaussianTruncated,
            },
            seed: Seed::new(cfg.seed).child(1).child(k as u64).value(),
        };
        let runs = run_replicates(zoo.chain.as_ref(), stats.as_ref(), &d.observations, &fc, cfg.replicates)?;
        let mle = zoo.exact_mle(&d.observations);
        println!("dt={} replicates={} mle={mle:?}", opt_cell(dt), cfg.replicates);
        println!("{:>4} {:>10} {:>10} {:>14} {:>12} {:>12} {:>6}", "it", "N", "bandwidth", "mean", "sd", "likel", "resets");
        for it in 1..=fb.iterations {
            let entries: Vec<_> = runs.iter().map(|r| &r.trace[it]).collect();
            let mut row = vec![
                opt_cell(dt),
                it.to_string(),
                fc.samples(it - 1).to_string(),
                fc.bandwidth(it - 1).to_string(),
            ];
            let mut first = (None, None);
            for p in 0..names.len() {
                let vals: Vec<f64> = entries.iter().map(|e| e.theta[p]).collect();
                let (m, s) = mean_sd(&vals);
                if p == 0 {
                    first = (m, s);
                }
                row.push(opt_cell(m));
                row.push(opt_cell(s));
            }
            let likel: Vec<f64> = entries.iter().filter_map(|e| e.likel).collect();
            let (lm, ls) = mean_sd(&likel);
            let resets = entries.iter().filter(|e| e.reset).count();
            row.extend([opt_cell(lm), opt_cell(ls), resets.to_string()]);
            for p in 0..names.len() {
                row.push(opt_cell(mle.as_ref().map(|m| m[p])));
            }
            table.write_record(row)?;
            println!(
                "{it:>4} {:>10} {:>10.3e} {:>14.8} {:>12.3e} {:>12.6} {resets:>6}",
                fc.samples(it - 1),
                fc.bandwidth(it - 1),
                first.0.unwrap_or(f64::NAN),
                first.1.unwrap_or(f64::NAN),
                lm.unwrap_or(f64::NAN)
            );
            if fb.histogram_iterations.contains(&it) {
                for (r, e) in entries.iter().enumerate() {
                    let mut row = vec![opt_cell(dt), it.to_string(), r.to_string()];
                    row.extend(e.theta.iter().map(|v| v.to_string()));
                    row.push(opt_cell(e.likel));
                    hist.write_record(row)?;
                }
            }
        }
    }
    table.flush()?;
    hist.flush()?;
    Ok(())
}

pub fn bridge(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let bb = cfg.section(&cfg.bridge, "bridge")?;
    let theta = match (&bb.theta, cfg.data.as_ref().and_then(|d| d.simulate.as_ref())) {
        (Some(t), _) => t.clone(),
        (None, Some(s)) => s.truth.clone(),
        (None, None) => return Err(CliError::Config("bridge.theta is required without [data.simulate]".into())),
    };
    let mut w = csv_writer(&out.join("bridge.csv"))?;
    w.write_record([
        "dt",
        "component",
        "ratio",
        "ratio_se",
        "numerator",
        "numerator_se",
        "denominator",
        "denominator_se",
        "pairs_hit",
        "batches",
    ])?;
    for (k, dt) in cfg.dts()?.into_iter().enumerate() {
        let zoo = Zoo::build(cfg.model()?, dt)?;
        let dim = zoo.chain.dim();
        let query = BridgeQuery::new(bb.start_time, bb.start.clone(), bb.end_time, bb.end.clone())?.with_grid(bb.grid.clone())?;
        let bandwidth = match bb.bandwidth {
            Some(b) => b,
            None => default_bandwidth(bb.samples, dim, 1.0)?,
        };
        let kernel = KernelSpec::epanechnikov(dim, bandwidth)?;
        let (out_dim, labels): (usize, Vec<String>) = if bb.grid.is_empty() {
            (1, vec!["1".into()])
        } else {
            let labels = bb
                .grid
                .iter()
                .flat_map(|t| (1..=dim).map(move |c| format!("x{c}@{t}")))
                .collect();
            (bb.grid.len() * dim, labels)
        };
        let functional = GridFunctional::new(out_dim, move |args: &[f64], val: &mut [f64]| {
            if args.is_empty() {
                val[0] = 1.0;
            } else {
                val.copy_from_slice(args);
            }
        });
        let (mut ratios, mut nums, mut dens, mut hits) = (vec![Vec::new(); out_dim], vec![Vec::new(); out_dim], Vec::new(), Vec::new());
        for b in 0..bb.batches {
            let seed = Seed::new(cfg.seed).child(2).child(k as u64).child(b as u64);
            let e = estimate_bridge(zoo.chain.as_ref(), &theta, &query, &functional, bb.samples, &kernel, seed)?;
            for c in 0..out_dim {
                ratios[c].push(e.ratio[c]);
                nums[c].push(e.numerator[c]);
            }
            dens.push(e.denominator);
            hits.push(e.pairs_hit as f64);
        }
        let se = |xs: &[f64]| mean_sd(xs).1.map(|s| s / (xs.len() as f64).sqrt());
        let den = mean_sd(&dens).0;
        let hit = mean_sd(&hits).0;
        for c in 0..out_dim {
            let r = mean_sd(&ratios[c]).0;
            println!(
                "dt={} {}: ratio {:.8} (se {}), denominator {:.6e}, mean pairs hit {:.1}",
                opt_cell(dt),
                labels[c],
                r.unwrap(),
                opt_cell(se(&ratios[c])),
                den.unwrap(),
                hit.unwrap()
            );
            w.write_record([
                opt_cell(dt),
                labels[c].clone(),
                opt_cell(r),
                opt_cell(se(&ratios[c])),
                opt_cell(mean_sd(&nums[c]).0),
                opt_cell(se(&nums[c])),
                opt_cell(den),
                opt_cell(se(&dens)),
                opt_cell(hit),
                bb.batches.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn normal_cloud(n: usize, shift: f64, seed: Seed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n).map(|_| shift + std_normal(&mut rng)).collect()
}

fn best_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn bench(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let bb = cfg.section(&cfg.bench, "bench")?;
    let d = bb.dim;
    let mut w = csv_writer(&out.join("bench.csv"))?;
    w.write_record(["n", "dim", "bandwidth", "fast_seconds", "naive_seconds", "pairs_hit", "max_rel_dev"])?;
    let (mut fast_n, mut fast_t, mut naive_n, mut naive_t) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for e in bb.log2_min..=bb.log2_max {
        let n = 1usize << e;
        let f = normal_cloud(n * d, 0.0, Seed::new(cfg.seed).child(3).child(e as u64));
        let r = normal_cloud(n * d, 0.2, Seed::new(cfg.seed).child(4).child(e as u64));
        let bandwidth = bb.bandwidth_constant * (n as f64).powf(-1.0 / d as f64);
        let kernel = KernelSpec::epanechnikov(d, bandwidth)?;
        let combine = |i: usize, j: usize, kv: f64, a: &mut [f64]| {
            a[0] += kv;
            a[1] += kv * (f[i * d] - r[j * d]);
        };
        let mut fast = None;
        let ft = best_time(bb.repeats, || fast = Some(fast_double_sum(&f, &r, &kernel, 2, combine)));
        let fast = fast.unwrap();
        fast_n.push(n as f64);
        fast_t.push(ft);
        let (mut nt, mut dev) = (None, None);
        if e <= bb.naive_log2_max {
            let mut naive = None;
            let t = best_time(bb.repeats, || naive = Some(naive_double_sum(&f, &r, &kernel, 2, combine)));
            let naive = naive.unwrap();
            naive_n.push(n as f64);
            naive_t.push(t);
            nt = Some(t);
            let scale = naive.sums.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            dev = Some(
                fast.sums
                    .iter()
                    .zip(&naive.sums)
                    .map(|(a, b)| (a - b).abs() / scale)
                    .fold(0.0, f64::max),
            );
        }
        println!(
            "n=2^{e}: fast {ft:.4}s, naive {}, pairs {}, max rel dev {}",
            nt.map(|t| format!("{t:.4}s")).unwrap_or_else(|| "-".into()),
            fast.pairs_hit,
            opt_cell(dev)
        );
        w.write_record([
            n.to_string(),
            d.to_string(),
            bandwidth.to_string(),
            ft.to_string(),
            opt_cell(nt),
            fast.pairs_hit.to_string(),
            opt_cell(dev),
        ])?;
    }
    w.flush()?;
    let mut fit = csv_writer(&out.join("bench_fit.csv"))?;
    fit.write_record(["method", "exponent", "n_min", "n_max"])?;
    for (name, n, t) in [("fast", &fast_n, &fast_t), ("naive", &naive_n, &naive_t)] {
        let slope = loglog_slope(n, t);
        println!("{name} exponent: {}", opt_cell(slope));
        let lo = n.first().map(|v| v.to_string()).unwrap_or_default();
        let hi = n.last().map(|v| v.to_string()).unwrap_or_default();
        fit.write_record([name.to_string(), opt_cell(slope), lo, hi])?;
    }
    fit.flush()?;
    Ok(())
}
