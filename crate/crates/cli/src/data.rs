//! Observation data: simulation, CSV output and CSV input.
//!
//! Path and observation files share the layout `dt,time,x1[,x2]`. The `dt`
//! cell is empty for models without a time step and a coordinate cell is
//! empty where that coordinate was not observed.

use std::io::Write;
use std::path::Path;

use frem_core::{simulate_forward, ObservationSet, Seed};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::zoo::Zoo;

pub struct Dataset {
    pub observations: ObservationSet,
    /// Full simulated path, row-major; absent for data read from a file.
    pub path: Option<Vec<f64>>,
}

/// Data for the `k`-th time step of the config.
pub fn load(cfg: &ExperimentConfig, zoo: &Zoo, k: usize) -> Result<Dataset, CliError> {
    let data = cfg.section(&cfg.data, "data")?;
    if let Some(p) = &data.path {
        let observations = read_observations(p, zoo.dt, zoo.chain.dim())?;
        return Ok(Dataset { observations, path: None });
    }
    let sim = cfg.simulate_block()?;
    let seed = Seed::new(sim.seed.unwrap_or(cfg.seed)).child(0).child(k as u64);
    let path = simulate_forward(zoo.chain.as_ref(), &sim.truth, &sim.x0, 0, sim.horizon, seed)?;
    let observations = zoo.observe(&path.states, sim.every)?;
    Ok(Dataset {
        observations,
        path: Some(path.states),
    })
}

fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["dt".to_string(), "time".to_string()];
    h.extend((1..=dim).map(|c| format!("x{c}")));
    h
}

fn dt_cell(dt: Option<f64>) -> String {
    dt.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub fn write_path<W: Write>(w: &mut csv::Writer<W>, dt: Option<f64>, states: &[f64], dim: usize, with_header: bool) -> Result<(), CliError> {
    if with_header {
        w.write_record(header(dim))?;
    }
    for (t, x) in states.chunks_exact(dim).enumerate() {
        let mut row = vec![dt_cell(dt), t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        w.write_record(row)?;
    }
    Ok(())
}

pub fn write_observations<W: Write>(w: &mut csv::Writer<W>, dt: Option<f64>, obs: &ObservationSet, with_header: bool) -> Result<(), CliError> {
    let dim = obs.dim();
    if with_header {
        w.write_record(header(dim))?;
    }
    for (i, &t) in obs.times().iter().enumerate() {
        let mut row = vec![dt_cell(dt), t.to_string()];
        for (c, v) in obs.value(i).iter().enumerate() {
            row.push(if obs.is_observed(i, c) { v.to_string() } else { String::new() });
        }
        w.write_record(row)?;
    }
    Ok(())
}

/// Rows of `path` whose `dt` cell equals `dt` (or all rows when the file has
/// no time steps).
pub fn read_observations(path: &Path, dt: Option<f64>, dim: usize) -> Result<ObservationSet, CliError> {
    let bad = |s: String| CliError::Config(format!("{}: {s}", path.display()));
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.len() != dim + 2 {
        return Err(bad(format!("expected columns dt,time and {dim} coordinates")));
    }
    let (mut times, mut values, mut mask) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let row_dt = rec[0].trim();
        let keep = match (dt, row_dt.is_empty()) {
            (_, true) => true,
            (Some(d), false) => row_dt.parse::<f64>().map_err(|e| bad(format!("bad dt `{row_dt}`: {e}")))? == d,
            (None, false) => true,
        };
        if !keep {
            continue;
        }
        times.push(rec[1].trim().parse::<usize>().map_err(|e| bad(format!("bad time `{}`: {e}", &rec[1])))?);
        let (mut v, mut m) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
        for c in 0..dim {
            let cell = rec[2 + c].trim();
            if cell.is_empty() {
                v.push(0.0);
                m.push(false);
            } else {
                v.push(cell.parse::<f64>().map_err(|e| bad(format!("bad value `{cell}`: {e}")))?);
                m.push(true);
            }
        }
        values.push(v);
        mask.push(m);
    }
    if times.is_empty() {
        return Err(bad(format!("no rows for dt = {}", dt_cell(dt))));
    }
    let mask = if mask.iter().flatten().all(|&o| o) { None } else { Some(mask) };
    Ok(ObservationSet::with_mask(times, values, mask)?)
}
