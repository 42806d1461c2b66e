//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub model: Option<ModelConfig>,
    pub data: Option<DataConfig>,
    pub frem: Option<FremBlock>,
    pub bridge: Option<BridgeBlock>,
    pub bench: Option<BenchBlock>,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Ou,
    Cir,
    Hmm2d,
}

/// A scalar or a list, so `dt = 0.1` and `dt = [0.1, 0.05]` both parse.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    /// Time step(s) for `ou` and `cir`.
    pub dt: Option<OneOrMany>,
    /// Diffusion exponent for `cir`.
    pub gamma: Option<f64>,
    /// Noise covariance for `hmm2d`.
    pub sigma: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Observations CSV as written by `simulate`.
    pub path: Option<PathBuf>,
    pub simulate: Option<SimulateBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub truth: Vec<f64>,
    pub x0: Vec<f64>,
    pub horizon: usize,
    /// Observation interval. For `hmm2d` the first coordinate is observed at
    /// every step and the second at multiples of `every`.
    pub every: usize,
    /// Data seed; the top-level seed is used when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FremBlock {
    pub theta0: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_samples0")]
    pub samples0: usize,
    #[serde(default = "four")]
    pub sample_growth: f64,
    #[serde(default = "default_bandwidth0")]
    pub bandwidth0: f64,
    #[serde(default = "four")]
    pub bandwidth_shrink: f64,
    #[serde(default = "default_half_width")]
    pub compact_half_width: f64,
    #[serde(default)]
    pub kernel: KernelName,
    /// Iterations whose replicate estimates go to `histogram.csv`.
    #[serde(default = "default_histogram")]
    pub histogram_iterations: Vec<usize>,
}

fn default_iterations() -> usize {
    6
}

fn default_samples0() -> usize {
    2000
}

fn four() -> f64 {
    4.0
}

fn default_bandwidth0() -> f64 {
    5e-4
}

fn default_half_width() -> f64 {
    10.0
}

fn default_histogram() -> Vec<usize> {
    vec![1, 5]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    #[default]
    Epanechnikov,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeBlock {
    /// Parameter of the chain; defaults to the simulation truth.
    pub theta: Option<Vec<f64>>,
    pub start_time: usize,
    pub end_time: usize,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// Times whose states are estimated; empty estimates the transition
    /// density alone.
    #[serde(default)]
    pub grid: Vec<usize>,
    pub samples: usize,
    /// Defaults to `samples^{-1/d}`.
    pub bandwidth: Option<f64>,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_batches() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchBlock {
    #[serde(default = "default_log2_min")]
    pub log2_min: u32,
    #[serde(default = "default_log2_max")]
    pub log2_max: u32,
    /// Largest size at which the naive sum is also timed.
    #[serde(default = "default_naive_max")]
    pub naive_log2_max: u32,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Bandwidth constant `c` in `ε = c·N^{-1/d}`.
    #[serde(default = "default_bench_c")]
    pub bandwidth_constant: f64,
}

fn default_log2_min() -> u32 {
    12
}

fn default_log2_max() -> u32 {
    20
}

fn default_naive_max() -> u32 {
    14
}

fn default_repeats() -> usize {
    3
}

fn default_bench_c() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Parses and validates; relative data paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let (Some(base), Some(DataConfig { path: Some(p), .. })) = (base, cfg.data.as_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |s: String| Err(CliError::Config(s));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if let Some(m) = &self.model {
            Self::validate_model(m)?;
        }
        if let Some(d) = &self.data {
            match (&d.path, &d.simulate) {
                (Some(p), None) => {
                    if !p.is_file() {
                        return bad(format!("observation file {} does not exist", p.display()));
                    }
                }
                (None, Some(s)) => {
                    if s.every == 0 || s.horizon == 0 {
                        return bad("data.simulate.horizon and data.simulate.every must be positive".into());
                    }
                }
                _ => return bad("data needs exactly one of `path` or `simulate`".into()),
            }
        }
        if let Some(b) = &self.bench {
            if b.log2_min > b.log2_max || b.log2_max > 26 || b.log2_min < 1 {
                return bad(format!("bench sizes 2^{}..2^{} are out of range", b.log2_min, b.log2_max));
            }
            if b.dim == 0 || b.dim > 3 || b.repeats == 0 {
                return bad("bench.dim must be 1..=3 and bench.repeats positive".into());
            }
        }
        if let Some(b) = &self.bridge {
            if b.batches == 0 || b.samples < 2 {
                return bad("bridge.batches must be positive and bridge.samples at least 2".into());
            }
        }
        Ok(())
    }

    fn validate_model(m: &ModelConfig) -> Result<(), CliError> {
        let bad = |s: String| Err(CliError::Config(s));
        match m.name {
            ModelName::Ou | ModelName::Cir => {
                let Some(dts) = &m.dt else {
                    return bad("model.dt is required for ou and cir".into());
                };
                let dts = dts.values();
                if dts.is_empty() || dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                    return bad(format!("model.dt must be positive, got {dts:?}"));
                }
                if m.name == ModelName::Cir && m.gamma.is_none() {
                    return bad("model.gamma is required for cir".into());
                }
            }
            ModelName::Hmm2d => {
                if m.sigma.is_none() {
                    return bad("model.sigma is required for hmm2d".into());
                }
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [model] block".into()))
    }

    /// Time steps to run; a single placeholder for models without one.
    pub fn dts(&self) -> Result<Vec<Option<f64>>, CliError> {
        let m = self.model()?;
        Ok(match &m.dt {
            Some(d) if m.name != ModelName::Hmm2d => d.values().into_iter().map(Some).collect(),
            _ => vec![None],
        })
    }

    pub fn simulate_block(&self) -> Result<&SimulateBlock, CliError> {
        self.data
            .as_ref()
            .and_then(|d| d.simulate.as_ref())
            .ok_or_else(|| CliError::Config("this command needs a [data.simulate] block".into()))
    }

    pub fn section<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        block
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("this command needs a [{name}] block")))
    }
}
