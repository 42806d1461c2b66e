//! Model construction from the `[model]` block.

use frem_core::models::{cir_suffstats, hmm_suffstats, ou_exact_mle, ou_suffstats, CirModel, Hmm2dModel, OuModel};
use frem_core::{ChainModel, ObservationSet, Result, SuffStatModel};

use crate::config::{ModelConfig, ModelName};

pub struct Zoo {
    pub name: ModelName,
    pub dt: Option<f64>,
    pub chain: Box<dyn ChainModel>,
    gamma: f64,
    sigma: [[f64; 2]; 2],
}

impl Zoo {
    /// `dt` is ignored for `hmm2d`. The config is assumed validated.
    pub fn build(cfg: &ModelConfig, dt: Option<f64>) -> Result<Self> {
        let gamma = cfg.gamma.unwrap_or(0.0);
        let sigma = cfg.sigma.unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
        let chain: Box<dyn ChainModel> = match cfg.name {
            ModelName::Ou => Box::new(OuModel::new(dt.unwrap_or(f64::NAN))?),
            ModelName::Cir => Box::new(CirModel::new(dt.unwrap_or(f64::NAN), gamma)?),
            ModelName::Hmm2d => Box::new(Hmm2dModel::new(sigma)?),
        };
        Ok(Zoo {
            name: cfg.name,
            dt: if cfg.name == ModelName::Hmm2d { None } else { dt },
            chain,
            gamma,
            sigma,
        })
    }

    /// Built on demand: the CIR statistics refuse γ ≥ 1/2, which only
    /// matters for estimation.
    pub fn stats(&self) -> Result<Box<dyn SuffStatModel>> {
        Ok(match self.name {
            ModelName::Ou => Box::new(ou_suffstats(self.dt.unwrap())?),
            ModelName::Cir => Box::new(cir_suffstats(self.dt.unwrap(), self.gamma)?),
            ModelName::Hmm2d => Box::new(hmm_suffstats(self.sigma)?),
        })
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self.name {
            ModelName::Ou => &["lambda"],
            ModelName::Cir => &["sigma", "lambda", "theta"],
            ModelName::Hmm2d => &["theta1", "theta2"],
        }
    }

    /// Observations of a simulated path under the model's observation scheme.
    pub fn observe(&self, path: &[f64], every: usize) -> Result<ObservationSet> {
        match self.name {
            ModelName::Hmm2d => Hmm2dModel::observe(path, every),
            _ => ObservationSet::subsample(path, self.chain.dim(), every),
        }
    }

    /// Exact incomplete-data MLE where one is available.
    pub fn exact_mle(&self, obs: &ObservationSet) -> Option<Vec<f64>> {
        match self.name {
            ModelName::Ou => ou_exact_mle(obs, self.dt.unwrap())
                .ok()
                .filter(|m| !m.flat)
                .map(|m| vec![m.lambda]),
            _ => None,
        }
    }
}
