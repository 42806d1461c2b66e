//! Concrete chains: Ornstein-Uhlenbeck, a quadratic two-dimensional hidden
//! Markov chain and a CIR-type diffusion discretization.

mod cir;
mod hmm;
mod ou;

pub use cir::{cir_maximizer, cir_reverse, cir_suffstats, CirModel, CirReverse, CirStats};
pub use hmm::{hmm_score, hmm_suffstats, Hmm2dModel, HmmReverse, HmmStats};
pub use ou::{ou_exact_mle, ou_incomplete_loglik, ou_suffstats, OuMle, OuModel, OuStats};
