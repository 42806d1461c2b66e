//! Forward-reverse Monte Carlo estimation of Markov chain bridge
//! expectations and the forward-reverse EM algorithm built on it.

pub mod chain;
pub mod em;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod models;
pub mod optimize;
pub mod reverse;
pub mod rng;

pub use chain::{path_loglikelihood, simulate_forward, ChainModel, ForwardPath, ObservationSet};
pub use em::{
    m_step, path_stats, q_function, q_value, run_frem, run_replicates, stable_iterate, FremConfig, FremState,
    SuffStatModel, TraceEntry,
};
pub use error::{FremError, Result};
pub use estimator::{
    estimate_bridge, estimate_z_vector, fast_double_sum, naive_double_sum, BridgeFunctional, BridgeQuery, FrEstimate,
};
pub use kernel::{default_bandwidth, KernelFamily, KernelSpec};
pub use reverse::{check_reverse_identity, simulate_reverse, ReverseChain, ReversePath};
pub use rng::Seed;
