use thiserror::Error;

pub type Result<T> = std::result::Result<T, FremError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FremError {
    #[error("parameter {theta:?} is outside the model's admissible domain: {reason}")]
    ParameterDomain { theta: Vec<f64>, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite transition log-density at transition {index}")]
    EstimatorFailure { index: usize },

    #[error("model `{0}` provides no reverse-chain construction")]
    UnsupportedModel(String),

    #[error("reverse weight is singular at step {step}: y = {y:?}, z = {z:?}")]
    WeightSingularity { step: usize, y: Vec<f64>, z: Vec<f64> },

    #[error(
        "degenerate bridge: kernel denominator {denominator:e} with {pairs_hit} active pairs \
         (bandwidth {bandwidth:e}); try a larger bandwidth"
    )]
    DegenerateBridge {
        denominator: f64,
        pairs_hit: u64,
        bandwidth: f64,
    },

    #[error("bridge for observation gap {gap} ({start}..{end}) failed: {source}")]
    GapFailure {
        gap: usize,
        start: usize,
        end: usize,
        #[source]
        source: Box<FremError>,
    },

    #[error("M-step failed: {0}")]
    MStepFailure(String),

    #[error("sufficient statistic is not integrable: {0}")]
    NonIntegrable(String),
}

impl FremError {
    /// True for failures caused by Monte Carlo degeneracy rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            FremError::EstimatorFailure { .. }
            | FremError::WeightSingularity { .. }
            | FremError::DegenerateBridge { .. }
            | FremError::MStepFailure(_) => true,
            FremError::GapFailure { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
