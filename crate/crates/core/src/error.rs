use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("numerical degeneracy in {context}: {detail}")]
    Degenerate { context: &'static str, detail: String },

    #[error("point outside chart: |a| = {norm:.6} exceeds radius {radius}")]
    ChartRadiusExceeded { norm: f64, radius: f64 },

    #[error("finite-difference step {step} too large for chart margin {margin}")]
    StepTooLarge { step: f64, margin: f64 },

    #[error("point too close to the zero locus of tau (tau = {tau:.3e}, need > {delta:.3e})")]
    NearZeroLocus { tau: f64, delta: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("premise violated: {0}")]
    Premise(String),

    #[error("computation failed: {0}")]
    Computation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub(crate) fn degenerate(context: &'static str, detail: impl Into<String>) -> Self {
        LabError::Degenerate { context, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
