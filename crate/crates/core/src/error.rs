use thiserror::Error;

/// Errors raised anywhere in the simulation or cancellation pipeline.
#[derive(Debug, Error)]
pub enum PimError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("observation point lies on the dipole axis (rho = {rho:.3e} m)")]
    Singular { rho: f64 },

    #[error("element {element} is singular at the observation point: {source}")]
    SingularElement {
        element: usize,
        #[source]
        source: Box<PimError>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("band outside Nyquist: {0}")]
    Nyquist(String),

    #[error("frame mismatch: {0}")]
    Frame(String),

    #[error("rank-deficient basis matrix (pivot {pivot} of {size})")]
    RankDeficient { pivot: usize, size: usize },

    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },

    #[error("divergence detected at epoch {epoch}: loss grew from {from:.3e} to {to:.3e}")]
    Divergence { epoch: usize, from: f64, to: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PimError>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PimError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        PimError::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        PimError::Dimension(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        PimError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        PimError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, PimError>;
