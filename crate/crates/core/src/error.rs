use thiserror::Error;

use crate::lattice::FeatureSet;

/// Errors produced anywhere in the offline or online pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {needed} distinct sizes to fit a degree-{degree} polynomial, got {got}")]
    InsufficientSamples {
        degree: usize,
        needed: usize,
        got: usize,
    },
    #[error("least-squares design matrix is rank deficient")]
    DegenerateFit,
    #[error("curves are identical; intersection set is undefined")]
    IdenticalCurves,
    #[error("invalid cost polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("universe has {got} features; at most {max} are supported")]
    UniverseTooLarge { got: usize, max: usize },
    #[error("training failed for feature set {features}: {reason}")]
    TrainingFailed { features: FeatureSet, reason: String },
    #[error("dataset has no training items")]
    EmptyDataset,
    #[error("accuracy tie between candidates {a} and {b}")]
    AccuracyTie { a: FeatureSet, b: FeatureSet },
    #[error("no model fits within budget {budget} at size {n}")]
    NoFeasibleModel { n: f64, budget: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("oracle check failed: {0}")]
    OracleMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when the error stems from bad user input rather than from a
    /// failed computation. The CLI maps this to its exit code.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InsufficientSamples { .. }
            | Error::InvalidPolynomial(_)
            | Error::UniverseTooLarge { .. }
            | Error::EmptyDataset
            | Error::Invalid(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
