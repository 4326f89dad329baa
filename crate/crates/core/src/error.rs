use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },

    #[error("metric is not positive definite at {point:?} (eigenvalue ratio {ratio:e})")]
    SingularMetric { point: Vec<f64>, ratio: f64 },

    #[error("immersion is rank deficient at {point:?}: smallest singular value {sigma:e}")]
    RankDeficient { point: Vec<f64>, sigma: f64 },

    #[error("vector {index} is linearly dependent on its predecessors (pivot {pivot:e})")]
    Dependent { index: usize, pivot: f64 },

    #[error("vector is not normal to the submanifold (tangential residual {residual:e})")]
    NotNormal { residual: f64 },

    #[error("slant angle undefined: direction is proportional to the structure vector field")]
    AlongXi,

    #[error("ambient is not Kenmotsu (residual {residual:e})")]
    NotKenmotsu { residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    #[error("slant constant {0} outside the open interval (0, pi/2)")]
    ThetaOutOfRange(f64),

    #[error("scenario document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn eval(point: &[f64], source: EvalError) -> Error {
        Error::Eval {
            point: point.to_vec(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
