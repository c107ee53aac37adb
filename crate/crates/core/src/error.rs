use thiserror::Error;

use crate::manifold::ManifoldId;

pub type Result<T> = std::result::Result<T, Error>;

/// One row of the dyadic refinement table produced by real-time flow
/// evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RefinementRow {
    pub level: u32,
    pub time: f64,
    pub estimate: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("manifold mismatch: expected {expected}, found {found}")]
    ManifoldMismatch {
        expected: ManifoldId,
        found: ManifoldId,
    },

    #[error("point {0:?} is on or near the cut locus of the base point; refine the dyadic level")]
    CutLocus(Vec<f64>),

    #[error("vector is not tangent at the base point (inner product {0:e})")]
    NotTangent(f64),

    #[error("invalid quaternion: {0}")]
    InvalidQuaternion(String),

    #[error("lift evaluation failed: {0}")]
    Interpolation(String),

    #[error("integrator step rejected: one step moved {moved:.3e} > {limit:.3e}")]
    StepRejected { moved: f64, limit: f64 },

    #[error("denominator {0} is not reachable from the index set; use real-time evaluation")]
    UnreachableDenominator(u64),

    #[error("index {0} is missing from the root system")]
    MissingIndex(u64),

    #[error("dyadic approximants are not Cauchy ({} levels evaluated)", table.len())]
    ConvergenceFailure { table: Vec<RefinementRow> },

    #[error("functional square root did not converge: residual {residual:.3e} > tolerance {tolerance:.3e}")]
    SolverFailure {
        residual: f64,
        tolerance: f64,
        history: Vec<f64>,
    },

    #[error("square-root chain aborted at level {level}: {source}")]
    ChainAborted {
        level: u32,
        /// Roots solved before the failure, as `(b, g_b)`.
        partial: Vec<(u64, crate::diffeo::Diffeo)>,
        source: Box<Error>,
    },

    #[error("diffeomorphism is not orientation preserving of degree 1: {0}")]
    NotDegreeOne(String),

    #[error("quaternions are antipodal; pick an intermediate axis")]
    AntipodalAxis,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
