//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p must satisfy 1 < p <= inf, got {0}")]
    InvalidP(f64),
    #[error("spatial dimension n must be >= 1, got {0}")]
    InvalidDimension(usize),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge within the subdivision cap")]
    QuadratureNonConvergence,
    #[error("field value is not finite at a stencil point ({0})")]
    NonFiniteField(String),
    #[error("no sign change of phi along the projection segment")]
    ProjectionFailed,
    #[error("rasterization produced an empty interior")]
    EmptyInterior,
    #[error("dt {dt} exceeds the CFL bound {max_dt}")]
    CflViolation { dt: f64, max_dt: f64 },
    #[error("solver produced non-finite values at slice {slice}")]
    Unstable { slice: usize },
    #[error("point outside the admissible set: {0}")]
    OutOfDomain(String),
    #[error("expression parse error at byte {pos}: {msg}")]
    ExprParse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
