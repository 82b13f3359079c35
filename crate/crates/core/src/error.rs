use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subdivision count {0}: need at least one cell per side")]
    InvalidSubdivision(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("non-finite function value {value} at ({x}, {y})")]
    NonFinite { x: f64, y: f64, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("problem uses {problem:?} boundary conditions but the space uses {space:?}")]
    BoundaryMismatch {
        problem: crate::fem::BoundaryCondition,
        space: crate::fem::BoundaryCondition,
    },

    #[error("KKT system has {unknowns} unknowns, above the cap of {cap}")]
    KktTooLarge { unknowns: usize, cap: usize },

    #[error("KKT system is singular")]
    SingularKkt,
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
