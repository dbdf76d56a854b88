use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mode index {0}; expected 1 or 2")]
    InvalidMode(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector has zero norm")]
    ZeroNorm,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0} instead of 1")]
    TraceNotUnity(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("heralding impossible: projected norm is zero")]
    HeraldImpossible,

    #[error("quadrature grid fails normalization check: integral {integral}")]
    GridNormalization { integral: f64 },

    #[error("ambiguous principal mode: {0}")]
    AmbiguousMode(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("no measurement data")]
    EmptyData,

    #[error("unphysical input: {0}")]
    Unphysical(String),

    #[error("phase unwrap ambiguity between delays {from:e} s and {to:e} s (gap {gap:.3} rad); sample delays more densely")]
    UnwrapAmbiguity { from: f64, to: f64, gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
