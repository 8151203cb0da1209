use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant to an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("operator is not Hermitian: max |A_ij - conj(A_ji)| = {max_dev:e} at ({row}, {col})")]
    NotHermitian { max_dev: f64, row: usize, col: usize },

    #[error("capacity exceeded: {what} = {value} > {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },

    #[error("integrator step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("singular inertia: moment {index} is {value:e}")]
    SingularInertia { index: usize, value: f64 },

    #[error("separatrix: ell^2/(2H) = {varpi} coincides with the middle moment")]
    Separatrix { varpi: f64 },

    #[error("repeated moments {0:?}; use symmetric_top_solution")]
    RepeatedMoments(Vec<f64>),

    #[error("near-degenerate values at indices {0} and {1}")]
    Degenerate(usize, usize),

    #[error("resonance: omega03^2 = 3 omega08^2 must be treated separately")]
    Resonance,

    #[error("base point is not stationary: |rhs| = {0:e}")]
    NotStationary(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
