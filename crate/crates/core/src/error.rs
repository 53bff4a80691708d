use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile is not admissible: psi(0) = {left:e}, psi(1) = {right:e}")]
    NotAdmissible { left: f64, right: f64 },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("no critical viscosity: mu_c = 0 for k0 = {k0}, k1 = {k1}")]
    NoCriticalViscosity { k0: f64, k1: f64 },

    #[error("bracket expansion failed after exploring [{low:e}, {high:e}]")]
    BracketExpansion { low: f64, high: f64 },

    #[error("dispersion determinant is not finite at lambda = {0:e}")]
    Degenerate(f64),

    #[error("support [{low}, {high}] is not inside (0, {limit})")]
    Support { low: f64, high: f64, limit: f64 },

    #[error("CFL violation: dt = {dt:e} exceeds {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("singular solve for mode {0}")]
    SingularMode(usize),

    #[error("state mismatch: {0}")]
    StateMismatch(String),

    #[error("zero field")]
    ZeroField,
}

pub type Result<T> = std::result::Result<T, Error>;
