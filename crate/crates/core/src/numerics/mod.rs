//! Small dense numerical kernels: adaptive integration, damped Newton,
//! finite-difference Jacobians, eigenvalues of matrices up to 4x4 and
//! linear-stability classification.

mod eigen;
mod integrate;
mod jacobian;
mod newton;
mod stability;

pub use eigen::{eigenvalues, EigenSet};
pub use integrate::{
    integrate, FnSystem, IntegrateOptions, Method, OdeSystem, Output, TimedEvent, Tolerance,
    Trajectory,
};
pub use jacobian::{fd_jacobian, DEFAULT_FD_STEP};
pub use newton::{newton_solve, NewtonOptions, NewtonSolution};
pub use stability::{classify, StabilityClass, StabilityKind, IMAG_ZERO_TOL};

pub use nalgebra::{Complex, DMatrix};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("finite-difference evaluation produced a non-finite value in column {column}")]
    NonFiniteColumn { column: usize },
    #[error("step size underflow at t = {t} s; the problem is too stiff for the chosen method")]
    StiffnessFailure { t: f64, state: Vec<f64> },
    #[error("step budget exhausted at t = {t} s")]
    TooManySteps { t: f64, state: Vec<f64> },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual_norm:e})")]
    NonConvergence {
        best: Vec<f64>,
        residual_norm: f64,
        iterations: usize,
    },
    #[error("Jacobian is singular")]
    SingularJacobian { x: Vec<f64> },
    #[error("eigenvalue solver supports dimensions 1 to 4, got {0}")]
    UnsupportedDimension(usize),
    #[error("QR iteration failed to converge")]
    EigenNoConvergence,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `max_i |x_i| / scale_i`.
pub fn scaled_max_norm(x: &[f64], scales: &[f64]) -> f64 {
    x.iter()
        .zip(scales)
        .map(|(v, s)| (v / s).abs())
        .fold(0.0, f64::max)
}

/// `max_i |a_i - b_i| / scale_i`.
pub fn scaled_distance(a: &[f64], b: &[f64], scales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scales)
        .map(|((x, y), s)| ((x - y) / s).abs())
        .fold(0.0, f64::max)
}
