//! Steady-state branch tracing, pointwise stability, singular-point
//! detection and two-parameter fold loci.
//!
//! Everything is written against the [`Parametric`] trait so the same code
//! traces the reactor model and the small analytic systems used in tests.

mod branch;
mod family;
mod hysteresis;
mod locus;
mod singular;

pub use branch::{trace_branch, trace_model_branch, StepControl};
pub use family::{analyze, feed_state, seed_steady_state, solve_steady, ModelFamily, Parametric};
pub use hysteresis::{coexisting_states, CoexistenceReport};
pub use locus::{trace_fold_locus, trace_model_fold_locus, FoldLocus};
pub use singular::{detect_singularities, BISECTION_MAX_ITER, PARAM_RTOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ParamRef;
use crate::numerics::{Complex, EigenSet, NumericsError, StabilityClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error("no steady state found at the start of the branch: {0}")]
    Seed(NumericsError),
    #[error("invalid range ({lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("fold could not be continued from its seed point")]
    DegenerateLocus,
    #[error("branch has {0} records; at least 2 are needed")]
    TooFewRecords(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Pressures and conversion recomputed from a model steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub p1: f64,
    pub p1_eq: f64,
    pub p2: Option<f64>,
    pub p2_eq: Option<f64>,
    /// `1 - c1 / c1_in`.
    pub conversion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateRecord {
    pub param_value: f64,
    pub state: Vec<f64>,
    pub eigen: EigenSet,
    pub stability: StabilityClass,
    pub jacobian_det: f64,
    /// Scaled residual infinity norm at the accepted point.
    pub residual_norm: f64,
    pub derived: Option<Derived>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    Fold,
    Hopf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    pub kind: SingularKind,
    pub param_value: f64,
    pub state: Vec<f64>,
    pub crossing_eigenvalue: Complex<f64>,
    /// Set when bisection ran out of iterations or a bisection solve failed.
    pub low_confidence: bool,
    /// Index of the record just before the crossing.
    pub after_record: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub param: Option<ParamRef>,
    pub records: Vec<SteadyStateRecord>,
    pub singular_points: Vec<SingularPoint>,
    /// The trace stopped before reaching the end of its range.
    pub truncated: bool,
}

impl Branch {
    pub fn folds(&self) -> impl Iterator<Item = &SingularPoint> {
        self.singular_points
            .iter()
            .filter(|s| s.kind == SingularKind::Fold)
    }

    pub fn hopfs(&self) -> impl Iterator<Item = &SingularPoint> {
        self.singular_points
            .iter()
            .filter(|s| s.kind == SingularKind::Hopf)
    }

    pub fn params(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.param_value).collect()
    }

    /// Component `i` of the state along the branch.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.state[i]).collect()
    }
}
