use super::family::solve_steady;
use super::{analyze, Branch, ContinuationError, Parametric, SteadyStateRecord};
use crate::numerics::{scaled_distance, NewtonOptions, StabilityKind};

/// All distinct steady states at one parameter value that lie on a traced
/// branch.
#[derive(Debug, Clone, PartialEq)]
pub struct CoexistenceReport {
    pub param_value: f64,
    pub states: Vec<SteadyStateRecord>,
}

impl CoexistenceReport {
    pub fn unstable_count(&self) -> usize {
        self.states
            .iter()
            .filter(|r| r.stability.kind == StabilityKind::Unstable)
            .count()
    }
}

/// Newton-solves at `mu` from every branch segment that straddles it, with
/// the guess interpolated between the segment's end records.
pub fn coexisting_states<S: Parametric + ?Sized>(
    sys: &S,
    branch: &Branch,
    mu: f64,
    newton: &NewtonOptions,
) -> Result<CoexistenceReport, ContinuationError> {
    let scales = sys.state_scales();
    let mut states: Vec<SteadyStateRecord> = Vec::new();
    for w in branch.records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (pa, pb) = (a.param_value, b.param_value);
        if !((pa <= mu && mu <= pb) || (pb <= mu && mu <= pa)) || pa == pb {
            continue;
        }
        let r = (mu - pa) / (pb - pa);
        let guess: Vec<f64> = a.state.iter().zip(&b.state).map(|(x, y)| x + r * (y - x)).collect();
        let sol = solve_steady(sys, mu, &guess, newton)?;
        if states
            .iter()
            .any(|s| scaled_distance(&s.state, &sol.x, &scales) < 1e-6)
        {
            continue;
        }
        states.push(analyze(sys, mu, &sol.x, sol.residual_norm)?);
    }
    Ok(CoexistenceReport {
        param_value: mu,
        states,
    })
}
