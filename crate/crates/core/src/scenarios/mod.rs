//! The experiments of the reactor study as named, parameterised campaigns.
//!
//! A campaign is a list of [`ScenarioSpec`]s; each spec is a self-contained
//! description of one branch or trajectory and runs deterministically.

mod campaigns;
mod metrics;
mod regime;

pub use campaigns::{
    campaign, endex_inlet_sweep, endex_tau_sweep, hysteresis_scan, shutdown_ramp,
    solids_interruption, sorbent_flow_compare, standalone_sweep, startup, wall_coupling_sweep,
    CAMPAIGNS, INTERRUPTION_TIME,
};
pub use metrics::{
    adiabatic_rise, crossing_param, first_param_reaching, peak_excursion, settle_time,
    steepest_descent_point, temperature_gap_at,
};
pub use regime::{regime_grid, RegimeAxes, RegimeReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuation::{
    seed_steady_state, trace_model_branch, Branch, ContinuationError, StepControl,
};
use crate::model::{
    equilibrium_pressure, pressure_of, Mode, ModelError, ModelParams, ModelSystem, ParamChange,
    ParamRef,
};
use crate::numerics::{integrate, IntegrateOptions, NewtonOptions, NumericsError, Output, TimedEvent, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario {name}: {source}")]
    Continuation {
        name: String,
        #[source]
        source: ContinuationError,
    },
    #[error("scenario {name}: {source}")]
    Numerics {
        name: String,
        #[source]
        source: NumericsError,
    },
    #[error("scenario {name}: {source}")]
    Params {
        name: String,
        #[source]
        source: ModelError,
    },
    #[error("unknown scenario {0:?}")]
    Unknown(String),
}

impl ScenarioError {
    /// True for failures of a solver rather than of the input.
    pub fn is_solver_failure(&self) -> bool {
        !matches!(self, ScenarioError::Params { .. } | ScenarioError::Unknown(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: ParamRef,
    pub lo: f64,
    pub hi: f64,
    /// Trace from `hi` down to `lo`.
    #[serde(default)]
    pub descending: bool,
}

/// Where a transient starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Inlet concentration and inlet temperature, empty calciner.
    Feed,
    /// The steady state of the unperturbed parameters.
    SteadyState,
    /// Steady-state temperatures with both concentrations zero.
    SteadyTemperatures,
    Explicit { state: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledChange {
    /// s.
    pub time: f64,
    pub param: ParamRef,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    /// A steady-state branch traced by continuation.
    Branch { sweep: Sweep },
    /// A slow ramp of one parameter, realised as continuation in that
    /// parameter.
    Quasistatic { sweep: Sweep },
    Trajectory {
        /// s.
        duration: f64,
        initial: InitialState,
        #[serde(default)]
        events: Vec<ScheduledChange>,
        /// Output spacing, s.
        output_interval: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub mode: Mode,
    pub base: ModelParams,
    #[serde(default)]
    pub overrides: Vec<(ParamRef, f64)>,
    pub kind: ScenarioKind,
}

impl ScenarioSpec {
    /// Base parameters with the overrides applied.
    pub fn params(&self) -> ModelParams {
        self.overrides
            .iter()
            .fold(self.base, |p, &(r, v)| p.with(r, v))
    }
}

/// Solver settings shared by every spec of a run.
#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct RunSettings {
    pub step: StepControl,
    pub integrate: IntegrateOptions,
}


/// One time sample with its derived pressures.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub trajectory: Trajectory,
    /// Steady state of the initial parameter set, when it was needed.
    pub reference: Option<Vec<f64>>,
    /// Parameter set in force after all events.
    pub final_params: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Branch(Branch),
    Trajectory(TrajectoryResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub outcome: Outcome,
}

impl ScenarioResult {
    pub fn branch(&self) -> Option<&Branch> {
        match &self.outcome {
            Outcome::Branch(b) => Some(b),
            Outcome::Trajectory(_) => None,
        }
    }

    pub fn trajectory(&self) -> Option<&TrajectoryResult> {
        match &self.outcome {
            Outcome::Trajectory(t) => Some(t),
            Outcome::Branch(_) => None,
        }
    }
}

/// Pressures `(p1, p1_eq, p2, p2_eq)` at a state; calciner entries are
/// `None` for the standalone carboniser.
pub fn state_pressures(
    mode: Mode,
    p: &ModelParams,
    x: &[f64],
) -> Result<(f64, f64, Option<f64>, Option<f64>), ModelError> {
    let p1 = pressure_of(x[0].max(0.0), x[1])?;
    let p1_eq = equilibrium_pressure(x[1], &p.kinetics)?;
    if mode == Mode::Standalone {
        return Ok((p1, p1_eq, None, None));
    }
    Ok((
        p1,
        p1_eq,
        Some(pressure_of(x[2].max(0.0), x[3])?),
        Some(equilibrium_pressure(x[3], &p.kinetics)?),
    ))
}

pub fn run_spec(spec: &ScenarioSpec, settings: &RunSettings) -> Result<ScenarioResult, ScenarioError> {
    let name = spec.name.clone();
    let p = spec.params();
    p.validate().map_err(|source| ScenarioError::Params {
        name: name.clone(),
        source,
    })?;
    let cont = |source| ScenarioError::Continuation {
        name: name.clone(),
        source,
    };
    let num = |source| ScenarioError::Numerics {
        name: name.clone(),
        source,
    };
    let outcome = match &spec.kind {
        ScenarioKind::Branch { sweep } | ScenarioKind::Quasistatic { sweep } => {
            let ctrl = StepControl {
                descending: sweep.descending,
                ..settings.step.clone()
            };
            let b = trace_model_branch(spec.mode, &p, sweep.param, (sweep.lo, sweep.hi), &ctrl)
                .map_err(cont)?;
            Outcome::Branch(b)
        }
        ScenarioKind::Trajectory {
            duration,
            initial,
            events,
            output_interval,
        } => {
            let newton = &settings.step.newton;
            let needs_reference = matches!(
                initial,
                InitialState::SteadyState | InitialState::SteadyTemperatures
            );
            let reference = if needs_reference {
                Some(seed_steady_state(spec.mode, &p, newton).map_err(cont)?)
            } else {
                None
            };
            let y0 = match initial {
                InitialState::Feed => crate::continuation::feed_state(spec.mode, &p),
                InitialState::SteadyState => reference.clone().unwrap(),
                InitialState::SteadyTemperatures => {
                    let mut y = reference.clone().unwrap();
                    for &i in spec.mode.concentration_indices() {
                        y[i] = 0.0;
                    }
                    y
                }
                InitialState::Explicit { state } => state.clone(),
            };
            let events: Vec<TimedEvent<ParamChange>> = events
                .iter()
                .map(|e| TimedEvent {
                    time: e.time,
                    change: ParamChange {
                        param: e.param,
                        value: e.value,
                    },
                })
                .collect();
            let opts = IntegrateOptions {
                output: Output::Interval(*output_interval),
                ..settings.integrate.clone()
            };
            let mut sys = ModelSystem::new(spec.mode, p);
            let trajectory = integrate(&mut sys, &y0, (0.0, *duration), &events, &opts).map_err(num)?;
            Outcome::Trajectory(TrajectoryResult {
                trajectory,
                reference,
                final_params: sys.params,
            })
        }
    };
    Ok(ScenarioResult {
        spec: spec.clone(),
        outcome,
    })
}

/// Runs independent specs on the rayon pool; results come back in input
/// order regardless of scheduling.
pub fn run_all(
    specs: &[ScenarioSpec],
    settings: &RunSettings,
) -> Vec<Result<ScenarioResult, ScenarioError>> {
    specs.par_iter().map(|s| run_spec(s, settings)).collect()
}

/// Steady state of the model at `p`, seeded from the feed state.
pub fn steady_state(mode: Mode, p: &ModelParams) -> Result<Vec<f64>, ContinuationError> {
    seed_steady_state(mode, p, &NewtonOptions::default())
}

/// Convenience for campaign builders.
pub(crate) fn spec(
    name: impl Into<String>,
    mode: Mode,
    base: &ModelParams,
    overrides: &[(ParamRef, f64)],
    kind: ScenarioKind,
) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        mode,
        base: *base,
        overrides: overrides.to_vec(),
        kind,
    }
}
