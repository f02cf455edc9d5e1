use super::{spec, InitialState, ScenarioError, ScenarioKind, ScenarioSpec, ScheduledChange, Sweep};
use crate::model::{Mode, ModelParams, ParamRef};

use ParamRef::*;

/// Names accepted by [`campaign`].
pub const CAMPAIGNS: [&str; 9] = [
    "standalone_sweep",
    "endex_inlet_sweep",
    "sorbent_flow_compare",
    "endex_tau_sweep",
    "wall_coupling_sweep",
    "startup",
    "shutdown_ramp",
    "solids_interruption",
    "hysteresis_scan",
];

/// Inlet-temperature range of the steady-state studies, K.
const T1_IN_RANGE: (f64, f64) = (973.0, 1273.0);
const TAU1_RANGE: (f64, f64) = (0.1, 20.0);

fn branch(param: ParamRef, (lo, hi): (f64, f64)) -> ScenarioKind {
    ScenarioKind::Branch {
        sweep: Sweep {
            param,
            lo,
            hi,
            descending: false,
        },
    }
}

/// Looks up a campaign by name.
pub fn campaign(name: &str, base: &ModelParams) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    Ok(match name {
        "standalone_sweep" => standalone_sweep(base),
        "endex_inlet_sweep" => endex_inlet_sweep(base, &[30.0, 60.0], &[10.0, 15.0]),
        "sorbent_flow_compare" => sorbent_flow_compare(base, &[10.0, 40.0]),
        "endex_tau_sweep" => endex_tau_sweep(base),
        "wall_coupling_sweep" => wall_coupling_sweep(base),
        "startup" => startup(base, &[10.0, 60.0]),
        "shutdown_ramp" => shutdown_ramp(base),
        "solids_interruption" => solids_interruption(base, &[0.0, 1e3, 5e3, 1e4]),
        "hysteresis_scan" => hysteresis_scan(base),
        other => return Err(ScenarioError::Unknown(other.to_string())),
    })
}

/// Standalone carboniser against τ1 for four solids flows.
pub fn standalone_sweep(base: &ModelParams) -> Vec<ScenarioSpec> {
    [10.0, 20.0, 30.0, 40.0]
        .iter()
        .map(|&fs| {
            spec(
                format!("standalone_Fs{fs}"),
                Mode::Standalone,
                base,
                &[(Fs, fs), (T1In, 1060.0), (TsIn, 1021.0)],
                branch(Tau1, TAU1_RANGE),
            )
        })
        .collect()
}

/// Endex steady states against the inlet gas temperature, one branch per
/// `(tau2, tau1)` pair, no wall exchange.
pub fn endex_inlet_sweep(base: &ModelParams, tau2s: &[f64], tau1s: &[f64]) -> Vec<ScenarioSpec> {
    tau2s
        .iter()
        .flat_map(|&tau2| {
            tau1s.iter().map(move |&tau1| {
                spec(
                    format!("inlet_tau2_{tau2}_tau1_{tau1}"),
                    Mode::Endex,
                    base,
                    &[(Tau1, tau1), (Tau2, tau2), (Lex, 0.0)],
                    branch(T1In, T1_IN_RANGE),
                )
            })
        })
        .collect()
}

/// Inlet-temperature branches at two solids flows with τ1 = τ2 = 15 s.
pub fn sorbent_flow_compare(base: &ModelParams, flows: &[f64]) -> Vec<ScenarioSpec> {
    flows
        .iter()
        .map(|&fs| {
            spec(
                format!("sorbent_Fs{fs}"),
                Mode::Endex,
                base,
                &[(Fs, fs), (Tau1, 15.0), (Tau2, 15.0), (Lex, 0.0)],
                branch(T1In, T1_IN_RANGE),
            )
        })
        .collect()
}

/// Endex steady states against τ1 with τ2 = 30 s for four solids flows.
pub fn endex_tau_sweep(base: &ModelParams) -> Vec<ScenarioSpec> {
    [10.0, 20.0, 30.0, 40.0]
        .iter()
        .map(|&fs| {
            spec(
                format!("tau_Fs{fs}"),
                Mode::Endex,
                base,
                &[(Fs, fs), (Tau2, 30.0), (Lex, 0.0), (T1In, 1060.0)],
                branch(Tau1, TAU1_RANGE),
            )
        })
        .collect()
}

/// Wall exchange 0–100 kW/K: τ1 ∈ {10, 15} s at Fs = 20 kg/s and
/// τ1 ∈ {15, 20} s at Fs = 40 kg/s, τ2 = 30 s throughout.
pub fn wall_coupling_sweep(base: &ModelParams) -> Vec<ScenarioSpec> {
    [(20.0, 10.0), (20.0, 15.0), (40.0, 15.0), (40.0, 20.0)]
        .iter()
        .map(|&(fs, tau1)| {
            spec(
                format!("wall_Fs{fs}_tau1_{tau1}"),
                Mode::Endex,
                base,
                &[(Fs, fs), (Tau1, tau1), (Tau2, 30.0)],
                branch(Lex, (0.0, 1e5)),
            )
        })
        .collect()
}

/// Start-up from empty segments at the steady temperatures. The τ2 values
/// of the original study are ambiguous; 10 s and 60 s bracket the range.
pub fn startup(base: &ModelParams, tau2s: &[f64]) -> Vec<ScenarioSpec> {
    tau2s
        .iter()
        .map(|&tau2| {
            spec(
                format!("startup_tau2_{tau2}"),
                Mode::Endex,
                base,
                &[(Tau1, 15.0), (Tau2, tau2), (Fs, 20.0), (Lex, 0.0)],
                ScenarioKind::Trajectory {
                    duration: 300.0,
                    initial: InitialState::SteadyTemperatures,
                    events: Vec::new(),
                    output_interval: 0.1,
                },
            )
        })
        .collect()
}

/// Quasistatic decline of the inlet CO2 pressure from its nominal value to
/// 500 Pa.
pub fn shutdown_ramp(base: &ModelParams) -> Vec<ScenarioSpec> {
    let nominal = base.flow.inlet_co2_pressure;
    vec![spec(
        "shutdown",
        Mode::Endex,
        base,
        &[(Fs, 20.0), (Tau1, 15.0), (Tau2, 15.0), (T1In, 1060.0), (Lex, 0.0)],
        ScenarioKind::Quasistatic {
            sweep: Sweep {
                param: PcIn,
                lo: 500.0,
                hi: nominal,
                descending: true,
            },
        },
    )]
}

/// Time at which the solids flow is cut, s.
pub const INTERRUPTION_TIME: f64 = 100.0;

/// Solids flow cut from 40 kg/s to zero at t = 100 s, from steady state,
/// for several wall exchange coefficients (W/K).
pub fn solids_interruption(base: &ModelParams, lexes: &[f64]) -> Vec<ScenarioSpec> {
    lexes
        .iter()
        .map(|&lex| {
            spec(
                format!("interruption_Lex{lex}"),
                Mode::Endex,
                base,
                &[(Fs, 40.0), (Tau1, 15.0), (Tau2, 15.0), (T1In, 1060.0), (Lex, lex)],
                ScenarioKind::Trajectory {
                    duration: 6000.0,
                    initial: InitialState::SteadyState,
                    events: vec![ScheduledChange {
                        time: INTERRUPTION_TIME,
                        param: Fs,
                        value: 0.0,
                    }],
                    output_interval: 1.0,
                },
            )
        })
        .collect()
}

/// Low solids flow and short carboniser residence time, inlet temperature
/// swept upward from 473 K.
pub fn hysteresis_scan(base: &ModelParams) -> Vec<ScenarioSpec> {
    vec![spec(
        "hysteresis",
        Mode::Endex,
        base,
        &[(Fs, 5.0), (Tau1, 2.4), (Tau2, 15.0), (Lex, 0.0)],
        branch(T1In, (473.0, 1273.0)),
    )]
}
