//! Run configuration files.
//!
//! A config is TOML (or JSON, chosen by file extension) with every physical
//! value written together with its unit:
//!
//! ```toml
//! scenario = "hysteresis_scan"
//!
//! [params]
//! Fs = "20 kg/s"
//! Lex = "10 kW/K"
//! pc_in = "0.2 MPa"
//!
//! [solver]
//! newton_tol = 1e-9
//! ```
//!
//! Instead of a named scenario a `[custom]` table describes a single branch,
//! quasistatic ramp or trajectory. Absent parameters keep their defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::units::{format_quantity, parse_quantity, Quantity, RawValue, UnitError};
use crate::continuation::StepControl;
use crate::model::{InletBasis, Mode, ModelError, ModelParams, ParamRef};
use crate::numerics::{IntegrateOptions, Method, Tolerance};
use crate::scenarios::{
    campaign, InitialState, RunSettings, ScenarioKind, ScenarioSpec, ScheduledChange, Sweep,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{field}`: {source}")]
    Unit { field: String, source: UnitError },
    #[error("field `{field}`: {reason}")]
    Value { field: String, reason: String },
    #[error(transparent)]
    Params(#[from] ModelError),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("{0}")]
    Conflict(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Name of a built-in campaign.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, RawValue>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomConfig>,
}

/// Tolerances are dimensionless.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrate_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrate_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomKind {
    Branch,
    Quasistatic,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub time: RawValue,
    pub param: ParamRef,
    pub value: RawValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub kind: CustomKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<ParamRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<RawValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<RawValue>,
    #[serde(default)]
    pub descending: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<RawValue>,
    /// `feed`, `steady_state`, `steady_temperatures` or `explicit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// Initial state in SI units, for `initial = "explicit"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<RawValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventConfig>,
}

fn default_name() -> String {
    "custom".into()
}

fn default_mode() -> Mode {
    Mode::Endex
}

struct Field {
    name: &'static str,
    quantity: Quantity,
    get: fn(&ModelParams) -> f64,
    set: fn(&mut ModelParams, f64),
}

macro_rules! field {
    ($name:literal, $q:ident, $($path:ident).+) => {
        Field {
            name: $name,
            quantity: Quantity::$q,
            get: |p| p.$($path).+,
            set: |p, v| p.$($path).+ = v,
        }
    };
}

const FIELDS: [Field; 23] = [
    field!("A", Dimensionless, kinetics.pre_exponential),
    field!("E", MolarEnergy, kinetics.activation_energy),
    field!("dH", MolarEnergy, kinetics.reaction_enthalpy),
    field!("p0", Pressure, kinetics.p0),
    field!("porosity", Dimensionless, kinetics.porosity),
    field!("S", SpecificArea, kinetics.surface_area),
    field!("kappa", Dimensionless, kinetics.rate_scale),
    field!("V1", Volume, carboniser.volume),
    field!("eps1", Dimensionless, carboniser.solid_fraction),
    field!("C1", VolumetricHeatCapacity, carboniser.contents_heat_capacity),
    field!("C1g", VolumetricHeatCapacity, carboniser.gas_heat_capacity),
    field!("V2", Volume, calciner.volume),
    field!("eps2", Dimensionless, calciner.solid_fraction),
    field!("C2", VolumetricHeatCapacity, calciner.contents_heat_capacity),
    field!("C2g", VolumetricHeatCapacity, calciner.gas_heat_capacity),
    field!("tau1", Time, flow.tau1),
    field!("tau2", Time, flow.tau2),
    field!("Fs", MassFlow, flow.solids_flow),
    field!("Cs", SpecificHeatCapacity, flow.sorbent_heat_capacity),
    field!("Lex", Conductance, flow.wall_exchange),
    field!("T1_in", Temperature, flow.inlet_gas_temperature),
    field!("pc_in", Pressure, flow.inlet_co2_pressure),
    field!("Ts_in", Temperature, flow.sorbent_inlet_temperature),
];

const INLET_BASIS: &str = "inlet_basis";
const REFERENCE_TEMPERATURE: &str = "T_ref";

/// Unit family of a continuation parameter.
pub fn param_quantity(p: ParamRef) -> Quantity {
    FIELDS
        .iter()
        .find(|f| f.name == p.name())
        .map(|f| f.quantity)
        .expect("every ParamRef is a config field")
}

pub fn parse_param_value(p: ParamRef, raw: &RawValue) -> Result<f64, ConfigError> {
    quantity(p.name(), raw, param_quantity(p))
}

fn quantity(field: &str, raw: &RawValue, q: Quantity) -> Result<f64, ConfigError> {
    parse_quantity(raw, q).map_err(|source| ConfigError::Unit {
        field: field.to_string(),
        source,
    })
}

/// Applies `[params]`-style entries on top of `base`.
pub fn apply_params(base: &ModelParams, entries: &BTreeMap<String, RawValue>) -> Result<ModelParams, ConfigError> {
    let mut p = *base;
    let mut reference = None;
    for (name, raw) in entries {
        if let Some(f) = FIELDS.iter().find(|f| f.name == name) {
            (f.set)(&mut p, quantity(name, raw, f.quantity)?);
        } else if name == REFERENCE_TEMPERATURE {
            reference = Some(quantity(name, raw, Quantity::Temperature)?);
        } else if name != INLET_BASIS {
            return Err(ConfigError::UnknownField(format!("params.{name}")));
        }
    }
    if let Some(raw) = entries.get(INLET_BASIS) {
        let current = match p.flow.inlet_basis {
            InletBasis::FixedConcentration { reference_temperature } => reference_temperature,
            InletBasis::FixedPartialPressure => p.flow.inlet_gas_temperature,
        };
        p.flow.inlet_basis = match raw {
            RawValue::Text(s) if s == "fixed_concentration" => InletBasis::FixedConcentration {
                reference_temperature: reference.unwrap_or(current),
            },
            RawValue::Text(s) if s == "fixed_partial_pressure" => InletBasis::FixedPartialPressure,
            other => {
                return Err(ConfigError::Value {
                    field: format!("params.{INLET_BASIS}"),
                    reason: format!("`{other}` is not fixed_concentration or fixed_partial_pressure"),
                })
            }
        };
    } else if let Some(t) = reference {
        match &mut p.flow.inlet_basis {
            InletBasis::FixedConcentration { reference_temperature } => *reference_temperature = t,
            InletBasis::FixedPartialPressure => {
                return Err(ConfigError::Value {
                    field: format!("params.{REFERENCE_TEMPERATURE}"),
                    reason: "only meaningful with inlet_basis = \"fixed_concentration\"".into(),
                })
            }
        }
    }
    p.validate()?;
    Ok(p)
}

/// Every parameter of `p`, in config syntax.
pub fn params_table(p: &ModelParams) -> BTreeMap<String, RawValue> {
    let mut out: BTreeMap<String, RawValue> = FIELDS
        .iter()
        .map(|f| (f.name.to_string(), format_quantity((f.get)(p), f.quantity)))
        .collect();
    match p.flow.inlet_basis {
        InletBasis::FixedConcentration { reference_temperature } => {
            out.insert(INLET_BASIS.into(), RawValue::Text("fixed_concentration".into()));
            out.insert(
                REFERENCE_TEMPERATURE.into(),
                format_quantity(reference_temperature, Quantity::Temperature),
            );
        }
        InletBasis::FixedPartialPressure => {
            out.insert(INLET_BASIS.into(), RawValue::Text("fixed_partial_pressure".into()));
        }
    }
    out
}

/// Parameters used when a config says nothing: the tabulated values with
/// the fitted rate scale.
pub fn default_params() -> ModelParams {
    ModelParams::calibrated()
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        let json_err = |source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        };
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
        // A summary file carries its resolved config under `provenance`.
        if let Some(cfg) = value.get_mut("provenance").and_then(|p| p.get_mut("config")) {
            value = cfg.take();
        }
        serde_json::from_value(value).map_err(json_err)
    } else {
        toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod load_tests {
    use super::*;

    #[test]
    fn summary_files_load_as_their_resolved_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            scenario: Some("startup".into()),
            ..RunConfig::default()
        };
        let path = dir.path().join("summary.json");
        let summary = serde_json::json!({ "provenance": { "tool": "endex", "config": cfg }, "scenarios": [] });
        std::fs::write(&path, summary.to_string()).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }
}

/// A config with everything defaulted or converted.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: ModelParams,
    pub settings: RunSettings,
    pub specs: Vec<ScenarioSpec>,
}

fn positive(field: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::Value {
            field: field.into(),
            reason: format!("must be positive, got {x}"),
        }),
        Some(x) => Ok(x),
        None => Ok(default),
    }
}

fn settings_from(s: &SolverConfig) -> Result<RunSettings, ConfigError> {
    let defaults = RunSettings::default();
    let tol = Tolerance {
        rel: positive("solver.integrate_rel", s.integrate_rel, defaults.integrate.tol.rel)?,
        abs: positive("solver.integrate_abs", s.integrate_abs, defaults.integrate.tol.abs)?,
    };
    let method = s.method.unwrap_or(defaults.integrate.method);
    let mut step = StepControl::default();
    step.newton.tol = positive("solver.newton_tol", s.newton_tol, step.newton.tol)?;
    Ok(RunSettings {
        step,
        integrate: IntegrateOptions {
            tol,
            method,
            ..IntegrateOptions::default()
        },
    })
}

fn required<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, ConfigError> {
    v.as_ref().ok_or_else(|| ConfigError::Value {
        field: format!("custom.{field}"),
        reason: "required for this kind".into(),
    })
}

fn custom_spec(c: &CustomConfig, base: &ModelParams) -> Result<ScenarioSpec, ConfigError> {
    let kind = match c.kind {
        CustomKind::Branch | CustomKind::Quasistatic => {
            let param = *required(&c.param, "param")?;
            let q = param_quantity(param);
            let sweep = Sweep {
                param,
                lo: quantity("custom.lo", required(&c.lo, "lo")?, q)?,
                hi: quantity("custom.hi", required(&c.hi, "hi")?, q)?,
                descending: c.descending,
            };
            if !(sweep.lo < sweep.hi) {
                return Err(ConfigError::Value {
                    field: "custom.hi".into(),
                    reason: format!("range must increase, got {} to {}; set `descending` to sweep downwards", sweep.lo, sweep.hi),
                });
            }
            if c.kind == CustomKind::Branch {
                ScenarioKind::Branch { sweep }
            } else {
                ScenarioKind::Quasistatic { sweep }
            }
        }
        CustomKind::Trajectory => {
            let initial = match c.initial.as_deref().unwrap_or("feed") {
                "feed" => InitialState::Feed,
                "steady_state" => InitialState::SteadyState,
                "steady_temperatures" => InitialState::SteadyTemperatures,
                "explicit" => {
                    let state = required(&c.state, "state")?.clone();
                    if state.len() != c.mode.dim() {
                        return Err(ConfigError::Value {
                            field: "custom.state".into(),
                            reason: format!("needs {} components, got {}", c.mode.dim(), state.len()),
                        });
                    }
                    InitialState::Explicit { state }
                }
                other => {
                    return Err(ConfigError::Value {
                        field: "custom.initial".into(),
                        reason: format!("`{other}` is not feed, steady_state, steady_temperatures or explicit"),
                    })
                }
            };
            let events = c
                .events
                .iter()
                .map(|e| {
                    Ok(ScheduledChange {
                        time: quantity("custom.events.time", &e.time, Quantity::Time)?,
                        param: e.param,
                        value: parse_param_value(e.param, &e.value)?,
                    })
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            let duration = quantity("custom.duration", required(&c.duration, "duration")?, Quantity::Time)?;
            let output_interval = match &c.output_interval {
                Some(raw) => quantity("custom.output_interval", raw, Quantity::Time)?,
                None => duration / 1000.0,
            };
            if !(duration > 0.0 && output_interval > 0.0) {
                return Err(ConfigError::Value {
                    field: "custom.duration".into(),
                    reason: "duration and output interval must be positive".into(),
                });
            }
            ScenarioKind::Trajectory {
                duration,
                initial,
                events,
                output_interval,
            }
        }
    };
    Ok(ScenarioSpec {
        name: c.name.clone(),
        mode: c.mode,
        base: *base,
        overrides: Vec::new(),
        kind,
    })
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let params = apply_params(&default_params(), &self.params)?;
        let settings = settings_from(&self.solver)?;
        let specs = match (&self.scenario, &self.custom) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Conflict(
                    "a config names either a scenario or a [custom] run, not both".into(),
                ))
            }
            (Some(name), None) => {
                campaign(name, &params).map_err(|_| ConfigError::UnknownScenario(name.clone()))?
            }
            (None, Some(c)) => vec![custom_spec(c, &params)?],
            (None, None) => Vec::new(),
        };
        Ok(Resolved {
            params,
            settings,
            specs,
        })
    }

    /// The same run with every parameter and solver setting spelled out and
    /// no output location.
    pub fn resolved(&self, r: &Resolved) -> RunConfig {
        RunConfig {
            scenario: self.scenario.clone(),
            output_dir: None,
            params: params_table(&r.params),
            solver: SolverConfig {
                integrate_rel: Some(r.settings.integrate.tol.rel),
                integrate_abs: Some(r.settings.integrate.tol.abs),
                newton_tol: Some(r.settings.step.newton.tol),
                method: Some(r.settings.integrate.method),
            },
            custom: self.custom.clone(),
        }
    }
}
