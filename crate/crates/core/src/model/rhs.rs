//! Right-hand sides of the Endex and standalone-carboniser systems.

use serde::{Deserialize, Serialize};

use super::{
    calcination_rate, carbonation_rate, check_temperature, pressure_of, ModelError, ModelParams,
};

/// State of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndexState {
    /// Carboniser CO2 concentration, mol/m³.
    pub c1: f64,
    /// Carboniser temperature, K.
    pub t1: f64,
    /// Calciner CO2 concentration, mol/m³.
    pub c2: f64,
    /// Calciner temperature, K.
    pub t2: f64,
}

impl EndexState {
    pub fn to_array(self) -> [f64; 4] {
        [self.c1, self.t1, self.c2, self.t2]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        EndexState {
            c1: x[0],
            t1: x[1],
            c2: x[2],
            t2: x[3],
        }
    }
}

/// State of the standalone carboniser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarboniserState {
    pub c1: f64,
    pub t1: f64,
}

impl CarboniserState {
    pub fn to_array(self) -> [f64; 2] {
        [self.c1, self.t1]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        CarboniserState { c1: x[0], t1: x[1] }
    }
}

/// Which of the two dynamical systems is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Standalone,
    Endex,
}

impl Mode {
    pub fn dim(self) -> usize {
        match self {
            Mode::Standalone => 2,
            Mode::Endex => 4,
        }
    }

    /// Indices of concentration components.
    pub fn concentration_indices(self) -> &'static [usize] {
        match self {
            Mode::Standalone => &[0],
            Mode::Endex => &[0, 2],
        }
    }

    /// Characteristic magnitudes used for scaled norms: concentrations by
    /// the inlet concentration (floored at 1 mol/m³), temperatures by 1000 K.
    pub fn state_scales(self, p: &ModelParams) -> Vec<f64> {
        let c = p.c1_in().max(1.0);
        match self {
            Mode::Standalone => vec![c, 1000.0],
            Mode::Endex => vec![c, 1000.0, c, 1000.0],
        }
    }

    /// Finite-difference floor per component: 1 mol/m³ or 1 K.
    pub fn fd_scales(self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }

    /// Evaluate the right-hand side of this mode into `out`.
    pub fn rhs_into(self, x: &[f64], p: &ModelParams, out: &mut [f64]) -> Result<(), ModelError> {
        match self {
            Mode::Standalone => {
                out.copy_from_slice(&standalone_rhs(&CarboniserState::from_slice(x), p)?);
            }
            Mode::Endex => out.copy_from_slice(&endex_rhs(&EndexState::from_slice(x), p)?),
        }
        Ok(())
    }
}

fn clamp_concentration(c: f64, label: &str) -> Result<f64, ModelError> {
    if !c.is_finite() {
        return Err(ModelError::NegativeConcentration(c));
    }
    if c < 0.0 {
        log::trace!("clamped {label} = {c:e} to 0 before rate evaluation");
        return Ok(0.0);
    }
    Ok(c)
}

/// Time derivatives `(dc1/dt, dT1/dt, dc2/dt, dT2/dt)` of the Endex system.
pub fn endex_rhs(s: &EndexState, p: &ModelParams) -> Result<[f64; 4], ModelError> {
    let (k, seg1, seg2, f) = (&p.kinetics, &p.carboniser, &p.calciner, &p.flow);
    let c1 = clamp_concentration(s.c1, "c1")?;
    let c2 = clamp_concentration(s.c2, "c2")?;
    let t1 = check_temperature(s.t1)?;
    let t2 = check_temperature(s.t2)?;

    let v1 = carbonation_rate(t1, pressure_of(c1, t1)?, k, seg1)?;
    let v2 = calcination_rate(t2, pressure_of(c2, t2)?, k, seg2)?;
    let (f1, f2, g) = (p.f1(), p.f2(), p.coupling());
    let dh = k.reaction_enthalpy;

    let dc1 = -v1 + f1 * (p.c1_in() - c1) / seg1.volume;
    let dt1 = (seg1.volume * (-dh) * v1
        + f1 * seg1.gas_heat_capacity * (f.inlet_gas_temperature - t1)
        + g * (t2 - t1))
        / (seg1.volume * seg1.contents_heat_capacity);
    let dc2 = v2 - f2 * c2 / seg2.volume;
    let dt2 = (seg2.volume * dh * v2 - f2 * seg2.gas_heat_capacity * t2 + g * (t1 - t2))
        / (seg2.volume * seg2.contents_heat_capacity);
    Ok([dc1, dt1, dc2, dt2])
}

/// Time derivatives `(dc1/dt, dT1/dt)` of the standalone carboniser, whose
/// sorbent enters at `Ts_in` and leaves carrying its heat away.
pub fn standalone_rhs(s: &CarboniserState, p: &ModelParams) -> Result<[f64; 2], ModelError> {
    let (k, seg1, f) = (&p.kinetics, &p.carboniser, &p.flow);
    let c1 = clamp_concentration(s.c1, "c1")?;
    let t1 = check_temperature(s.t1)?;

    let v1 = carbonation_rate(t1, pressure_of(c1, t1)?, k, seg1)?;
    let f1 = p.f1();
    let dh = k.reaction_enthalpy;

    let dc1 = -v1 + f1 * (p.c1_in() - c1) / seg1.volume;
    let dt1 = (seg1.volume * (-dh) * v1
        + f1 * seg1.gas_heat_capacity * (f.inlet_gas_temperature - t1)
        + f.solids_flow * f.sorbent_heat_capacity * (f.sorbent_inlet_temperature - t1))
        / (seg1.volume * seg1.contents_heat_capacity);
    Ok([dc1, dt1])
}

/// Residual of the overall steady-state enthalpy balance, W.
///
/// Summing the two temperature equations cancels the coupling terms, so at
/// any steady state `dH (V2 v2 - V1 v1) + F1 C1g (T1_in - T1) - F2 C2g T2`
/// vanishes.
pub fn enthalpy_balance_residual(s: &EndexState, p: &ModelParams) -> Result<f64, ModelError> {
    let (k, seg1, seg2) = (&p.kinetics, &p.carboniser, &p.calciner);
    let v1 = carbonation_rate(s.t1, pressure_of(s.c1, s.t1)?, k, seg1)?;
    let v2 = calcination_rate(s.t2, pressure_of(s.c2, s.t2)?, k, seg2)?;
    Ok(k.reaction_enthalpy * (seg2.volume * v2 - seg1.volume * v1)
        + p.f1() * seg1.gas_heat_capacity * (p.flow.inlet_gas_temperature - s.t1)
        - p.f2() * seg2.gas_heat_capacity * s.t2)
}
