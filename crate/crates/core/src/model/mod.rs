//! Physical model of the Endex carboniser/calciner pair.
//!
//! Everything in here is plain SI: Pa, K, s, mol, m³, J, kg. The printed
//! parameter table mixes kJ, J and MPa; [`ModelParams::table1`] converts once
//! at construction time and nothing downstream ever sees the mixed units.
//!
//! The two dynamical systems are
//!
//! * the coupled Endex system with state `(c1, T1, c2, T2)`, see [`endex_rhs`];
//! * the standalone carboniser with state `(c1, T1)` whose spent sorbent is
//!   replaced by fresh sorbent at a fixed temperature, see [`standalone_rhs`].

mod params;
mod rates;
mod rhs;
mod system;

pub use params::{
    FlowParams, InletBasis, KineticParams, ModelParams, ParamRef, SegmentParams,
    CALIBRATED_RATE_SCALE,
};
pub use rates::{
    arrhenius_k, calcination_rate, carbonation_rate, coverage, equilibrium_pressure, pressure_of,
};
pub use system::{ModelSystem, ParamChange};
pub use rhs::{
    endex_rhs, enthalpy_balance_residual, standalone_rhs, CarboniserState, EndexState, Mode,
};

use thiserror::Error;

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("temperature must be finite, got {0}")]
    NonFiniteTemperature(f64),
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("concentration must be finite and non-negative, got {0} mol/m3")]
    NegativeConcentration(f64),
    #[error("pressure must be finite and non-negative, got {0} Pa")]
    NegativePressure(f64),
    #[error("equilibrium pressure must be positive, got {0} Pa")]
    NonPositiveEquilibriumPressure(f64),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub(crate) fn check_temperature(t: f64) -> Result<f64, ModelError> {
    if !t.is_finite() {
        return Err(ModelError::NonFiniteTemperature(t));
    }
    if t <= 0.0 {
        return Err(ModelError::NonPositiveTemperature(t));
    }
    Ok(t)
}
