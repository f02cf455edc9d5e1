//! Rate laws: Arrhenius constant, equilibrium pressure, Langmuir coverage and
//! the two surface reaction rates.

use super::{check_temperature, KineticParams, ModelError, SegmentParams, GAS_CONSTANT};

/// Arrhenius rate constant `A exp(-E / RT)`.
pub fn arrhenius_k(t: f64, kin: &KineticParams) -> Result<f64, ModelError> {
    let t = check_temperature(t)?;
    Ok(kin.pre_exponential * (-kin.activation_energy / (GAS_CONSTANT * t)).exp())
}

/// Equilibrium CO2 partial pressure `p0 exp(-|dH| / RT)`, Pa.
pub fn equilibrium_pressure(t: f64, kin: &KineticParams) -> Result<f64, ModelError> {
    let t = check_temperature(t)?;
    Ok(kin.p0 * (-kin.reaction_enthalpy.abs() / (GAS_CONSTANT * t)).exp())
}

/// Ideal-gas partial pressure of a concentration, Pa.
pub fn pressure_of(c: f64, t: f64) -> Result<f64, ModelError> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(ModelError::NegativeConcentration(c));
    }
    let t = check_temperature(t)?;
    Ok(c * GAS_CONSTANT * t)
}

/// Two-site Langmuir coverage with the saturation pressure pinned to the
/// equilibrium pressure.
pub fn coverage(p: f64, p_eq: f64) -> Result<f64, ModelError> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(ModelError::NegativePressure(p));
    }
    if !(p_eq > 0.0) {
        return Err(ModelError::NonPositiveEquilibriumPressure(p_eq));
    }
    let s = (p / p_eq).sqrt();
    if s.is_infinite() {
        // p_eq underflowed to a subnormal; the limit is full coverage.
        return Ok(1.0);
    }
    Ok(s / (1.0 + s))
}

fn surface_factor(t: f64, kin: &KineticParams, seg: &SegmentParams) -> Result<f64, ModelError> {
    Ok(kin.rate_scale
        * kin.porosity
        * arrhenius_k(t, kin)?
        * seg.solid_fraction
        * kin.surface_area)
}

/// Carbonation rate in the carboniser, mol m⁻³ s⁻¹. Positive when
/// `p1 > p_eq(T1)`.
pub fn carbonation_rate(
    t1: f64,
    p1: f64,
    kin: &KineticParams,
    seg: &SegmentParams,
) -> Result<f64, ModelError> {
    let p_eq = equilibrium_pressure(t1, kin)?;
    let theta = coverage(p1, p_eq)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    Ok((p1 / p_eq - 1.0) * theta * surface_factor(t1, kin, seg)?)
}

/// Calcination rate in the calciner, mol m⁻³ s⁻¹. Positive when
/// `p2 < p_eq(T2)`.
pub fn calcination_rate(
    t2: f64,
    p2: f64,
    kin: &KineticParams,
    seg: &SegmentParams,
) -> Result<f64, ModelError> {
    let p_eq = equilibrium_pressure(t2, kin)?;
    let theta = coverage(p2, p_eq)?;
    Ok((1.0 - p2 / p_eq) * (1.0 - theta) * surface_factor(t2, kin, seg)?)
}
