//! Quantities with explicit units in configuration files.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Physical dimension of a configurable value, with the units accepted for
/// it. The first unit of each list is the SI unit values are stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Temperature,
    Time,
    Pressure,
    MassFlow,
    Conductance,
    MolarEnergy,
    VolumetricHeatCapacity,
    SpecificHeatCapacity,
    Volume,
    SpecificArea,
    Dimensionless,
}

impl Quantity {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Quantity::Temperature => &[("K", 1.0)],
            Quantity::Time => &[("s", 1.0), ("ms", 1e-3), ("min", 60.0), ("h", 3600.0)],
            Quantity::Pressure => &[("Pa", 1.0), ("kPa", 1e3), ("MPa", 1e6), ("bar", 1e5)],
            Quantity::MassFlow => &[("kg/s", 1.0)],
            Quantity::Conductance => &[("W/K", 1.0), ("kW/K", 1e3), ("MW/K", 1e6)],
            Quantity::MolarEnergy => &[("J/mol", 1.0), ("kJ/mol", 1e3)],
            Quantity::VolumetricHeatCapacity => &[("J/(m3 K)", 1.0), ("kJ/(m3 K)", 1e3)],
            Quantity::SpecificHeatCapacity => &[("J/(kg K)", 1.0), ("kJ/(kg K)", 1e3)],
            Quantity::Volume => &[("m3", 1.0)],
            Quantity::SpecificArea => &[("m2/m3", 1.0), ("1/m", 1.0)],
            Quantity::Dimensionless => &[("", 1.0)],
        }
    }

    pub fn si_unit(self) -> &'static str {
        self.units()[0].0
    }

    fn expected(self) -> String {
        let names: Vec<_> = self.units().iter().map(|(u, _)| *u).collect();
        if self == Quantity::Dimensionless {
            "a plain number".to_string()
        } else {
            names.join(" or ")
        }
    }
}

/// A value as written in a config file: a quoted `"<number> <unit>"` string
/// or, for dimensionless values, a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Number(v) => write!(f, "{v}"),
            RawValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("`{value}` is not a number followed by a unit")]
    Malformed { value: String },
    #[error("unit mismatch: got `{found}`, expected {expected}")]
    Mismatch { found: String, expected: String },
    #[error("value `{value}` has no unit, expected {expected}")]
    MissingUnit { value: String, expected: String },
}

fn normalise(unit: &str) -> String {
    unit.chars().filter(|c| !c.is_whitespace() && *c != '^').collect()
}

/// Converts a raw config value to SI.
pub fn parse_quantity(raw: &RawValue, q: Quantity) -> Result<f64, UnitError> {
    let text = match raw {
        RawValue::Number(v) if q == Quantity::Dimensionless => return Ok(*v),
        RawValue::Number(v) => {
            return Err(UnitError::MissingUnit {
                value: v.to_string(),
                expected: q.expected(),
            })
        }
        RawValue::Text(s) => s.trim(),
    };
    let split = text
        .find(|c: char| c.is_whitespace())
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| UnitError::Malformed { value: text.to_string() })?;
    let unit = normalise(unit);
    if unit.is_empty() && q != Quantity::Dimensionless {
        return Err(UnitError::MissingUnit {
            value: text.to_string(),
            expected: q.expected(),
        });
    }
    q.units()
        .iter()
        .find(|(u, _)| normalise(u) == unit)
        .map(|(_, factor)| value * factor)
        .ok_or_else(|| UnitError::Mismatch {
            found: unit,
            expected: q.expected(),
        })
}

/// SI value written back in the config syntax. `{}` on f64 is the shortest
/// exact representation, so reloading gives the identical value.
pub fn format_quantity(value: f64, q: Quantity) -> RawValue {
    if q == Quantity::Dimensionless {
        RawValue::Number(value)
    } else {
        RawValue::Text(format!("{value} {}", q.si_unit()))
    }
}
