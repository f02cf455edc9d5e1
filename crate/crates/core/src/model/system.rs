use serde::{Deserialize, Serialize};

use super::{Mode, ModelParams, ParamRef};
use crate::numerics::{NumericsError, OdeSystem};

/// A scheduled parameter switch, e.g. the solids flow dropping to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamChange {
    pub param: ParamRef,
    pub value: f64,
}

/// The reactor model as an integrable system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSystem {
    pub mode: Mode,
    pub params: ModelParams,
}

impl ModelSystem {
    pub fn new(mode: Mode, params: ModelParams) -> Self {
        ModelSystem { mode, params }
    }
}

impl OdeSystem for ModelSystem {
    type Change = ParamChange;

    fn dim(&self) -> usize {
        self.mode.dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), NumericsError> {
        Ok(self.mode.rhs_into(y, &self.params, dy)?)
    }

    fn apply(&mut self, change: &ParamChange) -> Result<String, NumericsError> {
        let old = self.params.get(change.param);
        self.params.set(change.param, change.value);
        self.params.validate()?;
        Ok(format!(
            "{} {} -> {} {}",
            change.param,
            old,
            change.value,
            change.param.unit()
        ))
    }

    fn project(&self, y: &mut [f64]) -> Option<String> {
        let mut msg: Option<String> = None;
        for &i in self.mode.concentration_indices() {
            if y[i] < 0.0 {
                let label = if i == 0 { "c1" } else { "c2" };
                let note = format!("clamped {label} = {:e} to 0", y[i]);
                y[i] = 0.0;
                msg = Some(match msg {
                    Some(m) => format!("{m}; {note}"),
                    None => note,
                });
            }
        }
        msg
    }
}
