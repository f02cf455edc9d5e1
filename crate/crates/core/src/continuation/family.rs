use super::{ContinuationError, Derived, SteadyStateRecord};
use crate::model::{
    equilibrium_pressure, pressure_of, Mode, ModelParams, ModelSystem, ParamRef,
};
use crate::numerics::{
    classify, eigenvalues, fd_jacobian, integrate, newton_solve, IntegrateOptions, Method,
    NewtonOptions, NewtonSolution, NumericsError, Output, Tolerance, DEFAULT_FD_STEP,
};

/// A vector field `x' = f(mu, x)` depending on one scalar parameter.
pub trait Parametric {
    fn dim(&self) -> usize;

    fn rhs(&self, mu: f64, x: &[f64], out: &mut [f64]) -> Result<(), NumericsError>;

    /// Characteristic magnitude of each component. The steady-state residual
    /// is `f / scale` and continuation works in `x / scale`.
    fn state_scales(&self) -> Vec<f64>;

    /// Finite-difference floor per component.
    fn fd_scales(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }

    fn derived(&self, _mu: f64, _x: &[f64]) -> Option<Derived> {
        None
    }
}

/// The reactor model with one [`ParamRef`] freed as the continuation
/// parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub mode: Mode,
    pub base: ModelParams,
    pub param: ParamRef,
    scales: Vec<f64>,
}

impl ModelFamily {
    pub fn new(mode: Mode, base: ModelParams, param: ParamRef) -> Self {
        let scales = mode.state_scales(&base);
        ModelFamily {
            mode,
            base,
            param,
            scales,
        }
    }

    pub fn params_at(&self, mu: f64) -> ModelParams {
        self.base.with(self.param, mu)
    }
}

impl Parametric for ModelFamily {
    fn dim(&self) -> usize {
        self.mode.dim()
    }

    fn rhs(&self, mu: f64, x: &[f64], out: &mut [f64]) -> Result<(), NumericsError> {
        let p = self.params_at(mu);
        Ok(self.mode.rhs_into(x, &p, out)?)
    }

    fn state_scales(&self) -> Vec<f64> {
        self.scales.clone()
    }

    fn fd_scales(&self) -> Vec<f64> {
        self.mode.fd_scales()
    }

    fn derived(&self, mu: f64, x: &[f64]) -> Option<Derived> {
        let p = self.params_at(mu);
        let kin = &p.kinetics;
        let p1 = pressure_of(x[0].max(0.0), x[1]).ok()?;
        let p1_eq = equilibrium_pressure(x[1], kin).ok()?;
        let (p2, p2_eq) = match self.mode {
            Mode::Standalone => (None, None),
            Mode::Endex => (
                Some(pressure_of(x[2].max(0.0), x[3]).ok()?),
                Some(equilibrium_pressure(x[3], kin).ok()?),
            ),
        };
        let c1_in = p.c1_in();
        let conversion = if c1_in > 0.0 { 1.0 - x[0] / c1_in } else { 0.0 };
        Some(Derived {
            p1,
            p1_eq,
            p2,
            p2_eq,
            conversion,
        })
    }
}

pub(crate) fn scaled_residual<S: Parametric + ?Sized>(
    sys: &S,
    scales: &[f64],
    mu: f64,
    x: &[f64],
    out: &mut [f64],
) -> Result<(), NumericsError> {
    sys.rhs(mu, x, out)?;
    for (o, s) in out.iter_mut().zip(scales) {
        *o /= s;
    }
    Ok(())
}

pub(crate) fn newton_options<S: Parametric + ?Sized>(sys: &S, base: &NewtonOptions) -> NewtonOptions {
    NewtonOptions {
        fd_scales: Some(base.fd_scales.clone().unwrap_or_else(|| sys.fd_scales())),
        ..base.clone()
    }
}

/// Newton solve for a steady state at parameter value `mu`.
pub fn solve_steady<S: Parametric + ?Sized>(
    sys: &S,
    mu: f64,
    guess: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonSolution, NumericsError> {
    let scales = sys.state_scales();
    newton_solve(
        |x, out| scaled_residual(sys, &scales, mu, x, out),
        guess,
        &newton_options(sys, opts),
    )
}

/// Eigenvalues, stability and derived quantities at a converged point.
pub fn analyze<S: Parametric + ?Sized>(
    sys: &S,
    mu: f64,
    x: &[f64],
    residual_norm: f64,
) -> Result<SteadyStateRecord, NumericsError> {
    let jac = fd_jacobian(|y, out| sys.rhs(mu, y, out), x, DEFAULT_FD_STEP, &sys.fd_scales())?;
    let jacobian_det = jac.determinant();
    let eigen = eigenvalues(&jac)?;
    let stability = classify(&eigen, 0.0);
    Ok(SteadyStateRecord {
        param_value: mu,
        state: x.to_vec(),
        eigen,
        stability,
        jacobian_det,
        residual_norm,
        derived: sys.derived(mu, x),
    })
}

/// The fresh-feed state: inlet concentration, inlet temperature, empty
/// calciner at the inlet temperature.
pub fn feed_state(mode: Mode, p: &ModelParams) -> Vec<f64> {
    let t = p.flow.inlet_gas_temperature;
    match mode {
        Mode::Standalone => vec![p.c1_in(), t],
        Mode::Endex => vec![p.c1_in(), t, 0.0, t],
    }
}

const SEED_SETTLE_TIMES: [f64; 3] = [200.0, 2_000.0, 10_000.0];

/// Integrates from the feed state until Newton converges on a steady state.
///
/// The first attempt settles for 200 s; on failure the transient is carried
/// on to 2000 s and then 10⁴ s.
pub fn seed_steady_state(
    mode: Mode,
    p: &ModelParams,
    newton: &NewtonOptions,
) -> Result<Vec<f64>, ContinuationError> {
    p.validate().map_err(|e| ContinuationError::Seed(e.into()))?;
    let mut sys = ModelSystem::new(mode, *p);
    let family = ModelFamily::new(mode, *p, ParamRef::Fs);
    let mu = p.flow.solids_flow;
    // The transient only has to land inside Newton's basin, so a loose
    // tolerance and the stiff method are enough and stay cheap when the
    // heat capacities are small.
    let opts = IntegrateOptions {
        output: Output::Endpoints,
        method: Method::Rosenbrock23,
        tol: Tolerance { rel: 1e-6, abs: 1e-8 },
        ..Default::default()
    };
    let mut y = feed_state(mode, p);
    let mut t = 0.0;
    let mut last_err = None;
    for &t_end in &SEED_SETTLE_TIMES {
        let tr = integrate(&mut sys, &y, (t, t_end), &[], &opts).map_err(ContinuationError::Seed)?;
        y = tr.last().to_vec();
        t = t_end;
        match solve_steady(&family, mu, &y, newton) {
            Ok(sol) => return Ok(sol.x),
            Err(e) => last_err = Some(e),
        }
    }
    Err(ContinuationError::Seed(last_err.expect("at least one attempt")))
}
