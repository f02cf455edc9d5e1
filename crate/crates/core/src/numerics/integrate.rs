use nalgebra::{DMatrix, DVector};

use super::{fd_jacobian, NumericsError, DEFAULT_FD_STEP};

/// A first-order system `y' = f(t, y)` whose parameters may be switched at
/// scheduled times.
pub trait OdeSystem {
    /// A parameter change that can be scheduled as a timed event.
    type Change;

    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), NumericsError>;

    /// Applies `change` and returns a description for the event log.
    fn apply(&mut self, change: &Self::Change) -> Result<String, NumericsError>;

    /// Clamps `y` back into the admissible state domain. Returns a
    /// description when anything was changed.
    fn project(&self, _y: &mut [f64]) -> Option<String> {
        None
    }
}

/// Adapter turning a closure into an [`OdeSystem`] without events.
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), NumericsError>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnSystem { dim, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), NumericsError>,
{
    type Change = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), NumericsError> {
        (self.f)(t, y, dy)
    }

    fn apply(&mut self, _change: &()) -> Result<String, NumericsError> {
        Ok(String::from("no-op"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent<C> {
    pub time: f64,
    pub change: C,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-8,
            abs: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Explicit Dormand-Prince 5(4).
    #[default]
    DormandPrince45,
    /// Linearly implicit Rosenbrock 2(3) for stiff problems.
    Rosenbrock23,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Output {
    /// Every accepted step plus event times.
    #[default]
    EveryStep,
    /// A uniform grid from the start time; the integrator lands on every
    /// grid point exactly.
    Interval(f64),
    /// Start, end and event times only.
    Endpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub tol: Tolerance,
    pub method: Method,
    pub max_steps: usize,
    pub max_step: Option<f64>,
    pub output: Output,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            tol: Tolerance::default(),
            method: Method::default(),
            max_steps: 2_000_000,
            max_step: None,
            output: Output::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub event_log: Vec<(f64, String)>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, y: &[f64]) {
        if self.times.last() == Some(&t) {
            *self.states.last_mut().unwrap() = y.to_vec();
        } else {
            self.times.push(t);
            self.states.push(y.to_vec());
        }
    }
}

// Dormand-Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Outcome of one attempted step.
enum Attempt {
    Accepted { err: f64 },
    Rejected { err: f64 },
    /// A stage evaluation failed; carries the error in case the step
    /// size cannot shrink any further.
    StageFailed(NumericsError),
}

struct Stepper {
    n: usize,
    method: Method,
    tol: Tolerance,
    k: Vec<Vec<f64>>,
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    fnew: Vec<f64>,
    err: Vec<f64>,
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Stepper {
    fn new(n: usize, method: Method, tol: Tolerance) -> Self {
        Stepper {
            n,
            method,
            tol,
            k: vec![vec![0.0; n]; 7],
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
            fnew: vec![0.0; n],
            err: vec![0.0; n],
        }
    }

    fn order(&self) -> f64 {
        match self.method {
            Method::DormandPrince45 => 5.0,
            Method::Rosenbrock23 => 3.0,
        }
    }

    fn error_norm(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let sc = self.tol.abs + self.tol.rel * y[i].abs().max(self.ynew[i].abs());
            acc += (self.err[i] / sc).powi(2);
        }
        (acc / self.n as f64).sqrt()
    }

    fn eval<S: OdeSystem>(
        sys: &S,
        t: f64,
        y: &[f64],
        out: &mut [f64],
    ) -> Result<(), NumericsError> {
        sys.rhs(t, y, out)?;
        if !all_finite(out) {
            return Err(NumericsError::NonFinite("right-hand side"));
        }
        Ok(())
    }

    /// `f0` is `f(t, y)`. On acceptance `ynew`/`fnew` hold the new state and
    /// its derivative.
    fn attempt<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[f64], f0: &[f64], h: f64) -> Attempt {
        let res = match self.method {
            Method::DormandPrince45 => self.dp45(sys, t, y, f0, h),
            Method::Rosenbrock23 => self.ros23(sys, t, y, f0, h),
        };
        if let Err(e) = res {
            return Attempt::StageFailed(e);
        }
        if !all_finite(&self.ynew) {
            return Attempt::StageFailed(NumericsError::NonFinite("trial step"));
        }
        let err = self.error_norm(y);
        if !err.is_finite() {
            return Attempt::StageFailed(NumericsError::NonFinite("error estimate"));
        }
        if err <= 1.0 {
            Attempt::Accepted { err }
        } else {
            Attempt::Rejected { err }
        }
    }

    fn dp45<S: OdeSystem>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h: f64,
    ) -> Result<(), NumericsError> {
        let n = self.n;
        let (k, ytmp) = (&mut self.k, &mut self.ytmp);
        k[0].copy_from_slice(f0);
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k[0][i];
        }
        Self::eval(sys, t + C2 * h, ytmp, &mut k[1])?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        Self::eval(sys, t + C3 * h, ytmp, &mut k[2])?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        Self::eval(sys, t + C4 * h, ytmp, &mut k[3])?;
        for i in 0..n {
            ytmp[i] =
                y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        Self::eval(sys, t + C5 * h, ytmp, &mut k[4])?;
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        Self::eval(sys, t + h, ytmp, &mut k[5])?;
        for i in 0..n {
            self.ynew[i] = y[i]
                + h * (A71 * k[0][i]
                    + A73 * k[2][i]
                    + A74 * k[3][i]
                    + A75 * k[4][i]
                    + A76 * k[5][i]);
        }
        Self::eval(sys, t + h, &self.ynew, &mut self.fnew)?;
        for i in 0..n {
            self.err[i] = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * self.fnew[i]);
        }
        Ok(())
    }

    fn ros23<S: OdeSystem>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h: f64,
    ) -> Result<(), NumericsError> {
        let n = self.n;
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;

        let scales: Vec<f64> = y.iter().map(|v| v.abs().max(1.0)).collect();
        let jac = fd_jacobian(|x, out| Self::eval(sys, t, x, out), y, DEFAULT_FD_STEP, &scales)?;
        // Explicit time dependence by a forward difference in t.
        let dt = DEFAULT_FD_STEP * t.abs().max(1.0);
        Self::eval(sys, t + dt, y, &mut self.ytmp)?;
        let tder: Vec<f64> = (0..n).map(|i| (self.ytmp[i] - f0[i]) / dt).collect();

        let w = DMatrix::identity(n, n) - jac * (h * d);
        let lu = w.lu();
        let solve = |rhs: Vec<f64>| -> Result<Vec<f64>, NumericsError> {
            lu.solve(&DVector::from_vec(rhs))
                .map(|v| v.as_slice().to_vec())
                .ok_or_else(|| NumericsError::SingularJacobian { x: y.to_vec() })
        };

        let k1 = solve((0..n).map(|i| f0[i] + h * d * tder[i]).collect())?;
        for i in 0..n {
            self.ytmp[i] = y[i] + 0.5 * h * k1[i];
        }
        let mut f1 = vec![0.0; n];
        Self::eval(sys, t + 0.5 * h, &self.ytmp, &mut f1)?;
        let mut k2 = solve((0..n).map(|i| f1[i] - k1[i]).collect())?;
        for i in 0..n {
            k2[i] += k1[i];
            self.ynew[i] = y[i] + h * k2[i];
        }
        Self::eval(sys, t + h, &self.ynew, &mut self.fnew)?;
        let k3 = solve(
            (0..n)
                .map(|i| {
                    self.fnew[i] - e32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]) + h * d * tder[i]
                })
                .collect(),
        )?;
        for i in 0..n {
            self.err[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
        }
        Ok(())
    }
}

fn initial_step<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    tol: Tolerance,
    order: f64,
) -> f64 {
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| tol.abs + tol.rel * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    if sys.rhs(t + h0, &y1, &mut f1).is_err() || !all_finite(&f1) {
        return h0 * 1e-3;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / order)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `sys` from `y0` over `t_span`, applying `events` at their
/// times. Events outside `[t_span.0, t_span.1)` are ignored.
pub fn integrate<S: OdeSystem>(
    sys: &mut S,
    y0: &[f64],
    t_span: (f64, f64),
    events: &[TimedEvent<S::Change>],
    opts: &IntegrateOptions,
) -> Result<Trajectory, NumericsError> {
    let (t0, t1) = t_span;
    let n = sys.dim();
    if y0.len() != n {
        return Err(NumericsError::InvalidInput(format!(
            "initial state has {} components, system has {}",
            y0.len(),
            n
        )));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(NumericsError::InvalidInput(format!("bad time span ({t0}, {t1})")));
    }
    if !(opts.tol.rel > 0.0 && opts.tol.abs > 0.0) {
        return Err(NumericsError::InvalidInput("tolerances must be positive".into()));
    }
    if !all_finite(y0) {
        return Err(NumericsError::NonFinite("initial state"));
    }

    let mut order: Vec<usize> = (0..events.len())
        .filter(|&i| events[i].time >= t0 && events[i].time < t1)
        .collect();
    order.sort_by(|&a, &b| events[a].time.partial_cmp(&events[b].time).unwrap());

    let mut out = Trajectory::default();
    let mut y = y0.to_vec();
    if let Some(msg) = sys.project(&mut y) {
        out.event_log.push((t0, msg));
    }
    let mut t = t0;
    let mut next_event = 0;
    while next_event < order.len() && events[order[next_event]].time <= t0 {
        let msg = sys.apply(&events[order[next_event]].change)?;
        out.event_log.push((t0, msg));
        next_event += 1;
    }
    out.push(t, &y);
    if t1 == t0 {
        return Ok(out);
    }

    let grid_dt = match opts.output {
        Output::Interval(dt) if dt > 0.0 => Some(dt),
        Output::Interval(dt) => {
            return Err(NumericsError::InvalidInput(format!("output interval {dt} must be positive")))
        }
        _ => None,
    };
    let mut grid_index: u64 = 1;
    let next_grid = |k: u64| grid_dt.map(|dt| t0 + k as f64 * dt);

    let mut stepper = Stepper::new(n, opts.method, opts.tol);
    let mut f0 = vec![0.0; n];
    Stepper::eval(sys, t, &y, &mut f0)?;
    let hmax = opts.max_step.unwrap_or(f64::INFINITY).min(t1 - t0);
    let mut h = initial_step(sys, t, &y, &f0, opts.tol, stepper.order()).min(hmax);
    let mut steps = 0usize;
    let mut clamping = false;
    let mut last_rejected = false;

    while t < t1 {
        // The next place the integrator must land exactly.
        let mut stop = t1;
        if next_event < order.len() {
            stop = stop.min(events[order[next_event]].time);
        }
        while let Some(g) = next_grid(grid_index) {
            if g <= t {
                grid_index += 1;
            } else {
                stop = stop.min(g);
                break;
            }
        }

        let remaining = stop - t;
        let clipped = h >= remaining || t + h >= stop;
        let h_try = if clipped { remaining } else { h };

        if steps >= opts.max_steps {
            return Err(NumericsError::TooManySteps { t, state: y });
        }
        steps += 1;

        match stepper.attempt(sys, t, &y, &f0, h_try) {
            Attempt::Accepted { err } => {
                t = if clipped { stop } else { t + h_try };
                y.copy_from_slice(&stepper.ynew);
                let projected = sys.project(&mut y);
                if projected.is_some() {
                    Stepper::eval(sys, t, &y, &mut f0)?;
                } else {
                    f0.copy_from_slice(&stepper.fnew);
                }
                match (projected, clamping) {
                    (Some(msg), false) => {
                        out.event_log.push((t, msg));
                        clamping = true;
                    }
                    (None, true) => clamping = false,
                    _ => {}
                }

                let fac = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-1.0 / stepper.order())).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                let fac = if last_rejected { fac.min(1.0) } else { fac };
                last_rejected = false;
                // A step shortened to hit a stop point says nothing about the
                // natural step size, so keep the larger of the two.
                let base = if clipped { h.max(h_try) } else { h_try };
                h = (base * fac).min(hmax);

                let at_event =
                    next_event < order.len() && t == events[order[next_event]].time;
                let at_grid = next_grid(grid_index) == Some(t);
                if at_grid {
                    grid_index += 1;
                }
                let record = match opts.output {
                    Output::EveryStep => true,
                    Output::Interval(_) => at_grid || t == t1 || at_event,
                    Output::Endpoints => t == t1 || at_event,
                };
                if record {
                    out.push(t, &y);
                }
                if at_event {
                    while next_event < order.len() && events[order[next_event]].time == t {
                        let msg = sys.apply(&events[order[next_event]].change)?;
                        out.event_log.push((t, msg));
                        next_event += 1;
                    }
                    Stepper::eval(sys, t, &y, &mut f0)?;
                }
            }
            Attempt::Rejected { err } => {
                let fac = (SAFETY * err.powf(-1.0 / stepper.order())).clamp(MIN_FACTOR, 1.0);
                h = h_try * fac;
                last_rejected = true;
                if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(NumericsError::StiffnessFailure { t, state: y });
                }
            }
            Attempt::StageFailed(e) => {
                h = h_try * 0.25;
                last_rejected = true;
                if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(match e {
                        NumericsError::NonFinite(_) => NumericsError::StiffnessFailure { t, state: y },
                        other => other,
                    });
                }
            }
        }
    }
    Ok(out)
}
