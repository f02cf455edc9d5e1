use nalgebra::DVector;

use super::branch::{dot, unit, Scaling, StepControl};
use super::family::{analyze, newton_options};
use super::singular::{bisect_chord, PARAM_RTOL};
use super::{ContinuationError, ModelFamily, Parametric, SingularPoint, SteadyStateRecord};
use crate::model::{Mode, ModelParams, ParamRef};
use crate::numerics::{fd_jacobian, NewtonOptions, NumericsError, DEFAULT_FD_STEP};

/// A fold continued in a second parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldLocus {
    /// `(primary, secondary)` parameter pairs ordered by the secondary one.
    pub points: Vec<(f64, f64)>,
    pub states: Vec<Vec<f64>>,
    /// The fold could no longer be bracketed before the lower or upper end
    /// of the secondary range.
    pub lost_below: bool,
    pub lost_above: bool,
}

const BRACKET_HALF_WIDTHS: [f64; 3] = [0.01, 0.04, 0.16];

struct FoldPoint {
    mu: f64,
    x: Vec<f64>,
    tangent: Vec<f64>,
}

fn scaling_for<S: Parametric + ?Sized>(sys: &S, mu: f64) -> Scaling {
    Scaling {
        x: sys.state_scales(),
        mu0: mu,
        mu_scale: mu.abs().max(1.0),
    }
}

/// Null direction of the scaled Jacobian by two rounds of inverse iteration.
fn null_direction<S: Parametric + ?Sized>(sys: &S, mu: f64, x: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let scales = sys.state_scales();
    let n = x.len();
    let jac = fd_jacobian(|y, out| sys.rhs(mu, y, out), x, DEFAULT_FD_STEP, &sys.fd_scales())?;
    // d(f/s)/d(x/s) = S^-1 J S
    let js = nalgebra::DMatrix::from_fn(n, n, |i, j| jac[(i, j)] * scales[j] / scales[i]);
    let shift = 1e-10 * js.iter().map(|v| v.abs()).fold(1e-300, f64::max);
    let lu = (js + nalgebra::DMatrix::identity(n, n) * shift).lu();
    let mut v = DVector::from_element(n, 1.0);
    for _ in 0..2 {
        v = lu
            .solve(&v)
            .filter(|w| w.iter().all(|a| a.is_finite()))
            .ok_or_else(|| NumericsError::SingularJacobian { x: x.to_vec() })?;
        let nv = v.norm();
        v /= nv;
    }
    let mut t: Vec<f64> = v.iter().copied().collect();
    t.push(0.0);
    Ok(t)
}

fn det_positive(r: &SteadyStateRecord) -> bool {
    r.jacobian_det > 0.0
}

/// Re-brackets a fold of `sys` near `prev` and refines it.
fn locate_fold<S: Parametric + ?Sized>(
    sys: &S,
    prev: &FoldPoint,
    newton: &NewtonOptions,
) -> Option<FoldPoint> {
    let scaling = scaling_for(sys, prev.mu);
    let zf = scaling.to_z(prev.mu, &prev.x);
    let t = &prev.tangent;
    for &w in &BRACKET_HALF_WIDTHS {
        let end = |sgn: f64| -> Option<SteadyStateRecord> {
            let z0: Vec<f64> = zf.iter().zip(t).map(|(a, b)| a + sgn * w * b).collect();
            let (z, res, _) = scaling.solve_on_plane(sys, t, &z0, newton).ok()?;
            let (mu, x) = scaling.from_z(&z);
            analyze(sys, mu, &x, res).ok()
        };
        let (Some(a), Some(b)) = (end(-1.0), end(1.0)) else {
            continue;
        };
        if det_positive(&a) == det_positive(&b) {
            continue;
        }
        let tol = PARAM_RTOL * a.param_value.abs().max(1e-3);
        let (lo, hi, _) = bisect_chord(sys, &scaling, &a, &b, det_positive, tol, newton);
        let pick = if lo.jacobian_det.abs() <= hi.jacobian_det.abs() { lo } else { hi };
        let z = scaling.to_z(pick.param_value, &pick.state);
        let tangent = scaling.tangent(sys, &z, t).ok()?;
        return Some(FoldPoint {
            mu: pick.param_value,
            x: pick.state,
            tangent,
        });
    }
    None
}

/// Continues `fold` in a second parameter `nu` over `range`.
///
/// `make(nu)` builds the one-parameter system at a given value of the
/// second parameter; `nu0` is the value at which `fold` was found.
pub fn trace_fold_locus<S, M>(
    make: M,
    nu0: f64,
    fold: &SingularPoint,
    range: (f64, f64),
    ctrl: &StepControl,
) -> Result<FoldLocus, ContinuationError>
where
    S: Parametric,
    M: Fn(f64) -> S,
{
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && nu0 >= lo && nu0 <= hi) {
        return Err(ContinuationError::InvalidRange { lo, hi });
    }
    let newton = ctrl.newton.clone();
    let sys0 = make(nu0);
    let newton0 = newton_options(&sys0, &newton);
    let hint = null_direction(&sys0, fold.param_value, &fold.state)?;
    let scaling0 = scaling_for(&sys0, fold.param_value);
    let z0 = scaling0.to_z(fold.param_value, &fold.state);
    let tangent = unit(&scaling0.tangent(&sys0, &z0, &hint)?);
    let seed = FoldPoint {
        mu: fold.param_value,
        x: fold.state.clone(),
        tangent,
    };

    let mut locus = FoldLocus {
        points: vec![(seed.mu, nu0)],
        states: vec![seed.x.clone()],
        lost_below: false,
        lost_above: false,
    };
    if lo == hi {
        return Ok(locus);
    }
    let width = hi - lo;
    let mut progressed = false;
    for dir in [-1.0, 1.0] {
        let end = if dir > 0.0 { hi } else { lo };
        if nu0 == end {
            continue;
        }
        let mut nu = nu0;
        let mut cur = FoldPoint {
            mu: seed.mu,
            x: seed.x.clone(),
            tangent: seed.tangent.clone(),
        };
        let mut h = ctrl.initial_step * width;
        let mut side = Vec::new();
        let lost = loop {
            let mut nu_new = nu + dir * h;
            let last = (nu_new - end) * dir >= 0.0;
            if last {
                nu_new = end;
            }
            let sys = make(nu_new);
            let opts = newton_options(&sys, &newton0);
            match locate_fold(&sys, &cur, &opts) {
                Some(mut f) => {
                    if dot(&f.tangent, &cur.tangent) < 0.0 {
                        f.tangent.iter_mut().for_each(|v| *v = -*v);
                    }
                    side.push((f.mu, nu_new, f.x.clone()));
                    progressed = true;
                    cur = f;
                    nu = nu_new;
                    if last {
                        break false;
                    }
                    h = (2.0 * h).min(ctrl.max_step * width);
                }
                None => {
                    h *= 0.5;
                    if h < ctrl.min_step * width {
                        break true;
                    }
                }
            }
        };
        if dir < 0.0 {
            locus.lost_below = lost;
            side.reverse();
            let mut pts: Vec<(f64, f64)> = side.iter().map(|(m, n, _)| (*m, *n)).collect();
            let mut sts: Vec<Vec<f64>> = side.into_iter().map(|(_, _, x)| x).collect();
            pts.append(&mut locus.points);
            sts.append(&mut locus.states);
            locus.points = pts;
            locus.states = sts;
        } else {
            locus.lost_above = lost;
            for (m, n, x) in side {
                locus.points.push((m, n));
                locus.states.push(x);
            }
        }
    }
    if !progressed {
        return Err(ContinuationError::DegenerateLocus);
    }
    Ok(locus)
}

/// Fold locus of the reactor model: `fold` was found with `primary` free
/// and the base value of `secondary`.
pub fn trace_model_fold_locus(
    mode: Mode,
    base: &ModelParams,
    primary: ParamRef,
    fold: &SingularPoint,
    secondary: ParamRef,
    range: (f64, f64),
    ctrl: &StepControl,
) -> Result<FoldLocus, ContinuationError> {
    let nu0 = base.get(secondary);
    trace_fold_locus(
        |nu| ModelFamily::new(mode, (*base).with(secondary, nu), primary),
        nu0,
        fold,
        range,
        ctrl,
    )
}
