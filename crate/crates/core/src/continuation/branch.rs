use nalgebra::DVector;

use super::family::{analyze, newton_options, scaled_residual, solve_steady};
use super::singular::detect_singularities;
use super::{Branch, ContinuationError, ModelFamily, Parametric, SteadyStateRecord};
use crate::model::{Mode, ModelParams, ParamRef};
use crate::numerics::{
    fd_jacobian, newton_solve, scaled_distance, NewtonOptions, NumericsError, DEFAULT_FD_STEP,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    /// Steps as fractions of the range width.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Start at the upper end of the range and walk down.
    pub descending: bool,
    /// Largest accepted distance, in scaled state units, between a
    /// predictor and its corrected point.
    pub max_jump: f64,
    pub max_records: usize,
    pub newton: NewtonOptions,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            initial_step: 1.0 / 200.0,
            min_step: 1e-5,
            max_step: 1.0 / 50.0,
            descending: false,
            max_jump: 0.05,
            max_records: 20_000,
            newton: NewtonOptions {
                max_iter: 30,
                ..Default::default()
            },
        }
    }
}

/// Continuation coordinates: state divided by its scales, parameter
/// shifted and divided by the range width.
pub(crate) struct Scaling {
    pub x: Vec<f64>,
    pub mu0: f64,
    pub mu_scale: f64,
}

impl Scaling {
    pub fn to_z(&self, mu: f64, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = x.iter().zip(&self.x).map(|(v, s)| v / s).collect();
        z.push((mu - self.mu0) / self.mu_scale);
        z
    }

    pub fn from_z(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let n = self.x.len();
        let x = z[..n].iter().zip(&self.x).map(|(v, s)| v * s).collect();
        (self.mu0 + z[n] * self.mu_scale, x)
    }

    pub fn z_fd_scales(&self, fd: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = fd.iter().zip(&self.x).map(|(f, s)| f / s).collect();
        v.push(1e-3);
        v
    }

    /// Residual of `f = 0` together with the hyperplane `n . (z - z0) = 0`.
    pub fn bordered_residual<'a, S: Parametric + ?Sized>(
        &'a self,
        sys: &'a S,
        res_scales: &'a [f64],
        normal: &'a [f64],
        z0: &'a [f64],
    ) -> impl FnMut(&[f64], &mut [f64]) -> Result<(), NumericsError> + 'a {
        move |z, out| {
            let n = self.x.len();
            let (mu, x) = self.from_z(z);
            scaled_residual(sys, res_scales, mu, &x, &mut out[..n])?;
            out[n] = normal
                .iter()
                .zip(z)
                .zip(z0)
                .map(|((a, b), c)| a * (b - c))
                .sum();
            Ok(())
        }
    }

    /// Solves `f = 0` on the hyperplane through `z0` with normal `normal`.
    pub fn solve_on_plane<S: Parametric + ?Sized>(
        &self,
        sys: &S,
        normal: &[f64],
        z0: &[f64],
        newton: &NewtonOptions,
    ) -> Result<(Vec<f64>, f64, usize), NumericsError> {
        let res_scales = sys.state_scales();
        let opts = NewtonOptions {
            fd_scales: Some(self.z_fd_scales(&sys.fd_scales())),
            ..newton.clone()
        };
        let sol = newton_solve(self.bordered_residual(sys, &res_scales, normal, z0), z0, &opts)?;
        Ok((sol.x, sol.residual_norm, sol.iterations))
    }

    /// Unit tangent to the solution curve at `z`, oriented along `hint`.
    pub fn tangent<S: Parametric + ?Sized>(
        &self,
        sys: &S,
        z: &[f64],
        hint: &[f64],
    ) -> Result<Vec<f64>, NumericsError> {
        let n = self.x.len();
        let res_scales = sys.state_scales();
        let zeros = vec![0.0; n + 1];
        let jac = fd_jacobian(
            self.bordered_residual(sys, &res_scales, hint, &zeros),
            z,
            DEFAULT_FD_STEP,
            &self.z_fd_scales(&sys.fd_scales()),
        )?;
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let t = jac
            .lu()
            .solve(&rhs)
            .filter(|t| t.iter().all(|v| v.is_finite()))
            .ok_or_else(|| NumericsError::SingularJacobian { x: z.to_vec() })?;
        let norm = t.norm();
        let mut t: Vec<f64> = t.iter().map(|v| v / norm).collect();
        if dot(&t, hint) < 0.0 {
            t.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(t)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn unit(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

fn sign_flip(a: f64, b: f64) -> bool {
    a != 0.0 && b != 0.0 && a.signum() != b.signum()
}

enum Stepping {
    Natural { h: f64 },
    Arclength { ds: f64, tangent: Vec<f64> },
}

/// Traces the steady states of `sys` over `range`, starting from a Newton
/// solve at the start of the range seeded with `guess`.
///
/// Natural-parameter stepping is used while it works; when the step
/// collapses at a fold the trace switches to pseudo-arclength stepping,
/// rounds the fold and switches back once the branch is again mostly
/// parameter-aligned. Singular points are detected and refined at the end.
pub fn trace_branch<S: Parametric + ?Sized>(
    sys: &S,
    range: (f64, f64),
    guess: &[f64],
    ctrl: &StepControl,
) -> Result<Branch, ContinuationError> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(ContinuationError::InvalidRange { lo, hi });
    }
    let (start, dir) = if ctrl.descending { (hi, -1.0) } else { (lo, 1.0) };
    let newton = newton_options(sys, &ctrl.newton);
    let seed = solve_steady(sys, start, guess, &newton).map_err(ContinuationError::Seed)?;
    let mut records = vec![analyze(sys, start, &seed.x, seed.residual_norm)?];
    let mut branch = Branch {
        param: None,
        records: Vec::new(),
        singular_points: Vec::new(),
        truncated: false,
    };
    if lo == hi {
        branch.records = records;
        return Ok(branch);
    }

    let width = hi - lo;
    let scaling = Scaling {
        x: sys.state_scales(),
        mu0: lo,
        mu_scale: width,
    };
    let (h_min, h_max) = (ctrl.min_step * width, ctrl.max_step * width);
    let (ds_min, ds_max) = (ctrl.min_step, ctrl.max_step);
    let mut mode = Stepping::Natural {
        h: ctrl.initial_step * width,
    };
    let mut dir = dir;
    let scales = sys.state_scales();

    let mut attempts = 0usize;
    loop {
        attempts += 1;
        if records.len() >= ctrl.max_records || attempts > 50 * ctrl.max_records {
            branch.truncated = true;
            break;
        }
        let cur = records.last().unwrap();
        let prev = records.len().checked_sub(2).map(|i| &records[i]);
        match &mut mode {
            Stepping::Natural { h } => {
                let end = if dir > 0.0 { hi } else { lo };
                let mut mu_new = cur.param_value + dir * *h;
                let last = (mu_new - end) * dir >= 0.0;
                if last {
                    mu_new = end;
                }
                let pred: Vec<f64> = match prev {
                    Some(p) if p.param_value != cur.param_value => {
                        let r = (mu_new - cur.param_value) / (cur.param_value - p.param_value);
                        cur.state
                            .iter()
                            .zip(&p.state)
                            .map(|(c, q)| c + r * (c - q))
                            .collect()
                    }
                    _ => cur.state.clone(),
                };
                let attempt = solve_steady(sys, mu_new, &pred, &newton)
                    .ok()
                    .filter(|s| scaled_distance(&s.x, &pred, &scales) <= ctrl.max_jump)
                    .and_then(|s| {
                        analyze(sys, mu_new, &s.x, s.residual_norm)
                            .ok()
                            .map(|r| (r, s.iterations))
                    })
                    .filter(|(r, _)| !sign_flip(r.jacobian_det, cur.jacobian_det));
                match attempt {
                    Some((rec, iters)) => {
                        let used = (mu_new - cur.param_value).abs();
                        records.push(rec);
                        if last {
                            break;
                        }
                        *h = if iters <= 3 { (2.0 * used).min(h_max) } else { used };
                    }
                    None => {
                        *h = 0.5 * (mu_new - cur.param_value).abs();
                        if *h < h_min {
                            // Step collapse: assume a fold and go round it.
                            let zc = scaling.to_z(cur.param_value, &cur.state);
                            let hint = match prev {
                                Some(p) => {
                                    let zp = scaling.to_z(p.param_value, &p.state);
                                    unit(&zc.iter().zip(&zp).map(|(a, b)| a - b).collect::<Vec<_>>())
                                }
                                None => {
                                    let mut e = vec![0.0; zc.len()];
                                    e[zc.len() - 1] = dir;
                                    e
                                }
                            };
                            let tangent = match scaling.tangent(sys, &zc, &hint) {
                                Ok(t) => t,
                                Err(_) => {
                                    branch.truncated = true;
                                    break;
                                }
                            };
                            let ds = match prev {
                                Some(p) => scaled_step(&scaling, p, cur),
                                None => ds_min,
                            }
                            .clamp(ds_min, ds_max);
                            log::debug!(
                                "natural stepping collapsed at {}; switching to arclength",
                                cur.param_value
                            );
                            mode = Stepping::Arclength { ds, tangent };
                        }
                    }
                }
            }
            Stepping::Arclength { ds, tangent } => {
                let zc = scaling.to_z(cur.param_value, &cur.state);
                let zp: Vec<f64> = zc.iter().zip(tangent.iter()).map(|(a, t)| a + *ds * t).collect();
                let attempt = scaling
                    .solve_on_plane(sys, tangent, &zp, &newton)
                    .ok()
                    .filter(|(z, _, _)| {
                        let jump = z.iter().zip(&zp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        jump <= ctrl.max_jump.max(*ds)
                    });
                let Some((z, res, iters)) = attempt else {
                    *ds *= 0.5;
                    if *ds < ds_min {
                        log::warn!("arclength step collapsed at {}", cur.param_value);
                        branch.truncated = true;
                        break;
                    }
                    continue;
                };
                let (mu, x) = scaling.from_z(&z);
                let outside = mu < lo || mu > hi;
                if outside {
                    // Land exactly on whichever boundary the branch leaves by.
                    let bound = if mu > hi { hi } else { lo };
                    let frac = (bound - cur.param_value) / (mu - cur.param_value);
                    let guess: Vec<f64> = cur
                        .state
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| a + frac * (b - a))
                        .collect();
                    match solve_steady(sys, bound, &guess, &newton) {
                        Ok(s) => records.push(analyze(sys, bound, &s.x, s.residual_norm)?),
                        Err(_) => branch.truncated = true,
                    }
                    log::debug!("branch left the range through {bound}");
                    break;
                }
                let rec = match analyze(sys, mu, &x, res) {
                    Ok(r) => r,
                    Err(_) => {
                        branch.truncated = true;
                        break;
                    }
                };
                records.push(rec);
                let new_t = match scaling.tangent(sys, &z, tangent) {
                    Ok(t) => t,
                    Err(_) => {
                        branch.truncated = true;
                        break;
                    }
                };
                let t_mu = new_t[new_t.len() - 1];
                let next_ds = if iters <= 3 { (2.0 * *ds).min(ds_max) } else { *ds };
                if t_mu.abs() > 0.7 {
                    dir = t_mu.signum();
                    mode = Stepping::Natural {
                        h: (next_ds * t_mu.abs() * width).clamp(h_min, h_max),
                    };
                } else {
                    *ds = next_ds;
                    *tangent = new_t;
                }
            }
        }
    }

    branch.records = records;
    if branch.records.len() >= 2 {
        branch.singular_points = detect_singularities(sys, &branch, &ctrl.newton)?;
    }
    Ok(branch)
}

fn scaled_step(s: &Scaling, a: &SteadyStateRecord, b: &SteadyStateRecord) -> f64 {
    let za = s.to_z(a.param_value, &a.state);
    let zb = s.to_z(b.param_value, &b.state);
    za.iter()
        .zip(&zb)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Seeds at the start of the range by transient settling, then traces.
pub fn trace_model_branch(
    mode: Mode,
    base: &ModelParams,
    param: ParamRef,
    range: (f64, f64),
    ctrl: &StepControl,
) -> Result<Branch, ContinuationError> {
    let start = if ctrl.descending { range.1 } else { range.0 };
    let seed_params = (*base).with(param, start);
    let guess = super::seed_steady_state(mode, &seed_params, &ctrl.newton)?;
    let family = ModelFamily::new(mode, *base, param);
    let mut b = trace_branch(&family, range, &guess, ctrl)?;
    b.param = Some(param);
    Ok(b)
}
