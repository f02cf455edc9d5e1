use nalgebra::DVector;

use super::{fd_jacobian, NumericsError, DEFAULT_FD_STEP};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    /// Bound on the infinity norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings tried when a full step increases the residual.
    pub max_halvings: usize,
    pub fd_step: f64,
    /// Finite-difference floors, one per component (defaults to 1).
    pub fd_scales: Option<Vec<f64>>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-9,
            max_iter: 50,
            max_halvings: 20,
            fd_step: DEFAULT_FD_STEP,
            fd_scales: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Damped Newton iteration on `residual(x) = 0` with a central-difference
/// Jacobian.
///
/// Success means `‖residual(x)‖∞ < tol`; anything else is an error that
/// carries the best iterate seen.
pub fn newton_solve<F>(
    mut residual: F,
    guess: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonSolution, NumericsError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), NumericsError>,
{
    if !(opts.tol > 0.0) {
        return Err(NumericsError::InvalidInput(format!("tol must be positive, got {}", opts.tol)));
    }
    if guess.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("Newton initial guess"));
    }
    let n = guess.len();
    let scales = opts.fd_scales.clone().unwrap_or_else(|| vec![1.0; n]);
    let mut x = guess.to_vec();
    let mut r = vec![0.0; n];
    residual(&x, &mut r)?;
    let mut norm = inf_norm(&r);
    if !norm.is_finite() {
        return Err(NumericsError::NonFinite("Newton residual at initial guess"));
    }
    let (mut best_x, mut best_norm) = (x.clone(), norm);
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];

    for iter in 0..=opts.max_iter {
        if norm < opts.tol {
            return Ok(NewtonSolution {
                x,
                residual_norm: norm,
                iterations: iter,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let jac = fd_jacobian(&mut residual, &x, opts.fd_step, &scales)?;
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let dx = jac
            .lu()
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or_else(|| NumericsError::SingularJacobian { x: x.clone() })?;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for i in 0..n {
                trial[i] = x[i] + lambda * dx[i];
            }
            let ok = residual(&trial, &mut r_trial).is_ok();
            let trial_norm = inf_norm(&r_trial);
            if ok && trial_norm.is_finite() && trial_norm < norm {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Take the most damped step anyway if it is at least evaluable;
            // otherwise we are stuck.
            if residual(&trial, &mut r_trial).is_err() || !inf_norm(&r_trial).is_finite() {
                break;
            }
        }
        x.copy_from_slice(&trial);
        r.copy_from_slice(&r_trial);
        norm = inf_norm(&r);
        if norm < best_norm {
            best_norm = norm;
            best_x.copy_from_slice(&x);
        }
    }
    Err(NumericsError::NonConvergence {
        best: best_x,
        residual_norm: best_norm,
        iterations: opts.max_iter,
    })
}
