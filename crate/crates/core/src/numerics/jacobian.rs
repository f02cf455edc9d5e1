use nalgebra::DMatrix;

use super::NumericsError;

pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Central-difference Jacobian of `f` at `x`.
///
/// Column `j` uses the step `h_rel * max(|x_j|, scales[j])`, so a component
/// sitting at zero still gets a step of `h_rel * scales[j]`.
pub fn fd_jacobian<F>(
    mut f: F,
    x: &[f64],
    h_rel: f64,
    scales: &[f64],
) -> Result<DMatrix<f64>, NumericsError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), NumericsError>,
{
    if !(h_rel > 0.0) {
        return Err(NumericsError::InvalidInput(format!("h_rel must be positive, got {h_rel}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("Jacobian base point"));
    }
    let n = x.len();
    let mut probe = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = h_rel * x[j].abs().max(scales[j]);
        probe[j] = x[j] + h;
        let hp = probe[j] - x[j];
        f(&probe, &mut fp)?;
        probe[j] = x[j] - h;
        let hm = x[j] - probe[j];
        f(&probe, &mut fm)?;
        probe[j] = x[j];
        for i in 0..n {
            let d = (fp[i] - fm[i]) / (hp + hm);
            if !d.is_finite() {
                return Err(NumericsError::NonFiniteColumn { column: j });
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}
