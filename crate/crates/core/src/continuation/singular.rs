use super::branch::Scaling;
use super::family::analyze;
use super::{
    Branch, ContinuationError, Parametric, SingularKind, SingularPoint, SteadyStateRecord,
};
use crate::numerics::{Complex, NewtonOptions, IMAG_ZERO_TOL};

/// Relative parameter tolerance for refined singular points.
pub const PARAM_RTOL: f64 = 1e-6;
pub const BISECTION_MAX_ITER: usize = 80;
/// Bisection also stops only once the bracket is this fraction of the
/// original chord.
const CHORD_TOL: f64 = 1e-6;

pub(crate) fn branch_scaling<S: Parametric + ?Sized>(sys: &S, b: &Branch) -> Scaling {
    let (lo, hi) = b
        .records
        .iter()
        .map(|r| r.param_value)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), v| (a.min(v), c.max(v)));
    let width = hi - lo;
    Scaling {
        x: sys.state_scales(),
        mu0: lo,
        mu_scale: if width > 0.0 { width } else { lo.abs().max(1.0) },
    }
}

fn real_unstable(r: &SteadyStateRecord) -> usize {
    r.eigen.values.iter().filter(|l| l.im.abs() < IMAG_ZERO_TOL && l.re > 0.0).count()
}

fn complex_unstable(r: &SteadyStateRecord) -> usize {
    r.eigen.values.iter().filter(|l| l.im.abs() >= IMAG_ZERO_TOL && l.re > 0.0).count()
}

fn is_stable(r: &SteadyStateRecord) -> bool {
    real_unstable(r) + complex_unstable(r) == 0
}

fn fold_side(r: &SteadyStateRecord) -> bool {
    real_unstable(r) % 2 == 1
}

/// Bisects on the chord between two converged points for the place where
/// `indicator` changes sign. Points are recomputed on hyperplanes normal to
/// the chord, so the search is well posed across folds.
///
/// Returns the refined record on each side of the crossing and whether the
/// parameter tolerance was reached.
pub(crate) fn bisect_chord<S, F>(
    sys: &S,
    scaling: &Scaling,
    a: &SteadyStateRecord,
    b: &SteadyStateRecord,
    indicator: F,
    param_tol: f64,
    newton: &NewtonOptions,
) -> (SteadyStateRecord, SteadyStateRecord, bool)
where
    S: Parametric + ?Sized,
    F: Fn(&SteadyStateRecord) -> bool,
{
    let za = scaling.to_z(a.param_value, &a.state);
    let zb = scaling.to_z(b.param_value, &b.state);
    let chord: Vec<f64> = zb.iter().zip(&za).map(|(x, y)| x - y).collect();
    let side_a = indicator(a);
    let (mut lo, mut hi) = ((0.0, a.clone()), (1.0, b.clone()));
    // Near a fold the parameter is quadratic along the chord, so both ends
    // can agree in the parameter while still far from the crossing; the
    // chord interval has to shrink as well.
    let done = |lo: &(f64, SteadyStateRecord), hi: &(f64, SteadyStateRecord)| {
        let dmu = (hi.1.param_value - lo.1.param_value).abs();
        (dmu <= param_tol && hi.0 - lo.0 <= CHORD_TOL) || hi.0 - lo.0 < 1e-15
    };
    for _ in 0..BISECTION_MAX_ITER {
        if done(&lo, &hi) {
            return (lo.1, hi.1, true);
        }
        let s = 0.5 * (lo.0 + hi.0);
        let z0: Vec<f64> = za.iter().zip(&chord).map(|(x, d)| x + s * d).collect();
        let rec = scaling
            .solve_on_plane(sys, &chord, &z0, newton)
            .ok()
            .and_then(|(z, res, _)| {
                let (mu, x) = scaling.from_z(&z);
                analyze(sys, mu, &x, res).ok()
            });
        let Some(rec) = rec else {
            return (lo.1, hi.1, false);
        };
        if indicator(&rec) == side_a {
            lo = (s, rec);
        } else {
            hi = (s, rec);
        }
    }
    let ok = done(&lo, &hi);
    (lo.1, hi.1, ok)
}

/// Eigenvalue closest to the imaginary axis among those of the given kind
/// (real for folds, upper half plane for Hopf points).
fn crossing_of(r: &SteadyStateRecord, kind: SingularKind) -> Option<Complex<f64>> {
    r.eigen
        .values
        .iter()
        .filter(|l| match kind {
            SingularKind::Fold => l.im.abs() < IMAG_ZERO_TOL,
            SingularKind::Hopf => l.im >= IMAG_ZERO_TOL,
        })
        .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
        .copied()
}

pub(crate) fn singular_from(
    kind: SingularKind,
    lo: SteadyStateRecord,
    hi: SteadyStateRecord,
    confident: bool,
    after_record: usize,
) -> SingularPoint {
    let dist = |r: &SteadyStateRecord| crossing_of(r, kind).map_or(f64::INFINITY, |l| l.re.abs());
    let pick = if dist(&lo) <= dist(&hi) { lo } else { hi };
    let crossing = crossing_of(&pick, kind).unwrap_or_else(|| pick.eigen.leading());
    let kind = if crossing.im.abs() < IMAG_ZERO_TOL {
        SingularKind::Fold
    } else {
        SingularKind::Hopf
    };
    SingularPoint {
        kind,
        param_value: pick.param_value,
        state: pick.state,
        crossing_eigenvalue: crossing,
        low_confidence: !confident,
        after_record,
    }
}

/// Finds every real eigenvalue passing through zero and every conjugate pair
/// crossing the imaginary axis between consecutive records, and refines each
/// by bisection. This covers every sign change of the largest real part, and
/// also crossings that happen while another mode is already unstable.
///
/// A complex pair that merges onto the real axis inside the right half plane
/// changes both counts without any crossing and is not reported.
pub fn detect_singularities<S: Parametric + ?Sized>(
    sys: &S,
    b: &Branch,
    newton: &NewtonOptions,
) -> Result<Vec<SingularPoint>, ContinuationError> {
    if b.records.len() < 2 {
        return Err(ContinuationError::TooFewRecords(b.records.len()));
    }
    let scaling = branch_scaling(sys, b);
    let mut out = Vec::new();
    for (i, w) in b.records.windows(2).enumerate() {
        let mu_ref = w[0].param_value.abs().max(1e-3 * scaling.mu_scale);
        let tol = PARAM_RTOL * mu_ref;
        let mut found = Vec::new();
        if fold_side(&w[0]) != fold_side(&w[1]) {
            let (lo, hi, ok) = bisect_chord(sys, &scaling, &w[0], &w[1], fold_side, tol, newton);
            found.push((SingularKind::Fold, lo, hi, ok));
        }
        let (ca, cb) = (complex_unstable(&w[0]), complex_unstable(&w[1]));
        let total = |r: &SteadyStateRecord| real_unstable(r) + complex_unstable(r);
        if ca != cb && total(&w[0]) != total(&w[1]) {
            let side = |r: &SteadyStateRecord| complex_unstable(r) == ca;
            let (lo, hi, ok) = bisect_chord(sys, &scaling, &w[0], &w[1], side, tol, newton);
            found.push((SingularKind::Hopf, lo, hi, ok));
        }
        if found.is_empty() && is_stable(&w[0]) != is_stable(&w[1]) {
            // Crossing and merging inside a single step: only the sign of
            // the largest real part still records it.
            let (lo, hi, ok) = bisect_chord(sys, &scaling, &w[0], &w[1], is_stable, tol, newton);
            let kind = if lo.eigen.leading().im.abs() < IMAG_ZERO_TOL
                && hi.eigen.leading().im.abs() < IMAG_ZERO_TOL
            {
                SingularKind::Fold
            } else {
                SingularKind::Hopf
            };
            found.push((kind, lo, hi, ok));
        }
        let dir = (w[1].param_value - w[0].param_value).signum();
        found.sort_by(|a, b| (dir * a.1.param_value).total_cmp(&(dir * b.1.param_value)));
        for (kind, lo, hi, ok) in found {
            if !ok {
                log::warn!("singular point after record {i} was not refined to tolerance");
            }
            out.push(singular_from(kind, lo, hi, ok, i));
        }
    }
    Ok(out)
}
