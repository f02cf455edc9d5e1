use crate::continuation::{Branch, SteadyStateRecord};
use crate::model::ModelParams;
use crate::numerics::Trajectory;

fn lerp(a: f64, b: f64, r: f64) -> f64 {
    a + r * (b - a)
}

/// First parameter value, walking along the branch, at which `f` reaches
/// `threshold` from below, linearly interpolated between records.
pub fn first_param_reaching<F>(b: &Branch, f: F, threshold: f64) -> Option<f64>
where
    F: Fn(&SteadyStateRecord) -> f64,
{
    let first = b.records.first()?;
    if f(first) >= threshold {
        return Some(first.param_value);
    }
    b.records.windows(2).find_map(|w| {
        let (fa, fb) = (f(&w[0]), f(&w[1]));
        (fa < threshold && fb >= threshold).then(|| {
            lerp(w[0].param_value, w[1].param_value, (threshold - fa) / (fb - fa))
        })
    })
}

/// First parameter value at which state component `i` crosses `value` in
/// either direction.
pub fn crossing_param(b: &Branch, i: usize, value: f64) -> Option<f64> {
    b.records.windows(2).find_map(|w| {
        let (a, c) = (w[0].state[i] - value, w[1].state[i] - value);
        (a == 0.0 || a.signum() != c.signum()).then(|| {
            lerp(w[0].param_value, w[1].param_value, a / (a - c))
        })
    })
}

/// `|T1 - T2|` on a monotone branch at `param`, linearly interpolated.
pub fn temperature_gap_at(b: &Branch, param: f64) -> Option<f64> {
    b.records.windows(2).find_map(|w| {
        let (pa, pb) = (w[0].param_value, w[1].param_value);
        let inside = (pa <= param && param <= pb) || (pb <= param && param <= pa);
        if !inside {
            return None;
        }
        let r = if pb == pa { 0.0 } else { (param - pa) / (pb - pa) };
        let gap = |s: &[f64]| (s[1] - s[3]).abs();
        Some(lerp(gap(&w[0].state), gap(&w[1].state), r))
    })
}

/// Earliest time after which the scaled max-norm distance from
/// `reference`, over `components`, stays below `frac` for the rest of the
/// trajectory.
pub fn settle_time(
    tr: &Trajectory,
    reference: &[f64],
    scales: &[f64],
    components: &[usize],
    frac: f64,
) -> Option<f64> {
    let dist = |s: &[f64]| {
        components
            .iter()
            .map(|&i| ((s[i] - reference[i]) / scales[i]).abs())
            .fold(0.0, f64::max)
    };
    let last_out = tr.states.iter().rposition(|s| dist(s) >= frac);
    match last_out {
        None => tr.times.first().copied(),
        Some(k) if k + 1 < tr.times.len() => Some(tr.times[k + 1]),
        Some(_) => None,
    }
}

/// Largest rise of T1 above its value at `t_switch` and how long after the
/// switch it occurs.
pub fn peak_excursion(tr: &Trajectory, t_switch: f64) -> Option<(f64, f64)> {
    let k0 = tr.times.iter().position(|&t| t >= t_switch)?;
    let t1_0 = tr.states[k0][1];
    tr.times[k0..]
        .iter()
        .zip(&tr.states[k0..])
        .map(|(t, s)| (s[1] - t1_0, t - t_switch))
        .fold(None, |best: Option<(f64, f64)>, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
}

/// Parameter value (segment midpoint) at which `|dp1/dparam|` is largest.
pub fn steepest_descent_point(b: &Branch) -> Option<f64> {
    b.records
        .windows(2)
        .filter_map(|w| {
            let (a, c) = (w[0].derived?, w[1].derived?);
            let dp = w[1].param_value - w[0].param_value;
            (dp != 0.0).then(|| {
                (
                    ((c.p1 - a.p1) / dp).abs(),
                    0.5 * (w[0].param_value + w[1].param_value),
                )
            })
        })
        .fold(None, |best: Option<(f64, f64)>, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
        .map(|(_, p)| p)
}

/// Temperature rise of the carboniser gas for complete conversion of the
/// inlet CO2 with only the gas heat capacity to absorb it, K.
pub fn adiabatic_rise(p: &ModelParams) -> f64 {
    p.c1_in() * p.kinetics.reaction_enthalpy.abs() / p.carboniser.gas_heat_capacity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::SteadyStateRecord;
    use crate::numerics::{classify, Complex, EigenSet};

    fn rec(mu: f64, state: Vec<f64>) -> SteadyStateRecord {
        let eigen = EigenSet {
            values: vec![Complex::new(-1.0, 0.0)],
        };
        SteadyStateRecord {
            param_value: mu,
            state,
            stability: classify(&eigen, 0.0),
            eigen,
            jacobian_det: -1.0,
            residual_norm: 0.0,
            derived: None,
        }
    }

    fn branch(recs: Vec<SteadyStateRecord>) -> Branch {
        Branch {
            param: None,
            records: recs,
            singular_points: vec![],
            truncated: false,
        }
    }

    #[test]
    fn crossing_is_interpolated() {
        let b = branch(vec![rec(0.0, vec![10.0]), rec(1.0, vec![6.0]), rec(2.0, vec![2.0])]);
        assert_eq!(crossing_param(&b, 0, 7.0), Some(0.75));
        assert_eq!(crossing_param(&b, 0, 20.0), None);
        assert_eq!(first_param_reaching(&b, |r| -r.state[0], -4.0), Some(1.5));
    }

    #[test]
    fn settle_time_requires_staying_inside() {
        let tr = Trajectory {
            times: vec![0.0, 1.0, 2.0, 3.0],
            states: vec![vec![1.0], vec![0.0], vec![0.5], vec![0.01]],
            event_log: vec![],
        };
        assert_eq!(settle_time(&tr, &[0.0], &[1.0], &[0], 0.1), Some(3.0));
        assert_eq!(settle_time(&tr, &[0.0], &[1.0], &[0], 2.0), Some(0.0));
        assert_eq!(settle_time(&tr, &[5.0], &[1.0], &[0], 0.1), None);
    }

    #[test]
    fn adiabatic_rise_of_the_printed_table() {
        let r = adiabatic_rise(&ModelParams::table1());
        assert!((r - 712.3).abs() < 1.0, "{r}");
    }
}
