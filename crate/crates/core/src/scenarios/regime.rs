use rayon::prelude::*;

use crate::continuation::{
    coexisting_states, trace_model_branch, Branch, ModelFamily, SingularPoint, StepControl,
    SteadyStateRecord,
};
use crate::model::{Mode, ModelParams, ParamRef};

/// Sample values of the operating regime, one list per axis. Units are SI:
/// K, s, kg/s, s, W/K.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeAxes {
    pub t1_in: Vec<f64>,
    pub tau1: Vec<f64>,
    pub fs: Vec<f64>,
    pub tau2: Vec<f64>,
    pub lex: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl RegimeAxes {
    /// `n` evenly spaced points per axis over T1_in 973–1273 K, τ1 0.1–20 s,
    /// Fs 10–40 kg/s, τ2 15–60 s and Lex 0–100 kW/K.
    pub fn uniform(n: usize) -> Self {
        RegimeAxes {
            t1_in: linspace(973.0, 1273.0, n),
            tau1: linspace(0.1, 20.0, n),
            fs: linspace(10.0, 40.0, n),
            tau2: linspace(15.0, 60.0, n),
            lex: linspace(0.0, 1e5, n),
        }
    }
}

impl Default for RegimeAxes {
    fn default() -> Self {
        Self::uniform(5)
    }
}

/// One `(τ1, Fs, τ2, Lex)` combination with its inlet-temperature branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeLine {
    pub tau1: f64,
    pub fs: f64,
    pub tau2: f64,
    pub lex: f64,
    pub branch: Result<Branch, String>,
    /// Steady states at the sampled inlet temperatures.
    pub samples: Vec<(f64, Result<SteadyStateRecord, String>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub lines: Vec<RegimeLine>,
}

impl RegimeReport {
    pub fn sample_records(&self) -> impl Iterator<Item = (&RegimeLine, f64, &SteadyStateRecord)> {
        self.lines.iter().flat_map(|l| {
            l.samples
                .iter()
                .filter_map(move |(t, r)| r.as_ref().ok().map(|r| (l, *t, r)))
        })
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.lines {
            if let Err(e) = &l.branch {
                out.push(format!("tau1={} Fs={} tau2={} Lex={}: {e}", l.tau1, l.fs, l.tau2, l.lex));
            }
            for (t, r) in &l.samples {
                if let Err(e) = r {
                    out.push(format!(
                        "T1_in={t} tau1={} Fs={} tau2={} Lex={}: {e}",
                        l.tau1, l.fs, l.tau2, l.lex
                    ));
                }
            }
        }
        out
    }

    pub fn singular_points(&self) -> impl Iterator<Item = (&RegimeLine, &SingularPoint)> {
        self.lines.iter().flat_map(|l| {
            l.branch
                .iter()
                .flat_map(move |b| b.singular_points.iter().map(move |s| (l, s)))
        })
    }
}

/// Traces an inlet-temperature branch of the Endex model for every
/// `(τ1, Fs, τ2, Lex)` combination and solves at each sampled T1_in.
/// Lines run in parallel; the report is in axis order.
pub fn regime_grid(base: &ModelParams, axes: &RegimeAxes, ctrl: &StepControl) -> RegimeReport {
    let mut combos = Vec::new();
    for &tau1 in &axes.tau1 {
        for &fs in &axes.fs {
            for &tau2 in &axes.tau2 {
                for &lex in &axes.lex {
                    combos.push((tau1, fs, tau2, lex));
                }
            }
        }
    }
    let lo = axes.t1_in.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = axes.t1_in.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lines = combos
        .par_iter()
        .map(|&(tau1, fs, tau2, lex)| {
            let p = base
                .with(ParamRef::Tau1, tau1)
                .with(ParamRef::Fs, fs)
                .with(ParamRef::Tau2, tau2)
                .with(ParamRef::Lex, lex);
            let branch = trace_model_branch(Mode::Endex, &p, ParamRef::T1In, (lo, hi), ctrl);
            let family = ModelFamily::new(Mode::Endex, p, ParamRef::T1In);
            let samples = axes
                .t1_in
                .iter()
                .map(|&t| {
                    let rec = match &branch {
                        Ok(b) => coexisting_states(&family, b, t, &ctrl.newton)
                            .map_err(|e| e.to_string())
                            .and_then(|r| {
                                r.states
                                    .into_iter()
                                    .next()
                                    .ok_or_else(|| "branch does not cover this point".to_string())
                            }),
                        Err(e) => Err(e.to_string()),
                    };
                    (t, rec)
                })
                .collect();
            RegimeLine {
                tau1,
                fs,
                tau2,
                lex,
                branch: branch.map_err(|e| e.to_string()),
                samples,
            }
        })
        .collect();
    RegimeReport { lines }
}
