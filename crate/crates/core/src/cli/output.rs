//! CSV and JSON artifacts.
//!
//! Column sets are fixed. Branch files carry
//! `param,c1,T1,c2,T2,p1,p1_eq,p2,p2_eq,conversion,max_re_lambda,stability`;
//! trajectory files carry `t,c1,T1,c2,T2,p1,p1_eq,p2,p2_eq`; fold loci carry
//! `param,second,c1,T1,c2,T2`. Calciner columns are empty for the standalone
//! carboniser. Numbers are written with 12 significant digits.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use crate::continuation::{Branch, FoldLocus, SingularKind, SingularPoint};
use crate::model::{Mode, ModelParams};
use crate::numerics::StabilityKind;
use crate::scenarios::{adiabatic_rise, state_pressures, Outcome, ScenarioResult, TrajectoryResult};

pub const BRANCH_COLUMNS: [&str; 12] = [
    "param", "c1", "T1", "c2", "T2", "p1", "p1_eq", "p2", "p2_eq", "conversion", "max_re_lambda", "stability",
];
pub const TRAJECTORY_COLUMNS: [&str; 9] = ["t", "c1", "T1", "c2", "T2", "p1", "p1_eq", "p2", "p2_eq"];
pub const LOCUS_COLUMNS: [&str; 6] = ["param", "second", "c1", "T1", "c2", "T2"];

const SIG_DIGITS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot serialise summary: {0}")]
    Json(#[from] serde_json::Error),
    #[error("state outside the model domain: {0}")]
    Domain(#[from] crate::model::ModelError),
}

/// `x` with 12 significant digits, fixed or scientific like `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIG_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{exp}")
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn stability_name(k: StabilityKind) -> &'static str {
    match k {
        StabilityKind::Stable => "stable",
        StabilityKind::Unstable => "unstable",
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, OutputError> {
    csv::Writer::from_path(path).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<usize, OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    let mut n = 0;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
        n += 1;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(n)
}

fn state_cells(mode: Mode, x: &[f64]) -> [String; 4] {
    match mode {
        Mode::Endex => [fmt_num(x[0]), fmt_num(x[1]), fmt_num(x[2]), fmt_num(x[3])],
        Mode::Standalone => [fmt_num(x[0]), fmt_num(x[1]), String::new(), String::new()],
    }
}

/// Writes one row per record; returns the row count.
pub fn write_branch_csv(path: &Path, mode: Mode, b: &Branch) -> Result<usize, OutputError> {
    write_rows(
        path,
        &BRANCH_COLUMNS,
        b.records.iter().map(|r| {
            let mut row = vec![fmt_num(r.param_value)];
            row.extend(state_cells(mode, &r.state));
            let d = r.derived.as_ref();
            row.push(opt(d.map(|d| d.p1)));
            row.push(opt(d.map(|d| d.p1_eq)));
            row.push(opt(d.and_then(|d| d.p2)));
            row.push(opt(d.and_then(|d| d.p2_eq)));
            row.push(opt(d.map(|d| d.conversion)));
            row.push(fmt_num(r.stability.max_real_part));
            row.push(stability_name(r.stability.kind).into());
            row
        }),
    )
}

pub fn write_trajectory_csv(
    path: &Path,
    mode: Mode,
    p: &ModelParams,
    tr: &TrajectoryResult,
) -> Result<usize, OutputError> {
    let rows = tr
        .trajectory
        .times
        .iter()
        .zip(&tr.trajectory.states)
        .map(|(t, x)| {
            let (p1, p1_eq, p2, p2_eq) = state_pressures(mode, p, x)?;
            let mut row = vec![fmt_num(*t)];
            row.extend(state_cells(mode, x));
            row.extend([fmt_num(p1), fmt_num(p1_eq), opt(p2), opt(p2_eq)]);
            Ok(row)
        })
        .collect::<Result<Vec<_>, OutputError>>()?;
    write_rows(path, &TRAJECTORY_COLUMNS, rows.into_iter())
}

pub fn write_locus_csv(path: &Path, mode: Mode, l: &FoldLocus) -> Result<usize, OutputError> {
    write_rows(
        path,
        &LOCUS_COLUMNS,
        l.points.iter().zip(&l.states).map(|((mu, nu), x)| {
            let mut row = vec![fmt_num(*mu), fmt_num(*nu)];
            row.extend(state_cells(mode, x));
            row
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularEntry {
    pub kind: SingularKind,
    pub param_value: f64,
    pub state: Vec<f64>,
    /// `[re, im]`, 1/s.
    pub crossing_eigenvalue: [f64; 2],
    pub low_confidence: bool,
}

impl From<&SingularPoint> for SingularEntry {
    fn from(s: &SingularPoint) -> Self {
        SingularEntry {
            kind: s.kind,
            param_value: s.param_value,
            state: s.state.clone(),
            crossing_eigenvalue: [s.crossing_eigenvalue.re, s.crossing_eigenvalue.im],
            low_confidence: s.low_confidence,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StabilityCounts {
    pub stable: usize,
    pub unstable: usize,
    pub oscillatory: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Derived {
    Branch {
        param: String,
        param_range: [f64; 2],
        conversion_range: Option<[f64; 2]>,
        max_re_lambda: f64,
    },
    Trajectory {
        final_time: f64,
        final_state: Vec<f64>,
        /// `[p1, p1_eq, p2, p2_eq]`, Pa; calciner entries null when absent.
        final_pressures: [Option<f64>; 4],
        /// `[t, T1]` at the largest carboniser temperature.
        peak_t1: [f64; 2],
        reference: Option<Vec<f64>>,
        events: Vec<(f64, String)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub mode: Mode,
    pub output: String,
    pub records: usize,
    pub truncated: bool,
    pub params: std::collections::BTreeMap<String, super::units::RawValue>,
    /// K, complete conversion absorbed by the carboniser gas alone.
    pub adiabatic_rise: f64,
    pub singular_points: Vec<SingularEntry>,
    pub stability_counts: Option<StabilityCounts>,
    pub derived: Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    /// Seconds since the Unix epoch.
    pub created: u64,
    /// The resolved configuration; reloading it reproduces the run.
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub provenance: Provenance,
    pub truncated: bool,
    pub failures: Vec<String>,
    pub scenarios: Vec<ScenarioSummary>,
}

impl Provenance {
    pub fn new(config: RunConfig) -> Self {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            created,
            config,
        }
    }
}

fn min_max(v: impl Iterator<Item = f64>) -> Option<[f64; 2]> {
    v.fold(None, |acc, x| match acc {
        None => Some([x, x]),
        Some([a, b]) => Some([a.min(x), b.max(x)]),
    })
}

fn branch_summary(b: &Branch) -> (StabilityCounts, Derived) {
    let mut counts = StabilityCounts::default();
    for r in &b.records {
        match r.stability.kind {
            StabilityKind::Stable => counts.stable += 1,
            StabilityKind::Unstable => counts.unstable += 1,
        }
        counts.oscillatory += usize::from(r.stability.oscillatory);
    }
    let derived = Derived::Branch {
        param: b.param.map(|p| p.name().to_string()).unwrap_or_default(),
        param_range: min_max(b.records.iter().map(|r| r.param_value)).unwrap_or([f64::NAN; 2]),
        conversion_range: min_max(b.records.iter().filter_map(|r| r.derived.as_ref().map(|d| d.conversion))),
        max_re_lambda: b
            .records
            .iter()
            .map(|r| r.stability.max_real_part)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    (counts, derived)
}

/// Writes the CSV for one scenario result into `dir` and summarises it.
pub fn write_result(dir: &Path, res: &ScenarioResult) -> Result<ScenarioSummary, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mode = res.spec.mode;
    let params = res.spec.params();
    let (file, records, truncated, singular, counts, derived) = match &res.outcome {
        Outcome::Branch(b) => {
            let path = dir.join("branch.csv");
            let n = write_branch_csv(&path, mode, b)?;
            let (counts, derived) = branch_summary(b);
            let sing = b.singular_points.iter().map(SingularEntry::from).collect();
            ("branch.csv", n, b.truncated, sing, Some(counts), derived)
        }
        Outcome::Trajectory(tr) => {
            let path = dir.join("trajectory.csv");
            let n = write_trajectory_csv(&path, mode, &tr.final_params, tr)?;
            let last = tr.trajectory.last().to_vec();
            let (p1, p1_eq, p2, p2_eq) = state_pressures(mode, &tr.final_params, &last)?;
            let peak = tr
                .trajectory
                .times
                .iter()
                .zip(&tr.trajectory.states)
                .map(|(t, x)| [*t, x[1]])
                .fold([f64::NAN, f64::NEG_INFINITY], |a, b| if b[1] > a[1] { b } else { a });
            let derived = Derived::Trajectory {
                final_time: *tr.trajectory.times.last().unwrap_or(&0.0),
                final_state: last,
                final_pressures: [Some(p1), Some(p1_eq), p2, p2_eq],
                peak_t1: peak,
                reference: tr.reference.clone(),
                events: tr.trajectory.event_log.clone(),
            };
            ("trajectory.csv", n, false, Vec::new(), None, derived)
        }
    };
    Ok(ScenarioSummary {
        name: res.spec.name.clone(),
        mode,
        output: file.into(),
        records,
        truncated,
        params: super::config::params_table(&params),
        adiabatic_rise: adiabatic_rise(&params),
        singular_points: singular,
        stability_counts: counts,
        derived,
    })
}

pub fn write_summary(path: &Path, s: &Summary) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(s)?;
    std::fs::write(path, text + "\n").map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}
