use endex::continuation::{
    coexisting_states, solve_steady, Branch, ModelFamily, StepControl,
};
use endex::model::{Mode, ModelParams, ParamRef};
use endex::numerics::{scaled_distance, NewtonOptions};
use endex::scenarios::{
    self, adiabatic_rise, campaign, run_all, run_spec, steady_state, temperature_gap_at,
    InitialState, RunSettings, ScenarioError, ScenarioKind, ScenarioSpec, ScheduledChange, Sweep,
    CAMPAIGNS,
};

use ParamRef::*;

fn base() -> ModelParams {
    ModelParams::calibrated()
}

fn run(spec: &ScenarioSpec) -> endex::scenarios::ScenarioResult {
    run_spec(spec, &RunSettings::default()).unwrap()
}

fn branch(spec: &ScenarioSpec) -> Branch {
    run(spec).branch().unwrap().clone()
}

/// Component `i` (or a function of the record) linearly interpolated along a
/// branch that is monotone in its parameter.
fn at<F: Fn(&endex::continuation::SteadyStateRecord) -> f64>(b: &Branch, mu: f64, f: F) -> f64 {
    let w = b
        .records
        .windows(2)
        .find(|w| (w[0].param_value - mu) * (w[1].param_value - mu) <= 0.0)
        .unwrap_or_else(|| panic!("{mu} outside branch"));
    let (pa, pb) = (w[0].param_value, w[1].param_value);
    let r = if pa == pb { 0.0 } else { (mu - pa) / (pb - pa) };
    f(&w[0]) + r * (f(&w[1]) - f(&w[0]))
}

fn scales() -> Vec<f64> {
    Mode::Endex.state_scales(&base())
}

#[test]
fn every_campaign_resolves_and_unknown_names_are_rejected() {
    for name in CAMPAIGNS {
        assert!(!campaign(name, &base()).unwrap().is_empty(), "{name}");
    }
    assert!(matches!(campaign("nope", &base()), Err(ScenarioError::Unknown(_))));
}

#[test]
fn scenarios_are_deterministic() {
    let specs: Vec<ScenarioSpec> = scenarios::hysteresis_scan(&base())
        .into_iter()
        .chain(scenarios::startup(&base(), &[10.0]))
        .collect();
    let a = run_all(&specs, &RunSettings::default());
    let b: Vec<_> = specs.iter().map(|s| run_spec(s, &RunSettings::default())).collect();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
    }
}

#[test]
fn equal_sorbent_flows_give_identical_branches() {
    let s = scenarios::sorbent_flow_compare(&base(), &[10.0, 10.0]);
    assert_eq!(branch(&s[0]).records, branch(&s[1]).records);
}

#[test]
fn zero_length_inlet_sweep_gives_single_records() {
    for mut s in scenarios::endex_inlet_sweep(&base(), &[30.0, 60.0], &[10.0, 15.0]) {
        s.kind = ScenarioKind::Branch { sweep: Sweep { param: T1In, lo: 1060.0, hi: 1060.0, descending: false } };
        assert_eq!(branch(&s).records.len(), 1, "{}", s.name);
    }
}

#[test]
fn standalone_records_keep_carbonation_spontaneous() {
    for s in scenarios::standalone_sweep(&base()) {
        let b = branch(&s);
        for r in &b.records {
            let d = r.derived.as_ref().unwrap();
            assert!(d.p1 > d.p1_eq, "{} at tau1 {}", s.name, r.param_value);
            assert!(d.p2.is_none());
        }
    }
}

#[test]
fn longer_carboniser_residence_is_cooler_unless_the_solids_stop() {
    for s in scenarios::endex_inlet_sweep(&base(), &[30.0, 60.0], &[10.0, 15.0]).chunks(2) {
        let (short, long) = (branch(&s[0]), branch(&s[1]));
        assert!(s[0].params().get(Tau1) < s[1].params().get(Tau1));
        for mu in [980.0, 1060.0, 1150.0, 1260.0] {
            assert!(at(&long, mu, |r| r.state[1]) < at(&short, mu, |r| r.state[1]), "{} at {mu}", s[1].name);
        }
    }
    // Without sorbent flow or wall exchange the carboniser decouples from the
    // calciner and is exactly the standalone carboniser.
    let p = base().with(Fs, 0.0).with(Lex, 0.0).with(Tau2, 30.0);
    for t1_in in [1000.0, 1060.0, 1200.0] {
        let q = p.with(T1In, t1_in);
        let t_short = steady_state(Mode::Standalone, &q.with(Tau1, 10.0)).unwrap()[1];
        let t_long = steady_state(Mode::Standalone, &q.with(Tau1, 15.0)).unwrap()[1];
        assert!(t_long > t_short, "at {t1_in}: {t_long} <= {t_short}");
    }
}

#[test]
fn more_sorbent_narrows_the_gap_and_lowers_p1() {
    let s = scenarios::sorbent_flow_compare(&base(), &[10.0, 40.0]);
    let (low, high) = (branch(&s[0]), branch(&s[1]));
    for mu in (0..=20).map(|i| 973.0 + 15.0 * i as f64) {
        assert!(temperature_gap_at(&high, mu).unwrap() < temperature_gap_at(&low, mu).unwrap(), "gap at {mu}");
        let p1 = |b: &Branch| at(b, mu, |r| r.derived.as_ref().unwrap().p1);
        assert!(p1(&high) < p1(&low), "p1 at {mu}");
    }
}

#[test]
fn conversion_is_monotone_in_carboniser_residence_time() {
    let coarse = RunSettings::default();
    let fine = RunSettings {
        step: StepControl {
            initial_step: coarse.step.initial_step / 4.0,
            max_step: coarse.step.max_step / 4.0,
            ..coarse.step.clone()
        },
        ..coarse.clone()
    };
    for s in scenarios::endex_tau_sweep(&base()) {
        let b = run_spec(&s, &coarse).unwrap().branch().unwrap().clone();
        let dense = run_spec(&s, &fine).unwrap().branch().unwrap().clone();
        assert!(dense.records.len() >= 3 * b.records.len(), "{}", s.name);
        for br in [&b, &dense] {
            let conv: Vec<f64> = br.records.iter().map(|r| r.derived.as_ref().unwrap().conversion).collect();
            assert!(conv.windows(2).all(|w| w[1] >= w[0]), "{}", s.name);
        }
        for r in &b.records {
            let c = r.derived.as_ref().unwrap().conversion;
            let d = at(&dense, r.param_value, |x| x.derived.as_ref().unwrap().conversion);
            assert!((c - d).abs() < 5e-3, "{} at {}", s.name, r.param_value);
        }
    }
}

#[test]
fn wall_exchange_closes_the_temperature_gap() {
    for s in scenarios::wall_coupling_sweep(&base()) {
        let b = branch(&s);
        let gaps: Vec<f64> = b.records.iter().map(|r| (r.state[1] - r.state[3]).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{}", s.name);
        assert!(gaps.last().unwrap() < &(0.35 * gaps[0]), "{}", s.name);

        // The Lex = 0 end is the inlet-temperature sweep at its set point.
        let mut inlet = s.clone();
        inlet.overrides.push((Lex, 0.0));
        inlet.kind = ScenarioKind::Branch { sweep: Sweep { param: T1In, lo: 1060.0, hi: 1060.0, descending: false } };
        let r0 = &branch(&inlet).records[0];
        assert_eq!(b.records[0].param_value, 0.0);
        assert!(scaled_distance(&b.records[0].state, &r0.state, &scales()) < 1e-9, "{}", s.name);
    }
}

/// Steady `(T1, T2)` at Lex = 10 kW/K for the wall-exchange configurations.
const LEX_10KW: [(&str, f64, f64); 4] = [
    ("wall_Fs20_tau1_10", 1086.1713070933818, 1060.8357234355167),
    ("wall_Fs20_tau1_15", 1061.770399013057, 1042.869883388441),
    ("wall_Fs40_tau1_15", 1055.5890640657617, 1044.001467904728),
    ("wall_Fs40_tau1_20", 1038.6918796769426, 1029.4789047846498),
];

#[test]
fn wall_exchange_goldens_at_ten_kilowatts_per_kelvin() {
    for (s, (name, t1, t2)) in scenarios::wall_coupling_sweep(&base()).iter().zip(LEX_10KW) {
        assert_eq!(s.name, name);
        // Continuation, corrected onto Lex = 1e4 exactly.
        let b = branch(s);
        let guess: Vec<f64> = (0..4).map(|i| at(&b, 1e4, |r| r.state[i])).collect();
        let family = ModelFamily::new(Mode::Endex, s.params(), Lex);
        let from_branch = solve_steady(&family, 1e4, &guess, &NewtonOptions::default()).unwrap().x;
        // Newton seeded by an independent transient.
        let from_transient = steady_state(Mode::Endex, &s.params().with(Lex, 1e4)).unwrap();
        for x in [&from_branch, &from_transient] {
            assert!((x[1] - t1).abs() < 1e-6 && (x[3] - t2).abs() < 1e-6, "{name}: {x:?}");
        }
    }
}

#[test]
fn starting_at_the_steady_state_stays_there() {
    let mut s = scenarios::startup(&base(), &[10.0]).remove(0);
    if let ScenarioKind::Trajectory { initial, .. } = &mut s.kind {
        *initial = InitialState::SteadyState;
    }
    let tr = run(&s);
    let tr = tr.trajectory().unwrap();
    let x0 = tr.reference.as_ref().unwrap();
    let drift = tr
        .trajectory
        .states
        .iter()
        .map(|y| scaled_distance(y, x0, &scales()))
        .fold(0.0, f64::max);
    assert!(drift < 1e-7, "{drift}");
}

#[test]
fn startup_settles_within_a_minute() {
    for s in scenarios::startup(&base(), &[10.0, 60.0]) {
        let res = run(&s);
        let tr = res.trajectory().unwrap();
        let x0 = tr.reference.as_ref().unwrap();
        let end = tr.trajectory.last();
        assert!(scaled_distance(end, x0, &scales()) < 0.01, "{}", s.name);
        let (t, y) = tr
            .trajectory
            .times
            .iter()
            .zip(&tr.trajectory.states)
            .find(|(&t, _)| t >= 60.0)
            .unwrap();
        assert!(scaled_distance(y, x0, &scales()) < 0.01, "{} at {t}", s.name);
    }
}

#[test]
fn event_past_the_end_changes_nothing() {
    let spec = scenarios::solids_interruption(&base(), &[0.0]).remove(0);
    let with_late = |time: Option<f64>| {
        let mut s = spec.clone();
        if let ScenarioKind::Trajectory { events, duration, .. } = &mut s.kind {
            *duration = 300.0;
            *events = time
                .map(|time| vec![ScheduledChange { time, param: Fs, value: 0.0 }])
                .unwrap_or_default();
        }
        run(&s).trajectory().unwrap().clone()
    };
    let (none, late) = (with_late(None), with_late(Some(1e6)));
    assert_eq!(none.trajectory, late.trajectory);
    assert_eq!(late.final_params.get(Fs), 40.0);

    let cut = with_late(Some(100.0));
    assert_eq!(cut.final_params.get(Fs), 0.0);
    assert!(cut.trajectory.event_log.iter().any(|(t, msg)| *t == 100.0 && msg.contains("Fs")));
}

#[test]
fn shutdown_starts_at_the_operating_point_without_singular_points() {
    let s = &scenarios::shutdown_ramp(&base())[0];
    let b = branch(s);
    let nominal = base().flow.inlet_co2_pressure;
    assert_eq!(b.records[0].param_value, nominal);
    let operating = steady_state(Mode::Endex, &s.params()).unwrap();
    assert!(scaled_distance(&b.records[0].state, &operating, &scales()) < 1e-8);
    assert!(b.singular_points.is_empty());
    let p2: Vec<f64> = b.records.iter().map(|r| r.derived.as_ref().unwrap().p2.unwrap()).collect();
    assert!(p2.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn pushing_past_ignition_jumps_to_the_upper_branch() {
    let s = &scenarios::hysteresis_scan(&base())[0];
    let b = branch(s);
    let fold_a = b.folds().next().unwrap();
    let mu = fold_a.param_value + 5.0;
    let upper = coexisting_states(&ModelFamily::new(Mode::Endex, s.params(), T1In), &b, mu, &NewtonOptions::default())
        .unwrap();
    assert_eq!(upper.states.len(), 1);
    let target = &upper.states[0].state;
    assert!(target[1] > fold_a.state[1] + 100.0);

    let jump = ScenarioSpec {
        name: "ignition".into(),
        mode: Mode::Endex,
        base: s.params().with(T1In, mu),
        overrides: Vec::new(),
        kind: ScenarioKind::Trajectory {
            duration: 20_000.0,
            initial: InitialState::Explicit { state: fold_a.state.clone() },
            events: Vec::new(),
            output_interval: 100.0,
        },
    };
    let end = run(&jump).trajectory().unwrap().trajectory.last().to_vec();
    assert!(scaled_distance(&end, target, &scales()) < 1e-6, "{end:?} vs {target:?}");
}

#[test]
fn adiabatic_rise_is_reported_from_the_gas_heat_capacity() {
    let p = base();
    assert!((p.c1_in() - 24.28).abs() < 0.05);
    let rise = adiabatic_rise(&p);
    assert!((rise - 712.2).abs() < 0.5, "{rise}");
}

#[test]
fn specs_round_trip_through_json_and_reject_unknown_fields() {
    for name in CAMPAIGNS {
        for s in campaign(name, &base()).unwrap() {
            let text = serde_json::to_string(&s).unwrap();
            let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
    }
    let s = &scenarios::hysteresis_scan(&base())[0];
    let mut v = serde_json::to_value(s).unwrap();
    v["kind"]["sweep"]["points"] = serde_json::json!(10);
    assert!(serde_json::from_value::<ScenarioSpec>(v).is_err());
}

#[test]
fn invalid_overrides_are_parameter_errors() {
    let mut s = scenarios::hysteresis_scan(&base()).remove(0);
    s.overrides.push((Tau1, -1.0));
    let err = run_spec(&s, &RunSettings::default()).unwrap_err();
    assert!(matches!(err, ScenarioError::Params { .. }));
    assert!(!err.is_solver_failure());
}
