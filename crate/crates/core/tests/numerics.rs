mod common;

use endex::continuation::feed_state;
use endex::model::{endex_rhs, EndexState, Mode, ModelParams, ModelSystem, ParamRef};
use endex::numerics::{
    classify, eigenvalues, fd_jacobian, integrate, newton_solve, scaled_distance, DMatrix,
    IntegrateOptions, NewtonOptions, NumericsError, Output, StabilityKind, DEFAULT_FD_STEP,
};
use endex::scenarios::steady_state;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ParamRef::*;

fn model_rhs(mode: Mode, p: ModelParams) -> impl FnMut(&[f64], &mut [f64]) -> Result<(), NumericsError> {
    move |x, out| mode.rhs_into(x, &p, out).map_err(NumericsError::from)
}

fn long_run(mode: Mode, p: &ModelParams, y0: &[f64], t_end: f64) -> Vec<f64> {
    let mut sys = ModelSystem::new(mode, *p);
    let opts = IntegrateOptions { output: Output::Endpoints, ..Default::default() };
    integrate(&mut sys, y0, (0.0, t_end), &[], &opts).unwrap().last().to_vec()
}

/// Largest componentwise error in units of ten times the integrator tolerance.
fn in_tol_units(a: &[f64], b: &[f64]) -> f64 {
    let tol = IntegrateOptions::default().tol;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (10.0 * (tol.rel * y.abs() + tol.abs)))
        .fold(0.0, f64::max)
}

#[test]
fn jacobian_matches_directional_differences_of_the_endex_rhs() {
    let p = ModelParams::calibrated();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let x = [
            rng.gen_range(1.0..20.0),
            rng.gen_range(900.0..1250.0),
            rng.gen_range(1.0..20.0),
            rng.gen_range(900.0..1250.0),
        ];
        let j = fd_jacobian(model_rhs(Mode::Endex, p), &x, DEFAULT_FD_STEP, &Mode::Endex.fd_scales()).unwrap();
        let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d: Vec<f64> = raw.iter().map(|v| v / len).collect();

        let h = 1e-4;
        let at = |s: f64| {
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            endex_rhs(&EndexState::from_slice(&y), &p).unwrap()
        };
        let (fp, fm) = (at(h), at(-h));
        let jd = &j * nalgebra::DVector::from_column_slice(&d);
        let norm = jd.amax();
        for i in 0..4 {
            let dd = (fp[i] - fm[i]) / (2.0 * h);
            assert!((jd[i] - dd).abs() <= 1e-5 * norm, "row {i}: {} vs {dd}", jd[i]);
        }
    }
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots_in_every_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        for _ in 0..50 {
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let got = eigenvalues(&m).unwrap().values;
            let want = common::poly_roots(&common::char_poly(&m));
            let err = common::max_matched_error(&got, &want);
            assert!(err <= 1e-7, "dim {n}: {err:e} for {m}");
        }
    }
}

#[test]
fn eigenvalue_examples() {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0, -4.0]));
    let e = eigenvalues(&d).unwrap();
    let re: Vec<f64> = e.values.iter().map(|l| l.re).collect();
    assert_eq!(re, vec![-1.0, -2.0, -3.0, -4.0]);
    assert_eq!(classify(&e, 0.0).kind, StabilityKind::Stable);

    let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let e = eigenvalues(&rot).unwrap();
    assert!((e.values[0].im - 1.0).abs() < 1e-14 && e.values[0].re.abs() < 1e-14);
    assert!((e.values[1].im + 1.0).abs() < 1e-14);
}

#[test]
fn standalone_newton_fixed_point_matches_long_integration() {
    for p in [ModelParams::table1(), ModelParams::calibrated()] {
        let p = p.with(Tau1, 7.2).with(Fs, 10.0);
        let opts = NewtonOptions { fd_scales: Some(Mode::Standalone.fd_scales()), ..Default::default() };
        let guess = feed_state(Mode::Standalone, &p);
        let fixed = newton_solve(model_rhs(Mode::Standalone, p), &guess, &opts).unwrap();
        let settled = long_run(Mode::Standalone, &p, &guess, 1e4);
        let err = in_tol_units(&fixed.x, &settled);
        assert!(err <= 1.0, "kappa {}: {err} x 10 tol", p.kinetics.rate_scale);
    }
}

#[test]
fn startup_settles_onto_the_newton_steady_state() {
    let base = ModelParams::calibrated().with(Tau1, 15.0).with(Fs, 20.0).with(Lex, 0.0);
    for tau2 in [10.0, 60.0] {
        let p = base.with(Tau2, tau2);
        let ss = steady_state(Mode::Endex, &p).unwrap();
        let y0 = [0.0, ss[1], 0.0, ss[3]];
        let settled = long_run(Mode::Endex, &p, &y0, 1e4);
        let err = in_tol_units(&ss, &settled);
        assert!(err <= 1.0, "tau2 {tau2}: {err} x 10 tol");
    }
}

#[test]
fn perturbations_of_stable_states_decay() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let base = ModelParams::calibrated();
    for _ in 0..6 {
        let p = base
            .with(T1In, rng.gen_range(973.0..1273.0))
            .with(Tau1, rng.gen_range(1.0..20.0))
            .with(Fs, rng.gen_range(10.0..40.0))
            .with(Tau2, rng.gen_range(15.0..60.0))
            .with(Lex, rng.gen_range(0.0..1e5));
        let ss = steady_state(Mode::Endex, &p).unwrap();
        let j = fd_jacobian(model_rhs(Mode::Endex, p), &ss, DEFAULT_FD_STEP, &Mode::Endex.fd_scales()).unwrap();
        assert_eq!(classify(&eigenvalues(&j).unwrap(), 0.0).kind, StabilityKind::Stable);

        let kick = [0.01, 0.1, 0.01, 0.1];
        let y0: Vec<f64> = ss.iter().zip(&kick).map(|(a, k)| a + k).collect();
        let ones = [1.0; 4];
        let initial = scaled_distance(&y0, &ss, &ones);
        let end = long_run(Mode::Endex, &p, &y0, 2000.0);
        let fin = scaled_distance(&end, &ss, &ones);
        assert!(fin < initial, "{fin} >= {initial} at {p:?}");
    }
}
