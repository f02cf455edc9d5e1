#![allow(dead_code)]

use endex::numerics::{Complex, DMatrix};

/// Characteristic polynomial coefficients of `a`, highest degree first
/// (monic), by the Faddeev–LeVerrier recursion.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + &id * c;
        let am = a * &m;
        c = -am.trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(coeffs[0], 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in &coeffs[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of a monic real polynomial by Aberth–Ehrlich iteration
/// followed by a few Newton polishing steps per root.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let n = coeffs.len() - 1;
    let bound = 1.0 + coeffs[1..].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex::from_polar(0.5 * bound, th)
        })
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (Complex::new(1.0, 0.0) - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(coeffs, *zi);
            if dp.norm() > 0.0 {
                *zi -= p / dp;
            }
        }
    }
    z
}

/// Largest distance between two multisets of complex numbers after greedy
/// nearest matching, relative to `max(1, |reference|)`.
pub fn max_matched_error(got: &[Complex<f64>], reference: &[Complex<f64>]) -> f64 {
    let mut pool: Vec<Complex<f64>> = reference.to_vec();
    let mut worst = 0.0f64;
    for g in got {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, r)| (k, (g - r).norm() / r.norm().max(1.0)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}
