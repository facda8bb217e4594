//! Shared oracles for the integration suites. Everything here is coded
//! independently of the library's solver paths so it can serve as a
//! second-opinion check.
#![allow(dead_code)] // each test binary uses its own subset

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Two-sided complex Jacobi eigensolver for Hermitian matrices: sweeps of
/// 2×2 unitary rotations annihilating the largest off-diagonal entry.
/// Independent of the Householder-tridiagonalization route used by the
/// library.
pub fn jacobi_hermitian_eigenvalues(a: &DMatrix<Complex64>, tol: f64) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..(16 * n * n) {
        // locate the dominant off-diagonal element
        let (mut p, mut q, mut biggest) = (0usize, 1usize, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = m[(i, j)].norm();
                if v > biggest {
                    biggest = v;
                    p = i;
                    q = j;
                }
            }
        }
        if biggest < tol {
            break;
        }
        let app = m[(p, p)].re;
        let aqq = m[(q, q)].re;
        let apq = m[(p, q)];
        let phi = apq.arg();
        let abs_apq = apq.norm();
        let tau = (aqq - app) / (2.0 * abs_apq);
        // annihilation condition: |apq|(c² - s²) + (aqq - app) c s = 0,
        // i.e. t² - 2τt - 1 = 0; take the small root
        let t = if tau >= 0.0 {
            -1.0 / (tau + (1.0 + tau * tau).sqrt())
        } else {
            1.0 / (-tau + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        // rotation columns: |p'⟩ = c|p⟩ + s e^{-iφ}|q⟩, |q'⟩ = -s e^{iφ}|p⟩ + c|q⟩
        let e_pos = Complex64::from_polar(1.0, phi);
        let e_neg = e_pos.conj();
        for i in 0..n {
            let aip = m[(i, p)];
            let aiq = m[(i, q)];
            m[(i, p)] = aip * c + aiq * (e_neg * s);
            m[(i, q)] = aiq * c - aip * (e_pos * s);
        }
        for j in 0..n {
            let apj = m[(p, j)];
            let aqj = m[(q, j)];
            m[(p, j)] = apj * c + aqj * (e_pos * s);
            m[(q, j)] = aqj * c - apj * (e_neg * s);
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Composite Simpson rule, oracle-grade, in the raw radial variable.
pub fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, n_odd: usize, f: F) -> f64 {
    let n = if n_odd % 2 == 0 { n_odd + 1 } else { n_odd };
    let h = (b - a) / (n - 1) as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n - 1 {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
