#![allow(dead_code)]

//! Test-only helpers: an independent Jacobi eigenvalue oracle and instance
//! builders.

use nalgebra::DMatrix;
use nehari_core::io::generate_instance;
use nehari_core::{CoefficientSequence, ComplexMatrix, HermitianMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi on the real
/// embedding `[[Re, -Im], [Im, Re]]` (every eigenvalue appears twice).
pub fn jacobi_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let m = h.as_matrix();
    let n = m.nrows();
    let mut a = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    let size = 2 * n;
    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|i| (0..size).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..size {
            for q in p + 1..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..size).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    // drop the duplicate copy of each eigenvalue
    ev.into_iter().step_by(2).collect()
}

pub fn jacobi_min(h: &HermitianMatrix) -> f64 {
    jacobi_eigenvalues(h)[0]
}

pub fn jacobi_max(h: &HermitianMatrix) -> f64 {
    *jacobi_eigenvalues(h).last().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let a = random_complex(rng, n, n);
    HermitianMatrix::new((&a + a.adjoint()).scale(0.5)).unwrap()
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let a = random_complex(rng, n, n);
    HermitianMatrix::new(&a * a.adjoint()).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    random_complex(rng, n, n).qr().q()
}

/// Generated instance; `m`, `k`, dominance drawn from the seed.
pub fn generated(m: usize, k: usize, seed: u64) -> CoefficientSequence {
    let dominance = 1.0 + (seed % 3) as f64 * 0.5;
    generate_instance(m, k, seed, dominance)
        .unwrap()
        .coefficients
}

/// `K = 2` instance with `γ₁ = s·I` and `γ₂ = P·M` of the given rank, so
/// `A₁₂ = s·γ₂` is rank-deficient while `A₁₁` and `A₂₂` still couple all
/// coordinates.
pub fn singular_instance(m: usize, rank: usize, seed: u64) -> CoefficientSequence {
    let mut r = rng(seed);
    let left = random_complex(&mut r, m, rank);
    let right = random_complex(&mut r, rank, m);
    let g2 = (left * right).scale(0.5);
    let lead = 2.0 * (1.0 + g2.norm());
    let g1 = DMatrix::<C64>::identity(m, m).scale(lead);
    CoefficientSequence::new(vec![
        ComplexMatrix::new(g1).unwrap(),
        ComplexMatrix::new(g2).unwrap(),
    ])
    .unwrap()
}

/// Unitary similarity `γ_k ↦ W γ_k W*` applied to every block.
pub fn rotate(coeffs: &CoefficientSequence, w: &DMatrix<C64>) -> CoefficientSequence {
    CoefficientSequence::new(
        coeffs
            .coefficients()
            .iter()
            .map(|c| ComplexMatrix::new(w * c.as_matrix() * w.adjoint()).unwrap())
            .collect(),
    )
    .unwrap()
}

pub fn frob(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).norm()
}
