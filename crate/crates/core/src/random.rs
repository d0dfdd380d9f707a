//! Seeded samplers for random matrices and states (Ginibre and Haar ensembles).

use num_complex::Complex64;
use rand::Rng;

use crate::qmatrix::ComplexMatrix;

/// Box–Muller standard normal sample.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > f64::MIN_POSITIVE {
            let v: f64 = rng.gen();
            return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
        }
    }
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// GUE-like Hermitian matrix `(G + G†)/2`.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    complex_matrix(n, n, rng).symmetrized()
}

/// Haar-random normalized state vector.
pub fn pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Full-rank density matrix from the Hilbert–Schmidt (Ginibre) ensemble.
pub fn density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = complex_matrix(n, n, rng);
    let rho = g.matmul(&g.adjoint());
    let tr = rho.trace().re;
    rho.scale(1.0 / tr).symmetrized()
}

/// Haar unitary via Gram–Schmidt on a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = complex_matrix(n, n, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v = g.column(c);
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}
