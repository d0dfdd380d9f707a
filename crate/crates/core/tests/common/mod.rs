//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use causentropy::ComplexMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

/// Eigenvalues from nalgebra's Hermitian solver, descending.
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = to_nalgebra(m).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    to_nalgebra(m).singular_values().iter().sum()
}

pub fn entropy_bits(eigs: &[f64]) -> f64 {
    eigs.iter().filter(|&&l| l > 1e-14).map(|&l| -l * l.log2()).sum()
}

fn digits(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
    out
}

fn flatten(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Partial trace by explicit summation over every index tuple.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let kept: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let m: usize = kept.iter().product();
    let n: usize = dims.iter().product();
    let mut out = ComplexMatrix::zeros(m, m);
    for r in 0..n {
        let ri = digits(r, dims);
        for c in 0..n {
            let ci = digits(c, dims);
            let traced_equal = (0..dims.len()).filter(|k| !keep.contains(k)).all(|k| ri[k] == ci[k]);
            if traced_equal {
                let rk: Vec<usize> = keep.iter().map(|&k| ri[k]).collect();
                let ck: Vec<usize> = keep.iter().map(|&k| ci[k]).collect();
                out[(flatten(&rk, &kept), flatten(&ck, &kept))] += rho[(r, c)];
            }
        }
    }
    out
}

/// `tr(O ρ)` as an explicit double sum.
pub fn expectation(o: &ComplexMatrix, rho: &ComplexMatrix) -> Complex64 {
    let n = o.rows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += o[(i, j)] * rho[(j, i)];
        }
    }
    s
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// A ledger satisfying every admissibility condition.
pub fn admissible_ledger<R: rand::Rng>(rng: &mut R) -> causentropy::transfer::EntropyLedger {
    loop {
        let s_0 = rng.gen_range(0.0..1.0);
        let s_e = rng.gen_range(0.0..5.0);
        let s_b = rng.gen_range(0.0..5.0);
        let s_e_star = rng.gen_range(0.0..=s_e);
        let s_b_star = rng.gen_range(0.0..=s_b);
        if s_e_star + s_b_star > 2.0 * s_0 {
            let s_g = rng.gen_range(0.0..10.0);
            return causentropy::transfer::EntropyLedger::new(s_g, s_e, s_b, s_e_star, s_b_star, s_0);
        }
    }
}

/// A regulator scheme with a valid hierarchy and `c̃₀ = 4 c₀`.
pub fn random_scheme<R: rand::Rng>(rng: &mut R) -> causentropy::geometry::RegulatorScheme {
    let d = rng.gen_range(3..=11);
    let delta = 10f64.powf(rng.gen_range(-2.0..0.5));
    let f = rng.gen_range(1.0..200.0);
    let d_ge = delta * f * rng.gen_range(1.0..10.0);
    let c0_tilde = 10f64.powf(rng.gen_range(-2.0..2.0));
    causentropy::geometry::RegulatorScheme {
        d,
        delta,
        d_ge,
        d_geom: d_ge * f * rng.gen_range(1.0..10.0),
        c0_tilde,
        c0: c0_tilde / 4.0,
        c2: rng.gen_range(0.0..1.0),
        tau: rng.gen_range(0.1..10.0),
        planck_factor: 10f64.powf(rng.gen_range(-3.0..3.0)),
        separation_factor: f,
    }
}
