//! Entropy functionals: von Neumann entropy (bits), Schmidt spectra,
//! strong-subadditivity gaps, modular Hamiltonians (nats) and negativity.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmatrix::{self, ComplexMatrix, Dims, SUPPORT_EPS};
use crate::states::DensityMatrix;

/// An entropy in both bits and nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub bits: f64,
    pub nats: f64,
}

impl EntropyValue {
    pub fn from_bits(bits: f64) -> Self {
        Self {
            bits,
            nats: bits * LN_2,
        }
    }

    pub fn from_nats(nats: f64) -> Self {
        Self {
            bits: nats / LN_2,
            nats,
        }
    }
}

/// `-Σ λ log₂ λ` over eigenvalues `>= SUPPORT_EPS`; smaller ones count as zero.
pub fn entropy_of_eigenvalues(eigenvalues: &[f64]) -> EntropyValue {
    let bits: f64 = eigenvalues
        .iter()
        .filter(|&&l| l >= SUPPORT_EPS)
        .map(|&l| -l * l.log2())
        .sum();
    EntropyValue::from_bits(bits.max(0.0))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<EntropyValue> {
    Ok(entropy_of_eigenvalues(&rho.spectrum()?.eigenvalues))
}

/// Entropy of the reduced state on `region` (any order, no duplicates). `S(∅) = 0`.
pub fn region_entropy(rho: &DensityMatrix, region: &[usize]) -> Result<EntropyValue> {
    let mut sorted = region.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != region.len() {
        return Err(Error::BadRegion(format!("{region:?} repeats a subsystem")));
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= rho.dims().len()) {
        return Err(Error::BadRegion(format!(
            "subsystem {bad} out of range for {} subsystems",
            rho.dims().len()
        )));
    }
    match sorted.len() {
        0 => Ok(EntropyValue::from_bits(0.0)),
        n if n == rho.dims().len() => von_neumann_entropy(rho),
        _ => von_neumann_entropy(&rho.reduce(&sorted)?),
    }
}

/// Schmidt coefficients of a pure state across `cut | complement`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    /// Descending, non-negative.
    pub coefficients: Vec<f64>,
    pub cut: Vec<usize>,
}

impl SchmidtSpectrum {
    /// Entropy of the squared coefficients.
    pub fn entropy(&self) -> EntropyValue {
        let probs: Vec<f64> = self.coefficients.iter().map(|c| c * c).collect();
        entropy_of_eigenvalues(&probs)
    }
}

pub fn schmidt_coefficients(psi: &[Complex64], dims: &Dims, cut: &[usize]) -> Result<SchmidtSpectrum> {
    if psi.len() != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for dims {:?}",
            psi.len(),
            dims.as_slice()
        )));
    }
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm2));
    }
    let mut sorted = cut.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() != cut.len() || sorted.len() >= dims.len() {
        return Err(Error::BadCut(format!(
            "{cut:?} is not a proper non-empty subset of {} subsystems",
            dims.len()
        )));
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= dims.len()) {
        return Err(Error::BadCut(format!("subsystem {bad} out of range")));
    }
    let order: Vec<usize> = sorted
        .iter()
        .copied()
        .chain((0..dims.len()).filter(|i| !sorted.contains(i)))
        .collect();
    let permuted = qmatrix::permute_vector(psi, dims, &order)?;
    let da = dims.sub_total(&sorted);
    let db = dims.total() / da;
    let m = ComplexMatrix::from_vec(da, db, permuted)?;
    let gram = m.matmul(&m.adjoint()).symmetrized();
    let coefficients = qmatrix::hermitian_eigenvalues(&gram)?
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    Ok(SchmidtSpectrum {
        coefficients,
        cut: sorted,
    })
}

/// `S(A₁) + S(A₂) - S(A₁∩A₂) - S(A₁∪A₂)` in bits.
pub fn ssa_gap(rho: &DensityMatrix, region1: &[usize], region2: &[usize]) -> Result<f64> {
    let s1 = region_entropy(rho, region1)?.bits;
    let s2 = region_entropy(rho, region2)?.bits;
    let inter: Vec<usize> = region1.iter().copied().filter(|i| region2.contains(i)).collect();
    let mut union: Vec<usize> = region1.iter().chain(region2).copied().collect();
    union.sort_unstable();
    union.dedup();
    let si = region_entropy(rho, &inter)?.bits;
    let su = region_entropy(rho, &union)?.bits;
    Ok(s1 + s2 - si - su)
}

/// `H_A = -ln ρ_A` restricted to the support of `ρ_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularHamiltonian {
    pub matrix: ComplexMatrix,
    pub support_dim: usize,
    /// Orthogonal projector onto the support.
    pub support: ComplexMatrix,
}

impl ModularHamiltonian {
    /// `e^{-H_A}` on the support, zero on the kernel.
    pub fn exponentiate(&self) -> Result<ComplexMatrix> {
        let full = qmatrix::matrix_function(&self.matrix, |l| (-l).exp())?;
        let kernel = &ComplexMatrix::identity(self.matrix.rows()) - &self.support;
        Ok(&full - &kernel)
    }
}

pub fn modular_hamiltonian(rho: &DensityMatrix) -> Result<ModularHamiltonian> {
    let spec = rho.spectrum()?;
    let on_support = |l: f64| l >= SUPPORT_EPS;
    Ok(ModularHamiltonian {
        matrix: spec.map_eigenvalues(|l| if on_support(l) { -l.ln() } else { 0.0 }),
        support_dim: spec.eigenvalues.iter().filter(|&&l| on_support(l)).count(),
        support: spec.map_eigenvalues(|l| if on_support(l) { 1.0 } else { 0.0 }),
    })
}

fn check_cut(rho: &DensityMatrix, cut: usize) -> Result<()> {
    if cut >= rho.dims().len() {
        return Err(Error::BadCut(format!(
            "subsystem {cut} out of range for {} subsystems",
            rho.dims().len()
        )));
    }
    Ok(())
}

/// Sum of the magnitudes of the negative eigenvalues of `ρ^{T_cut}`.
pub fn negativity(rho: &DensityMatrix, cut: usize) -> Result<f64> {
    check_cut(rho, cut)?;
    let eig = qmatrix::hermitian_eigenvalues(&rho.partial_transpose(cut)?)?;
    Ok(eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// Smallest eigenvalue of `ρ^{T_cut}`; negative values certify entanglement.
pub fn ppt_gap(rho: &DensityMatrix, cut: usize) -> Result<f64> {
    check_cut(rho, cut)?;
    let eig = qmatrix::hermitian_eigenvalues(&rho.partial_transpose(cut)?)?;
    Ok(eig.last().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&[c(h), c(0.0), c(0.0), c(h)], Dims::new(vec![2, 2]).unwrap()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::from_pure(&[c(0.6), c(0.8)], Dims::new(vec![2]).unwrap()).unwrap();
        assert!(von_neumann_entropy(&pure).unwrap().bits.abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(Dims::new(vec![2]).unwrap());
        assert!((von_neumann_entropy(&mixed).unwrap().bits - 1.0).abs() < 1e-12);
        let d = DensityMatrix::unipartite(ComplexMatrix::from_real_diagonal(&[0.5, 0.25, 0.25])).unwrap();
        let s = von_neumann_entropy(&d).unwrap();
        assert!((s.bits - 1.5).abs() < 1e-12);
        assert!((s.nats - 1.5 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn schmidt_examples() {
        let dims = Dims::new(vec![2, 2]).unwrap();
        let prod = schmidt_coefficients(&[c(1.0), c(0.0), c(0.0), c(0.0)], &dims, &[0]).unwrap();
        assert!((prod.coefficients[0] - 1.0).abs() < 1e-12 && prod.coefficients[1].abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = schmidt_coefficients(&[c(h), c(0.0), c(0.0), c(h)], &dims, &[1]).unwrap();
        assert!(b.coefficients.iter().all(|x| (x - h).abs() < 1e-12));
        assert!((b.entropy().bits - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_errors() {
        let dims = Dims::new(vec![2, 2]).unwrap();
        let psi = [c(1.0), c(1.0), c(0.0), c(0.0)];
        assert!(matches!(schmidt_coefficients(&psi, &dims, &[0]), Err(Error::NotNormalized(_))));
        let psi = [c(1.0), c(0.0), c(0.0), c(0.0)];
        assert!(matches!(schmidt_coefficients(&psi, &dims, &[]), Err(Error::BadCut(_))));
        assert!(matches!(schmidt_coefficients(&psi, &dims, &[0, 1]), Err(Error::BadCut(_))));
        assert!(matches!(schmidt_coefficients(&psi, &dims, &[5]), Err(Error::BadCut(_))));
    }

    #[test]
    fn schmidt_entropy_matches_reduced_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dims = Dims::new(vec![2, 3, 2]).unwrap();
        let psi = random::pure_state(12, &mut rng);
        let sch = schmidt_coefficients(&psi, &dims, &[0, 2]).unwrap();
        let rho = DensityMatrix::from_pure(&psi, dims).unwrap();
        let sa = region_entropy(&rho, &[0, 2]).unwrap().bits;
        let sb = region_entropy(&rho, &[1]).unwrap().bits;
        assert!((sa - sb).abs() < 1e-9);
        assert!((sch.entropy().bits - sa).abs() < 1e-9);
        let total: f64 = sch.coefficients.iter().map(|x| x * x).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ssa_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DensityMatrix::unipartite(random::density_matrix(2, &mut rng)).unwrap();
        let b = DensityMatrix::unipartite(random::density_matrix(3, &mut rng)).unwrap();
        let prod = a.tensor(&b);
        assert!(ssa_gap(&prod, &[0], &[1]).unwrap().abs() < 1e-10);
        let rho = DensityMatrix::new(random::density_matrix(8, &mut rng), Dims::new(vec![2, 2, 2]).unwrap()).unwrap();
        assert_eq!(ssa_gap(&rho, &[0, 1], &[0, 1]).unwrap(), 0.0);
        assert!(ssa_gap(&rho, &[0, 1], &[1, 2]).unwrap() >= -1e-9);
        assert!(matches!(ssa_gap(&rho, &[0, 3], &[1]), Err(Error::BadRegion(_))));
        assert!(matches!(ssa_gap(&rho, &[0, 0], &[1]), Err(Error::BadRegion(_))));
    }

    #[test]
    fn modular_hamiltonian_examples() {
        let mixed = DensityMatrix::maximally_mixed(Dims::new(vec![2]).unwrap());
        let h = modular_hamiltonian(&mixed).unwrap();
        assert!(h.matrix.max_abs_diff(&ComplexMatrix::identity(2).scale(LN_2)) < 1e-12);

        let (a, b) = ((-1.0f64).exp(), (-2.0f64).exp());
        let z = a + b;
        let rho = DensityMatrix::unipartite(ComplexMatrix::from_real_diagonal(&[a / z, b / z])).unwrap();
        let h = modular_hamiltonian(&rho).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[1.0 + z.ln(), 2.0 + z.ln()]);
        assert!(h.matrix.max_abs_diff(&expected) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = DensityMatrix::unipartite(random::density_matrix(6, &mut rng)).unwrap();
        let h = modular_hamiltonian(&rho).unwrap();
        assert_eq!(h.support_dim, 6);
        assert!(h.exponentiate().unwrap().max_abs_diff(rho.matrix()) < 1e-9);
    }

    #[test]
    fn modular_hamiltonian_of_rank_deficient_state() {
        let rho = DensityMatrix::unipartite(ComplexMatrix::from_real_diagonal(&[0.75, 0.25, 0.0])).unwrap();
        let h = modular_hamiltonian(&rho).unwrap();
        assert_eq!(h.support_dim, 2);
        assert!(h.exponentiate().unwrap().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn negativity_examples() {
        assert!((negativity(&bell(), 0).unwrap() - 0.5).abs() < 1e-12);
        assert!((ppt_gap(&bell(), 1).unwrap() + 0.5).abs() < 1e-12);
        let prod = DensityMatrix::maximally_mixed(Dims::new(vec![2, 3]).unwrap());
        assert_eq!(negativity(&prod, 1).unwrap(), 0.0);
        assert!(matches!(negativity(&bell(), 2), Err(Error::BadCut(_))));
    }

    fn werner(p: f64) -> DensityMatrix {
        let m = &bell().matrix().scale(p) + &ComplexMatrix::identity(4).scale((1.0 - p) / 4.0);
        DensityMatrix::new(m, Dims::new(vec![2, 2]).unwrap()).unwrap()
    }

    #[test]
    fn werner_threshold() {
        assert!(negativity(&werner(1.0 / 3.0), 0).unwrap() < 1e-9);
        // Partial-transpose spectrum {(1+p)/4 ×3, (1-3p)/4}.
        let n = negativity(&werner(0.5), 0).unwrap();
        assert!((n - 0.125).abs() < 1e-12);
    }
}
