//! Constructive separability certificates across a single-party cut.
//!
//! A fully-corrective Frank-Wolfe search over product pure states: each
//! iteration adds the product state minimising `⟨x⊗y|∇|x⊗y⟩` (found by
//! alternating minimum-eigenvector updates) and then re-solves all weights by
//! non-negative least squares.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmatrix::{self, ComplexMatrix, Dims};
use crate::random;
use crate::states::DensityMatrix;

/// Weight of the unit-trace row in the least-squares system.
const TRACE_ROW_WEIGHT: f64 = 100.0;
/// Trace-norm distance below which a state is treated as an exact product.
const PRODUCT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FwOptions {
    /// Cap on iterations, and hence on product terms.
    pub max_atoms: usize,
    /// Required trace-norm reconstruction error.
    pub tolerance: f64,
    /// Random restarts of the alternating minimisation per iteration.
    pub restarts: usize,
    /// Alternating sweeps per restart.
    pub alternations: usize,
    pub seed: u64,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self {
            max_atoms: 500,
            tolerance: 1e-6,
            restarts: 8,
            alternations: 60,
            seed: 0x5eed,
        }
    }
}

/// One term `weight · local ⊗ rest` of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub weight: f64,
    /// State of the singled-out party.
    pub local: ComplexMatrix,
    /// State of the remaining parties, in their original relative order.
    pub rest: ComplexMatrix,
}

/// `ρ ≈ Σ_k w_k σ_k ⊗ τ_k` across `party | rest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableDecomposition {
    pub party: usize,
    pub dims: Dims,
    pub terms: Vec<ProductTerm>,
    pub trace_norm_error: f64,
    pub iterations: usize,
}

fn cut_order(n: usize, party: usize) -> Vec<usize> {
    std::iter::once(party).chain((0..n).filter(|&i| i != party)).collect()
}

impl SeparableDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// `Σ w_k σ_k ⊗ τ_k` in the original subsystem order.
    pub fn rebuild(&self) -> Result<ComplexMatrix> {
        let order = cut_order(self.dims.len(), self.party);
        let permuted_dims = self.dims.select(&order)?;
        let n = self.dims.total();
        let mut sum = ComplexMatrix::zeros(n, n);
        for t in &self.terms {
            let term = qmatrix::tensor_product(&t.local, &t.rest).scale(t.weight);
            if term.rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "product term of size {} for a state of size {n}",
                    term.rows()
                )));
            }
            sum = &sum + &term;
        }
        let mut inverse = vec![0; order.len()];
        for (k, &src) in order.iter().enumerate() {
            inverse[src] = k;
        }
        Ok(qmatrix::permute_subsystems(&sum, &permuted_dims, &inverse)?.0)
    }

    /// Trace-norm distance between the rebuilt state and `rho`.
    pub fn error_against(&self, rho: &DensityMatrix) -> Result<f64> {
        qmatrix::trace_norm(&(&self.rebuild()? - rho.matrix()))
    }
}

/// Real vectorisation preserving the Frobenius inner product on Hermitian matrices.
fn hermitian_vec(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * n);
    out.extend((0..n).map(|i| m[(i, i)].re));
    let s = std::f64::consts::SQRT_2;
    for r in 0..n {
        for c in r + 1..n {
            out.push(s * m[(r, c)].re);
        }
    }
    for r in 0..n {
        for c in r + 1..n {
            out.push(s * m[(r, c)].im);
        }
    }
    out
}

/// Lawson–Hanson active-set solver for `min ‖Ax − b‖, x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return x;
    }
    let tol = 10.0 * f64::EPSILON * a.abs().max() * m.max(n) as f64;
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut s = DVector::zeros(n);
        if cols.is_empty() {
            return s;
        }
        let sub = a.select_columns(&cols);
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(cols.len()));
        for (k, &j) in cols.iter().enumerate() {
            s[j] = sol[k];
        }
        s
    };

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        let mut s = solve_passive(&passive);
        let mut inner = 0;
        while (0..n).any(|k| passive[k] && s[k] <= 0.0) && inner < 3 * n {
            inner += 1;
            let alpha = (0..n)
                .filter(|&k| passive[k] && s[k] <= 0.0)
                .map(|k| x[k] / (x[k] - s[k]))
                .fold(f64::INFINITY, f64::min);
            x += (&s - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            s = solve_passive(&passive);
        }
        x = s;
    }
    x
}

struct Atom {
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    matrix: ComplexMatrix,
    column: Vec<f64>,
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
}

/// `⟨y| G |y⟩` contracted over the rest factor: a `dx × dx` operator.
fn reduce_rest(g: &ComplexMatrix, y: &[Complex64], dx: usize, dy: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dx, dx, |a, c| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, yb) in y.iter().enumerate() {
            for (d, yd) in y.iter().enumerate() {
                acc += yb.conj() * g[(a * dy + b, c * dy + d)] * yd;
            }
        }
        acc
    })
    .symmetrized()
}

/// `⟨x| G |x⟩` contracted over the local factor: a `dy × dy` operator.
fn reduce_local(g: &ComplexMatrix, x: &[Complex64], dy: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dy, dy, |b, d| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, xa) in x.iter().enumerate() {
            for (c, xc) in x.iter().enumerate() {
                acc += xa.conj() * g[(a * dy + b, c * dy + d)] * xc;
            }
        }
        acc
    })
    .symmetrized()
}

fn min_eigvec(m: &ComplexMatrix) -> Result<(f64, Vec<Complex64>)> {
    let spec = qmatrix::hermitian_eigendecompose(m)?;
    let k = spec.eigenvalues.len() - 1;
    Ok((spec.eigenvalues[k], spec.eigenvector(k)))
}

/// Product pure state approximately minimising `⟨x⊗y|G|x⊗y⟩`.
fn linear_oracle(
    g: &ComplexMatrix,
    dx: usize,
    dy: usize,
    opts: &FwOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<Complex64>, Vec<Complex64>)> {
    let mut best: Option<(f64, Vec<Complex64>, Vec<Complex64>)> = None;
    for _ in 0..opts.restarts.max(1) {
        let mut y: Vec<Complex64> = (0..dy).map(|_| random::complex_normal(rng)).collect();
        normalize(&mut y);
        let mut x = vec![Complex64::new(0.0, 0.0); dx];
        let mut value = f64::INFINITY;
        for _ in 0..opts.alternations.max(1) {
            x = min_eigvec(&reduce_rest(g, &y, dx, dy))?.1;
            let (v, new_y) = min_eigvec(&reduce_local(g, &x, dy))?;
            y = new_y;
            let improved = value - v;
            value = v;
            if improved.abs() < 1e-15 {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, x, y));
        }
    }
    Ok(best.expect("at least one restart"))
}

fn combine(atoms: &[Atom], weights: &[f64], n: usize) -> ComplexMatrix {
    let mut sigma = ComplexMatrix::zeros(n, n);
    for (a, &w) in atoms.iter().zip(weights) {
        sigma = &sigma + &a.matrix.scale(w);
    }
    sigma
}

fn residual(atoms: &[Atom], weights: &[f64], target: &[f64]) -> f64 {
    let mut r = target.to_vec();
    for (a, &w) in atoms.iter().zip(weights) {
        for (ri, ci) in r.iter_mut().zip(&a.column) {
            *ri -= w * ci;
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Finds product terms reproducing `rho` across `party | rest` to
/// `opts.tolerance` in trace norm.
pub fn decompose_cut(rho: &DensityMatrix, party: usize, opts: &FwOptions) -> Result<SeparableDecomposition> {
    let dims = rho.dims().clone();
    if party >= dims.len() || dims.len() < 2 {
        return Err(Error::BadCut(format!(
            "party {party} for {} subsystems",
            dims.len()
        )));
    }
    let order = cut_order(dims.len(), party);
    let (m, _) = qmatrix::permute_subsystems(rho.matrix(), &dims, &order)?;
    let dx = dims.as_slice()[party];
    let n = dims.total();
    let dy = n / dx;

    // Exact product states need a single (mixed) term.
    let cut_dims = Dims::new(vec![dx, dy])?;
    let local = qmatrix::partial_trace(&m, &cut_dims, &[0])?;
    let rest = qmatrix::partial_trace(&m, &cut_dims, &[1])?;
    let product_error = qmatrix::trace_norm(&(&qmatrix::tensor_product(&local, &rest) - &m))?;
    if product_error <= PRODUCT_TOL {
        return Ok(SeparableDecomposition {
            party,
            dims,
            terms: vec![ProductTerm {
                weight: 1.0,
                local,
                rest,
            }],
            trace_norm_error: product_error,
            iterations: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(party as u64));
    let mut target = hermitian_vec(&m);
    target.push(TRACE_ROW_WEIGHT);
    let rows = target.len();
    let b = DVector::from_vec(target.clone());

    let mut atoms: Vec<Atom> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut sigma = ComplexMatrix::zeros(n, n);
    let mut error = f64::INFINITY;

    for k in 0..opts.max_atoms {
        let grad = (&sigma - &m).scale(2.0);
        let (_, x, y) = linear_oracle(&grad, dx, dy, opts, &mut rng)?;
        let psi = qmatrix::tensor_vec(&x, &y);
        let matrix = ComplexMatrix::outer(&psi);
        let mut column = hermitian_vec(&matrix);
        column.push(TRACE_ROW_WEIGHT);
        atoms.push(Atom { x, y, matrix, column });

        let gamma = 2.0 / (k as f64 + 2.0);
        let mut step: Vec<f64> = weights.iter().map(|w| w * (1.0 - gamma)).collect();
        step.push(gamma);

        let a = DMatrix::from_fn(rows, atoms.len(), |r, c| atoms[c].column[r]);
        let solved: Vec<f64> = nnls(&a, &b).iter().copied().collect();
        weights = if residual(&atoms, &solved, &target) <= residual(&atoms, &step, &target) {
            solved
        } else {
            step
        };

        let mut kept = 0;
        for i in 0..atoms.len() {
            if weights[i] > 0.0 {
                atoms.swap(kept, i);
                weights.swap(kept, i);
                kept += 1;
            }
        }
        atoms.truncate(kept);
        weights.truncate(kept);

        sigma = combine(&atoms, &weights, n);
        error = qmatrix::trace_norm(&(&sigma - &m))?;
        if error <= opts.tolerance {
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let terms: Vec<ProductTerm> = atoms
                .iter()
                .zip(&weights)
                .map(|(a, &w)| ProductTerm {
                    weight: w,
                    local: ComplexMatrix::outer(&a.x),
                    rest: ComplexMatrix::outer(&a.y),
                })
                .collect();
            let mut dec = SeparableDecomposition {
                party,
                dims,
                terms,
                trace_norm_error: 0.0,
                iterations: k + 1,
            };
            dec.trace_norm_error = dec.error_against(rho)?;
            if dec.trace_norm_error <= opts.tolerance {
                return Ok(dec);
            }
            error = dec.trace_norm_error;
            break;
        }
    }
    Err(Error::DecompositionFailed {
        party,
        error,
        atoms: atoms.len(),
    })
}
