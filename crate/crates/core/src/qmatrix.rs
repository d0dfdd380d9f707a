//! Dense complex matrices with the handful of operations the rest of the crate
//! needs: Hermitian eigendecomposition (cyclic Jacobi), Kronecker products,
//! partial traces and transposes over tensor factors, and spectral functions.
//!
//! Matrices are stored row-major. Subsystem indices follow the usual
//! big-endian convention: for dims `[d0, d1, d2]` the flat index of
//! `(i0, i1, i2)` is `(i0 * d1 + i1) * d2 + i2`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `max |M - M†|` before a matrix is rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as exact zeros by support-restricted functions.
pub const SUPPORT_EPS: f64 = 1e-12;
/// Sweep budget for the Jacobi solver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm threshold, relative to the matrix norm.
pub const JACOBI_OFF_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixDocument", into = "MatrixDocument")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Serialized form: separate real and imaginary row arrays.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDocument {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<MatrixDocument> for ComplexMatrix {
    type Error = Error;
    fn try_from(doc: MatrixDocument) -> Result<Self> {
        let m = ComplexMatrix::from_parts(&doc.re, &doc.im)?;
        if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(m)
    }
}

impl From<ComplexMatrix> for MatrixDocument {
    fn from(m: ComplexMatrix) -> Self {
        MatrixDocument {
            re: m.real_parts(),
            im: m.imag_parts(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from separate real and imaginary row arrays.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let rows = re.len();
        if im.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "re has {rows} rows, im has {}",
                im.len()
            )));
        }
        let cols = re.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for (r, (re_row, im_row)) in re.iter().zip(im).enumerate() {
            if re_row.len() != cols || im_row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {r} has lengths ({}, {}), expected {cols}",
                    re_row.len(),
                    im_row.len()
                )));
            }
            data.extend(re_row.iter().zip(im_row).map(|(&a, &b)| Complex64::new(a, b)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn outer(psi: &[Complex64]) -> Self {
        let n = psi.len();
        Self::from_fn(n, n, |r, c| psi[r] * psi[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn real_parts(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(|row| row.iter().map(|z| z.re).collect()).take(self.rows).collect()
    }

    pub fn imag_parts(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(|row| row.iter().map(|z| z.im).collect()).take(self.rows).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M†|`.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Fails with `NotHermitian` unless the asymmetry is within
    /// [`HERMITIAN_TOL`] relative to the largest entry.
    pub fn ensure_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let asym = self.hermiticity_error();
        let tolerance = HERMITIAN_TOL * self.max_abs();
        if asym > tolerance || !asym.is_finite() {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tolerance,
            });
        }
        Ok(())
    }

    /// `(M + M†) / 2`.
    pub fn symmetrized(&self) -> Self {
        let adj = self.adjoint();
        (self + &adj).scale(0.5)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Complex64 {
        assert_eq!((self.rows, self.cols), (rhs.cols, rhs.rows));
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * rhs[(k, i)];
            }
        }
        acc
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Ordered subsystem dimensions labelling a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Dims(Vec<usize>);

impl Dims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::DimensionMismatch("dims must not be empty".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dimension {d} < 2"
            )));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::DimensionMismatch("dimension product overflows".into()))?;
        Ok(Self(dims))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// Product of the dimensions at `indices`.
    pub fn sub_total(&self, indices: &[usize]) -> usize {
        indices.iter().map(|&i| self.0[i]).product()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.0[i]).collect())
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }

    fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.total() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, dims {:?} multiply to {}",
                m.rows(),
                m.cols(),
                self.0,
                self.total()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Dims {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Dims::new(v)
    }
}

impl From<Dims> for Vec<usize> {
    fn from(d: Dims) -> Self {
        d.0
    }
}

/// Eigen-decomposition `M = V diag(λ) V†` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|l| l)
    }

    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &fk) in mapped.iter().enumerate() {
            if fk == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = v[(r, k)] * fk;
                for c in 0..n {
                    out[(r, c)] += vr * v[(c, k)].conj();
                }
            }
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Column `k` of the eigenvector matrix.
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }
}

/// Diagonalises a Hermitian matrix with cyclic complex Jacobi rotations.
pub fn hermitian_eigendecompose(m: &ComplexMatrix) -> Result<Spectrum> {
    m.ensure_hermitian()?;
    jacobi(m)
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigendecompose(m)?.eigenvalues)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(m: &ComplexMatrix) -> Result<Spectrum> {
    let n = m.rows();
    // Work on the exactly Hermitian part so tiny asymmetries cannot stall rotations.
    let mut a = m.symmetrized();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = JACOBI_OFF_TOL * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold || off == 0.0 {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                // Skip entries that are negligible against both diagonal entries.
                if mag == 0.0 || mag <= f64::EPSILON * 1e-3 * (a[(p, p)].re.abs() + a[(q, q)].re.abs()) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase_conj = phase.conj();

                // A ← A J, columns p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * phase_conj * s;
                    a[(k, q)] = akp * s + akq * phase_conj * c;
                }
                // A ← J† A, rows p and q.
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // V ← V J.
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * phase_conj * s;
                    v[(k, q)] = vkp * s + vkq * phase_conj * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Kronecker product with `(A ⊗ B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * rb, a.cols() * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// Kronecker product of state vectors.
pub fn tensor_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

fn validate_index_set(dims: &Dims, set: &[usize], what: &str) -> Result<()> {
    if let Some(&bad) = set.iter().find(|&&i| i >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "{what} index {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DimensionMismatch(format!(
            "{what} indices {set:?} must be strictly increasing"
        )));
    }
    Ok(())
}

/// Traces out every subsystem not listed in `keep` (strictly increasing indices).
pub fn partial_trace(rho: &ComplexMatrix, dims: &Dims, keep: &[usize]) -> Result<ComplexMatrix> {
    dims.check_matrix(rho)?;
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    validate_index_set(dims, keep, "keep")?;

    let d = dims.as_slice();
    let traced: Vec<usize> = (0..d.len()).filter(|i| !keep.contains(i)).collect();
    let n_keep = dims.sub_total(keep);
    let n_trace = dims.sub_total(&traced);
    let strides = dims.strides();

    // Flat index of every (kept, traced) pair.
    let mut full = vec![0usize; n_keep * n_trace];
    for kept_idx in 0..n_keep {
        let kept_offset = compose(kept_idx, keep, d, &strides);
        for tr_idx in 0..n_trace {
            full[kept_idx * n_trace + tr_idx] = kept_offset + compose(tr_idx, &traced, d, &strides);
        }
    }

    let mut out = ComplexMatrix::zeros(n_keep, n_keep);
    for r in 0..n_keep {
        for c in 0..n_keep {
            let mut acc = ZERO;
            for t in 0..n_trace {
                acc += rho[(full[r * n_trace + t], full[c * n_trace + t])];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Offset contributed by a sub-multi-index over `subset`, whose mixed-radix
/// value (big-endian over `subset`) is `idx`.
fn compose(mut idx: usize, subset: &[usize], d: &[usize], strides: &[usize]) -> usize {
    let mut offset = 0;
    for &s in subset.iter().rev() {
        offset += (idx % d[s]) * strides[s];
        idx /= d[s];
    }
    offset
}

/// Transposes the `transposed` tensor factor. An exact involution.
pub fn partial_transpose(rho: &ComplexMatrix, dims: &Dims, transposed: usize) -> Result<ComplexMatrix> {
    dims.check_matrix(rho)?;
    if transposed >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem {transposed} out of range for {} subsystems",
            dims.len()
        )));
    }
    let n = rho.rows();
    let stride = dims.strides()[transposed];
    let ds = dims.as_slice()[transposed];
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let rs = (r / stride) % ds;
        let r_base = r - rs * stride;
        for c in 0..n {
            let cs = (c / stride) % ds;
            let c_base = c - cs * stride;
            out[(r_base + cs * stride, c_base + rs * stride)] = rho[(r, c)];
        }
    }
    Ok(out)
}

/// Reorders tensor factors: output factor `k` is input factor `order[k]`.
pub fn permute_subsystems(rho: &ComplexMatrix, dims: &Dims, order: &[usize]) -> Result<(ComplexMatrix, Dims)> {
    dims.check_matrix(rho)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::DimensionMismatch(format!(
            "{order:?} is not a permutation of {} subsystems",
            dims.len()
        )));
    }
    let new_dims = dims.select(order)?;
    let map = permutation_map(dims, order);
    let n = rho.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(map[r], map[c])] = rho[(r, c)];
        }
    }
    Ok((out, new_dims))
}

/// Same reordering applied to a state vector.
pub fn permute_vector(psi: &[Complex64], dims: &Dims, order: &[usize]) -> Result<Vec<Complex64>> {
    if psi.len() != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for dims {:?}",
            psi.len(),
            dims.as_slice()
        )));
    }
    let map = permutation_map(dims, order);
    let mut out = vec![ZERO; psi.len()];
    for (i, &z) in psi.iter().enumerate() {
        out[map[i]] = z;
    }
    Ok(out)
}

fn permutation_map(dims: &Dims, order: &[usize]) -> Vec<usize> {
    let d = dims.as_slice();
    let strides = dims.strides();
    let new_d: Vec<usize> = order.iter().map(|&i| d[i]).collect();
    let mut new_strides = vec![1; new_d.len()];
    for k in (0..new_d.len().saturating_sub(1)).rev() {
        new_strides[k] = new_strides[k + 1] * new_d[k + 1];
    }
    (0..dims.total())
        .map(|i| {
            order
                .iter()
                .enumerate()
                .map(|(k, &src)| ((i / strides[src]) % d[src]) * new_strides[k])
                .sum()
        })
        .collect()
}

/// `V f(λ) V†` applied to every eigenvalue. Fails if `f` is not finite on the spectrum.
pub fn matrix_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let spec = hermitian_eigendecompose(m)?;
    for &l in &spec.eigenvalues {
        if !f(l).is_finite() {
            return Err(Error::DomainError(l));
        }
    }
    Ok(spec.map_eigenvalues(f))
}

/// `f` applied on the support (eigenvalues `>= eps`); the kernel maps to zero.
/// Returns the result and the support dimension.
pub fn matrix_function_on_support(
    m: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
    eps: f64,
) -> Result<(ComplexMatrix, usize)> {
    let spec = hermitian_eigendecompose(m)?;
    let mut support = 0;
    for &l in &spec.eigenvalues {
        if l >= eps {
            support += 1;
            if !f(l).is_finite() {
                return Err(Error::DomainError(l));
            }
        }
    }
    let out = spec.map_eigenvalues(|l| if l >= eps { f(l) } else { 0.0 });
    Ok((out, support))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}
