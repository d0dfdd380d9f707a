//! Density matrices and the constructors used by the model: Gibbs states,
//! the Rindler vacuum, the causal-order mixture and the flagged tripartite
//! family together with its partition certificate and seeded search.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, BOLTZMANN};
use crate::entropy;
use crate::error::{Error, Result};
use crate::qmatrix::{self, ComplexMatrix, Dims, Spectrum};
use crate::separable::{self, FwOptions, SeparableDecomposition};

/// Tolerance for the Hermitian, positivity and trace checks on states.
pub const STATE_TOL: f64 = 1e-10;
/// PPT gaps at or above this count as non-negative.
pub const PPT_TOL: f64 = 1e-9;
/// Largest admissible trace-norm error of a separable decomposition.
pub const DECOMPOSITION_TOL: f64 = 1e-6;
/// Default number of family evaluations for [`search_gravity_state`].
pub const DEFAULT_SEARCH_BUDGET: usize = 100_000;

/// Hermitian, positive semidefinite, unit-trace matrix over labelled tensor factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateDocument", into = "StateDocument")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Dims,
    labels: Vec<String>,
}

/// JSON layout `{"dims", "labels", "re", "im"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub labels: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<StateDocument> for DensityMatrix {
    type Error = Error;
    fn try_from(doc: StateDocument) -> Result<Self> {
        let dims = Dims::new(doc.dims)?;
        let matrix = ComplexMatrix::from_parts(&doc.re, &doc.im)?;
        let state = DensityMatrix::new(matrix, dims)?;
        if doc.labels.is_empty() {
            Ok(state)
        } else {
            state.with_labels(doc.labels)
        }
    }
}

impl From<DensityMatrix> for StateDocument {
    fn from(s: DensityMatrix) -> Self {
        StateDocument {
            dims: s.dims.as_slice().to_vec(),
            re: s.matrix.real_parts(),
            im: s.matrix.imag_parts(),
            labels: s.labels,
        }
    }
}

fn default_labels(n: usize) -> Vec<String> {
    match n {
        3 => ["G", "E", "B"].iter().map(|s| s.to_string()).collect(),
        _ => (0..n).map(|i| format!("S{i}")).collect(),
    }
}

impl DensityMatrix {
    /// Validates `matrix` as a state on `dims` and stores its Hermitian part.
    pub fn new(matrix: ComplexMatrix, dims: Dims) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, dims {:?} multiply to {}",
                matrix.rows(),
                matrix.cols(),
                dims.as_slice(),
                dims.total()
            )));
        }
        if matrix.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let asymmetry = matrix.hermiticity_error();
        if asymmetry > STATE_TOL {
            return Err(Error::NotHermitian {
                asymmetry,
                tolerance: STATE_TOL,
            });
        }
        let matrix = matrix.symmetrized();
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min_eig = qmatrix::hermitian_eigendecompose(&matrix)?.min_eigenvalue();
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        let labels = default_labels(dims.len());
        Ok(Self { matrix, dims, labels })
    }

    /// Single-factor state.
    pub fn unipartite(matrix: ComplexMatrix) -> Result<Self> {
        let dims = Dims::new(vec![matrix.rows()])?;
        Self::new(matrix, dims)
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn from_pure(psi: &[Complex64], dims: Dims) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Self::new(ComplexMatrix::outer(psi), dims)
    }

    /// `I / n`.
    pub fn maximally_mixed(dims: Dims) -> Self {
        let n = dims.total();
        let labels = default_labels(dims.len());
        Self {
            matrix: ComplexMatrix::identity(n).scale(1.0 / n as f64),
            dims,
            labels,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} subsystems",
                labels.len(),
                self.dims.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidInput(format!("duplicate label `{l}`")));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Reinterprets the same matrix over a different factorization.
    pub fn with_dims(self, dims: Dims) -> Result<Self> {
        if dims.total() != self.dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} do not multiply to {}",
                dims.as_slice(),
                self.dims.total()
            )));
        }
        let labels = default_labels(dims.len());
        Ok(Self {
            matrix: self.matrix,
            dims,
            labels,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn subsystem(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        qmatrix::hermitian_eigendecompose(&self.matrix)
    }

    /// Reduced state on `keep` (strictly increasing), labels carried along.
    pub fn reduce(&self, keep: &[usize]) -> Result<Self> {
        let matrix = qmatrix::partial_trace(&self.matrix, &self.dims, keep)?;
        let dims = self.dims.select(keep)?;
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self { matrix, dims, labels })
    }

    /// Reorders the tensor factors: factor `k` of the result is factor `order[k]` here.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let (matrix, dims) = qmatrix::permute_subsystems(&self.matrix, &self.dims, order)?;
        let labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        Ok(Self { matrix, dims, labels })
    }

    pub fn partial_transpose(&self, subsystem: usize) -> Result<ComplexMatrix> {
        qmatrix::partial_transpose(&self.matrix, &self.dims, subsystem)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.as_slice().to_vec();
        dims.extend_from_slice(other.dims.as_slice());
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let dims = Dims::new(dims).expect("concatenated dims are valid");
        let n = dims.len();
        let labels = if labels.iter().enumerate().any(|(i, l)| labels[..i].contains(l)) {
            default_labels(n)
        } else {
            labels
        };
        Self {
            matrix: qmatrix::tensor_product(&self.matrix, &other.matrix),
            dims,
            labels,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Inverse temperature, given directly or via a temperature and Boltzmann constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Kelvin when `boltzmann_constant` is SI; set the constant to 1 for energy units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default = "default_boltzmann")]
    pub boltzmann_constant: f64,
}

fn default_boltzmann() -> f64 {
    BOLTZMANN
}

impl ThermalParams {
    pub fn from_eta(eta: f64) -> Self {
        Self {
            eta: Some(eta),
            temperature: None,
            boltzmann_constant: BOLTZMANN,
        }
    }

    pub fn from_temperature(temperature: f64, boltzmann_constant: f64) -> Self {
        Self {
            eta: None,
            temperature: Some(temperature),
            boltzmann_constant,
        }
    }

    /// `η`, or `1 / (k_B T)`.
    pub fn eta(&self) -> Result<f64> {
        match (self.eta, self.temperature) {
            (Some(eta), None) if eta > 0.0 && eta.is_finite() => Ok(eta),
            (None, Some(t)) if t > 0.0 && t.is_finite() => {
                if !(self.boltzmann_constant > 0.0 && self.boltzmann_constant.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "Boltzmann constant must be positive, got {}",
                        self.boltzmann_constant
                    )));
                }
                let eta = 1.0 / (self.boltzmann_constant * t);
                if eta.is_finite() {
                    Ok(eta)
                } else {
                    Err(Error::Overflow(format!("1/(k_B T) for T = {t:e}")))
                }
            }
            (Some(_), Some(_)) => Err(Error::InvalidInput(
                "give either eta or temperature, not both".into(),
            )),
            (None, None) => Err(Error::InvalidInput("eta or temperature is required".into())),
            (Some(v), None) | (None, Some(v)) => {
                Err(Error::InvalidInput(format!("eta/temperature must be positive, got {v}")))
            }
        }
    }
}

/// Shifted Boltzmann weights `exp(-ηλ - max(-ηλ))` and the shift.
fn boltzmann_weights(eigenvalues: &[f64], eta: f64) -> Result<(Vec<f64>, f64)> {
    let exponents: Vec<f64> = eigenvalues.iter().map(|&l| -eta * l).collect();
    if exponents.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow(format!(
            "η·λ not finite for η = {eta:e}, spectrum range [{:e}, {:e}]",
            eigenvalues.last().copied().unwrap_or(0.0),
            eigenvalues.first().copied().unwrap_or(0.0)
        )));
    }
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((exponents.iter().map(|x| (x - shift).exp()).collect(), shift))
}

/// Canonical state `e^{-ηH} / Z`.
pub fn gibbs_state(h: &ComplexMatrix, params: &ThermalParams) -> Result<DensityMatrix> {
    let eta = params.eta()?;
    h.ensure_hermitian()?;
    let spec = qmatrix::hermitian_eigendecompose(h)?;
    let (weights, _) = boltzmann_weights(&spec.eigenvalues, eta)?;
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let rho = Spectrum {
        eigenvalues: probs,
        eigenvectors: spec.eigenvectors,
    }
    .reconstruct()
    .symmetrized();
    DensityMatrix::unipartite(rho)
}

/// `ln Z = ln tr e^{-ηH}`, computed with the same shift as [`gibbs_state`].
pub fn log_partition(h: &ComplexMatrix, params: &ThermalParams) -> Result<f64> {
    let eta = params.eta()?;
    let eigs = qmatrix::hermitian_eigenvalues(h)?;
    let (weights, shift) = boltzmann_weights(&eigs, eta)?;
    Ok(shift + weights.iter().sum::<f64>().ln())
}

/// `tr(Oρ)`.
pub fn expectation(o: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    if o.rows() != rho.dim() || o.cols() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{}, state is {}x{}",
            o.rows(),
            o.cols(),
            rho.dim(),
            rho.dim()
        )));
    }
    o.ensure_hermitian()?;
    let v = o.trace_product(rho.matrix());
    if v.im.abs() > STATE_TOL * o.max_abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "expectation has imaginary part {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// Gibbs state of `h0` at the Unruh temperature of `acceleration`, and that temperature.
pub fn rindler_vacuum(
    h0: &ComplexMatrix,
    acceleration: f64,
    constants: &PhysicalConstants,
) -> Result<(DensityMatrix, f64)> {
    if !(acceleration > 0.0 && acceleration.is_finite()) {
        return Err(Error::NonPositiveAcceleration(acceleration));
    }
    let t0 = constants.unruh_temperature(acceleration);
    let rho = gibbs_state(h0, &ThermalParams::from_temperature(t0, constants.k_b))?;
    Ok((rho, t0))
}

/// Equal mixture of the two causal orders. Both inputs must live on the
/// same factors; labels are taken from `rho_12`.
pub fn mix_causal_orders(rho_12: &DensityMatrix, rho_21: &DensityMatrix) -> Result<DensityMatrix> {
    if rho_12.dims() != rho_21.dims() {
        return Err(Error::DimensionMismatch(format!(
            "causal orders live on {:?} and {:?}",
            rho_12.dims().as_slice(),
            rho_21.dims().as_slice()
        )));
    }
    let mixed = (rho_12.matrix() + rho_21.matrix()).scale(0.5);
    DensityMatrix::new(mixed, rho_12.dims().clone())?.with_labels(rho_12.labels().to_vec())
}

/// Parameters of the flagged tripartite family on factors `(G, E, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    /// Flag angle: flag `k` sits at azimuth `k(π - θ)`, so `θ = 0` gives orthogonal consecutive flags.
    pub theta: f64,
    pub weights: Vec<f64>,
    /// White-noise fraction `p`.
    pub noise: f64,
    /// Weight `q` of the classically flagged anti-correlated record.
    #[serde(default)]
    pub bias: f64,
    #[serde(default = "default_d_g")]
    pub d_g: usize,
}

fn default_d_g() -> usize {
    2
}

impl FamilyParams {
    pub fn new(theta: f64, weights: Vec<f64>, noise: f64) -> Self {
        Self {
            theta,
            weights,
            noise,
            bias: 0.0,
            d_g: 2,
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_d_g(mut self, d_g: usize) -> Self {
        self.d_g = d_g;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::InvalidNoise(self.noise));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(Error::InvalidInput(format!("bias must lie in [0, 1], got {}", self.bias)));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidInput(format!("theta must be finite, got {}", self.theta)));
        }
        if self.d_g != 2 && self.d_g != 4 {
            return Err(Error::DimensionMismatch(format!("d_G must be 2 or 4, got {}", self.d_g)));
        }
        Ok(())
    }
}

/// `(1-p)[(1-q) Σ_k w_k τ^k ⊗ χ^k + q C] + p I/n` on `(G, E, B)` with
/// `τ^k = (|0⟩ + e^{iφ_k}|1⟩)/√2`, `χ^k = (|00⟩ + e^{-iφ_k}|11⟩)/√2` on G–B,
/// `φ_k = k(π - θ)` and `C = ½|0,0,1⟩⟨·| + ½|1,1,0⟩⟨·|`.
pub fn build_flagged_family(params: &FamilyParams) -> Result<DensityMatrix> {
    params.validate()?;
    let dg = params.d_g;
    let dims = Dims::new(vec![dg, 2, 2])?;
    let n = dims.total();
    let idx = |g: usize, e: usize, b: usize| (g * 2 + e) * 2 + b;
    let (p, q) = (params.noise, params.bias);

    let mut rho = ComplexMatrix::zeros(n, n);
    for (k, &w) in params.weights.iter().enumerate() {
        let phi = k as f64 * (PI - params.theta);
        let flag = [
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::from_polar(FRAC_1_SQRT_2, phi),
        ];
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        for (e, &fe) in flag.iter().enumerate() {
            psi[idx(0, e, 0)] = fe * FRAC_1_SQRT_2;
            psi[idx(1, e, 1)] = fe * Complex64::from_polar(FRAC_1_SQRT_2, -phi);
        }
        let coeff = (1.0 - p) * (1.0 - q) * w;
        for r in 0..n {
            for c in 0..n {
                rho[(r, c)] += psi[r] * psi[c].conj() * coeff;
            }
        }
    }
    let record = (1.0 - p) * q * 0.5;
    rho[(idx(0, 0, 1), idx(0, 0, 1))] += record;
    rho[(idx(1, 1, 0), idx(1, 1, 0))] += record;
    for i in 0..n {
        rho[(i, i)] += p / n as f64;
    }
    DensityMatrix::new(rho, dims)
}

/// Entanglement witnesses and separability evidence for the three cuts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCertificate {
    #[serde(rename = "negativity_G_vs_EB")]
    pub negativity_g_vs_eb: f64,
    #[serde(rename = "ppt_gap_E_cut")]
    pub ppt_gap_e_cut: f64,
    #[serde(rename = "ppt_gap_B_cut")]
    pub ppt_gap_b_cut: f64,
    #[serde(rename = "separable_decomposition_E_cut")]
    pub separable_decomposition_e_cut: Option<SeparableDecomposition>,
    #[serde(rename = "separable_decomposition_B_cut")]
    pub separable_decomposition_b_cut: Option<SeparableDecomposition>,
    /// Largest reconstruction error over the decompositions present.
    pub reconstruction_error_trace_norm: Option<f64>,
    /// Why a decomposition is missing, if one was attempted and failed.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl PartitionCertificate {
    /// Entangled across G|EB by at least `target`, with both complementary
    /// cuts PPT and explicitly decomposed.
    pub fn is_valid(&self, target_negativity: f64) -> bool {
        let decomposed = |d: &Option<SeparableDecomposition>| {
            d.as_ref().is_some_and(|d| {
                (d.weight_sum() - 1.0).abs() <= 1e-9
                    && d.terms.iter().all(|t| t.weight > 0.0)
                    && d.trace_norm_error <= DECOMPOSITION_TOL
            })
        };
        self.negativity_g_vs_eb >= target_negativity
            && self.ppt_gap_e_cut >= -PPT_TOL
            && self.ppt_gap_b_cut >= -PPT_TOL
            && decomposed(&self.separable_decomposition_e_cut)
            && decomposed(&self.separable_decomposition_b_cut)
    }

    /// Largest difference between the scalar fields of two certificates.
    pub fn max_scalar_difference(&self, other: &Self) -> f64 {
        let err = |c: &Self| c.reconstruction_error_trace_norm.unwrap_or(0.0);
        [
            (self.negativity_g_vs_eb - other.negativity_g_vs_eb).abs(),
            (self.ppt_gap_e_cut - other.ppt_gap_e_cut).abs(),
            (self.ppt_gap_b_cut - other.ppt_gap_b_cut).abs(),
            (err(self) - err(other)).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Positions of G, E, B: by label when all three are present, else positional.
fn gravity_indices(rho: &DensityMatrix) -> Result<[usize; 3]> {
    if rho.dims().len() != 3 {
        return Err(Error::WrongArity(rho.dims().len()));
    }
    match (rho.subsystem("G"), rho.subsystem("E"), rho.subsystem("B")) {
        (Some(g), Some(e), Some(b)) => Ok([g, e, b]),
        _ => Ok([0, 1, 2]),
    }
}

pub fn certify_partitions(rho: &DensityMatrix) -> Result<PartitionCertificate> {
    certify_partitions_with(rho, &FwOptions::default())
}

pub fn certify_partitions_with(rho: &DensityMatrix, opts: &FwOptions) -> Result<PartitionCertificate> {
    let [g, e, b] = gravity_indices(rho)?;
    let negativity = entropy::negativity(rho, g)?;
    let gap_e = entropy::ppt_gap(rho, e)?;
    let gap_b = entropy::ppt_gap(rho, b)?;

    let mut notes = Vec::new();
    let mut dec_e = None;
    let mut dec_b = None;
    if gap_e >= -PPT_TOL && gap_b >= -PPT_TOL {
        for (party, slot, name) in [(e, &mut dec_e, "E"), (b, &mut dec_b, "B")] {
            match separable::decompose_cut(rho, party, opts) {
                Ok(d) => *slot = Some(d),
                Err(err) => notes.push(format!("{name} cut: {err}")),
            }
        }
    } else {
        notes.push("a complementary cut has a negative PPT gap; no decomposition attempted".into());
    }
    let reconstruction_error_trace_norm = [&dec_e, &dec_b]
        .iter()
        .filter_map(|d| d.as_ref().map(|d| d.trace_norm_error))
        .reduce(f64::max);
    Ok(PartitionCertificate {
        negativity_g_vs_eb: negativity,
        ppt_gap_e_cut: gap_e,
        ppt_gap_b_cut: gap_b,
        separable_decomposition_e_cut: dec_e,
        separable_decomposition_b_cut: dec_b,
        reconstruction_error_trace_norm,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchOptions {
    /// Family evaluations before giving up.
    pub budget: usize,
    pub d_g: usize,
    /// Lower bound on the sampled noise fraction.
    pub noise_floor: f64,
    /// Candidates need PPT gaps at least this large before the (expensive)
    /// separability search is attempted.
    pub screen_margin: f64,
    pub fw: FwOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_SEARCH_BUDGET,
            d_g: 2,
            noise_floor: 0.0,
            screen_margin: 1e-3,
            fw: FwOptions::default(),
        }
    }
}

/// Best screened candidate seen by an unsuccessful search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchFrontier {
    pub target_negativity: f64,
    pub evaluations: usize,
    pub certification_attempts: usize,
    pub noise_floor: f64,
    /// Largest G|EB negativity among candidates whose complementary cuts passed the PPT screen.
    pub best_negativity: f64,
    pub best_params: Option<FamilyParams>,
    pub best_ppt_gaps: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub params: FamilyParams,
    pub state: DensityMatrix,
    pub certificate: PartitionCertificate,
    pub evaluations: usize,
    pub certification_attempts: usize,
}

struct Screened {
    params: FamilyParams,
    negativity: f64,
    gaps: (f64, f64),
}

fn sample_params<R: Rng>(rng: &mut R, dirichlet: bool, opts: &SearchOptions) -> FamilyParams {
    let k = rng.gen_range(2..=4usize);
    let theta = rng.gen_range(0.0..=PI);
    let noise = opts.noise_floor + (1.0 - opts.noise_floor) * rng.gen::<f64>();
    let bias = rng.gen::<f64>();
    let weights = if dirichlet {
        let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| (x / s).max(1e-12)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        w
    } else {
        vec![1.0 / k as f64; k]
    };
    FamilyParams {
        theta,
        weights,
        noise,
        bias,
        d_g: opts.d_g,
    }
}

fn screen(params: FamilyParams) -> Option<Screened> {
    let rho = build_flagged_family(&params).ok()?;
    let negativity = entropy::negativity(&rho, 0).ok()?;
    let gaps = (entropy::ppt_gap(&rho, 1).ok()?, entropy::ppt_gap(&rho, 2).ok()?);
    Some(Screened {
        params,
        negativity,
        gaps,
    })
}

const SEARCH_CHUNK: usize = 256;

/// Seeded random search over the flagged family for a certified state with
/// G|EB negativity at least `target_negativity`. Deterministic in
/// `(target, seed, options)`.
pub fn search_gravity_state(target_negativity: f64, seed: u64, opts: &SearchOptions) -> Result<SearchOutcome> {
    if !(target_negativity > 0.0 && target_negativity <= 0.5) {
        return Err(Error::InvalidInput(format!(
            "target negativity must lie in (0, 0.5], got {target_negativity}"
        )));
    }
    if !(0.0..=1.0).contains(&opts.noise_floor) {
        return Err(Error::InvalidNoise(opts.noise_floor));
    }
    if opts.d_g != 2 && opts.d_g != 4 {
        return Err(Error::DimensionMismatch(format!("d_G must be 2 or 4, got {}", opts.d_g)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluations = 0;
    let mut attempts = 0;
    let mut best: Option<Screened> = None;

    while evaluations < opts.budget {
        let chunk = SEARCH_CHUNK.min(opts.budget - evaluations);
        let candidates: Vec<FamilyParams> = (0..chunk)
            .map(|i| sample_params(&mut rng, (evaluations + i) % 2 == 1, opts))
            .collect();
        let screened: Vec<Option<Screened>> = candidates.into_par_iter().map(screen).collect();

        for (i, s) in screened.into_iter().enumerate() {
            let Some(s) = s else { continue };
            let ppt_ok = s.gaps.0 >= opts.screen_margin && s.gaps.1 >= opts.screen_margin;
            if !ppt_ok {
                continue;
            }
            if s.negativity >= target_negativity {
                attempts += 1;
                let rho = build_flagged_family(&s.params)?;
                let certificate = certify_partitions_with(&rho, &opts.fw)?;
                if certificate.is_valid(target_negativity) {
                    return Ok(SearchOutcome {
                        params: s.params,
                        state: rho,
                        certificate,
                        evaluations: evaluations + i + 1,
                        certification_attempts: attempts,
                    });
                }
            }
            if best.as_ref().is_none_or(|b| s.negativity > b.negativity) {
                best = Some(s);
            }
        }
        evaluations += chunk;
    }

    let best_negativity = best.as_ref().map_or(0.0, |b| b.negativity);
    Err(Error::SearchExhausted {
        evaluations,
        best_negativity,
        frontier: Box::new(SearchFrontier {
            target_negativity,
            evaluations,
            certification_attempts: attempts,
            noise_floor: opts.noise_floor,
            best_negativity,
            best_ppt_gaps: best.as_ref().map(|b| b.gaps),
            best_params: best.map(|b| b.params),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn diag_state(p: &[f64]) -> DensityMatrix {
        DensityMatrix::unipartite(ComplexMatrix::from_real_diagonal(p)).unwrap()
    }

    #[test]
    fn rejects_invalid_matrices() {
        let d = Dims::new(vec![2]).unwrap();
        let bad_trace = ComplexMatrix::from_real_diagonal(&[0.6, 0.6]);
        assert!(matches!(DensityMatrix::new(bad_trace, d.clone()), Err(Error::InvalidState(_))));
        let negative = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(negative, d.clone()), Err(Error::InvalidState(_))));
        let mut asym = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        asym[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(asym, d.clone()), Err(Error::NotHermitian { .. })));
        let wrong = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        assert!(matches!(DensityMatrix::new(wrong, d), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random::density_matrix(8, &mut rng);
        let rho = DensityMatrix::new(m, Dims::new(vec![2, 2, 2]).unwrap()).unwrap();
        let back = DensityMatrix::from_json(&rho.to_json().unwrap()).unwrap();
        assert_eq!(rho, back);
        assert_eq!(back.labels(), ["G", "E", "B"]);
    }

    #[test]
    fn json_rejects_unknown_keys_and_bad_labels() {
        let doc = r#"{"dims":[2],"re":[[1,0],[0,0]],"im":[[0,0],[0,0]],"extra":1}"#;
        assert!(DensityMatrix::from_json(doc).is_err());
        let doc = r#"{"dims":[2,2],"labels":["A","A"],"re":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#;
        assert!(DensityMatrix::from_json(doc).is_err());
    }

    #[test]
    fn gibbs_two_level_closed_form() {
        let e1 = 2.0;
        let eta = std::f64::consts::LN_2 / e1;
        let h = ComplexMatrix::from_real_diagonal(&[0.0, e1]);
        let rho = gibbs_state(&h, &ThermalParams::from_eta(eta)).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-12);
        assert!((rho.matrix()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_high_temperature_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random::hermitian(6, &mut rng);
        let rho = gibbs_state(&h, &ThermalParams::from_eta(1e-12)).unwrap();
        let mixed = ComplexMatrix::identity(6).scale(1.0 / 6.0);
        assert!(rho.matrix().max_abs_diff(&mixed) < 1e-9);
    }

    #[test]
    fn gibbs_eigenvalues_are_softmax_and_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random::hermitian(7, &mut rng).scale(3.0);
        let eta = 0.7;
        let rho = gibbs_state(&h, &ThermalParams::from_eta(eta)).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);

        let lam = qmatrix::hermitian_eigenvalues(&h).unwrap();
        let z: f64 = lam.iter().map(|l| (-eta * l).exp()).sum();
        let mut expected: Vec<f64> = lam.iter().map(|l| (-eta * l).exp() / z).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        let got = rho.spectrum().unwrap().eigenvalues;
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let comm = &rho.matrix().matmul(&h) - &h.matmul(rho.matrix());
        assert!(comm.max_abs() < 1e-10);
        assert!((log_partition(&h, &ThermalParams::from_eta(eta)).unwrap() - z.ln()).abs() < 1e-12);
    }

    #[test]
    fn gibbs_survives_huge_exponents() {
        let h = ComplexMatrix::from_real_diagonal(&[0.0, 1e6, 2e6]);
        let rho = gibbs_state(&h, &ThermalParams::from_eta(10.0)).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        let h = ComplexMatrix::from_real_diagonal(&[0.0, 1e300]);
        assert!(matches!(
            gibbs_state(&h, &ThermalParams::from_eta(1e10)),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn thermal_params_validation() {
        assert!(ThermalParams::from_eta(0.0).eta().is_err());
        assert!(ThermalParams::from_temperature(-1.0, 1.0).eta().is_err());
        let both = ThermalParams {
            eta: Some(1.0),
            temperature: Some(1.0),
            boltzmann_constant: 1.0,
        };
        assert!(both.eta().is_err());
        assert_eq!(ThermalParams::from_temperature(2.0, 0.5).eta().unwrap(), 1.0);
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = DensityMatrix::unipartite(random::density_matrix(5, &mut rng)).unwrap();
        assert!((expectation(&ComplexMatrix::identity(5), &rho).unwrap() - 1.0).abs() < 1e-12);

        let o = random::hermitian(5, &mut rng);
        let mut oracle = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                oracle += (o[(i, j)] * rho.matrix()[(j, i)]).re;
            }
        }
        assert!((expectation(&o, &rho).unwrap() - oracle).abs() < 1e-12);

        let h = random::hermitian(4, &mut rng);
        let spec = qmatrix::hermitian_eigendecompose(&h).unwrap();
        let ground = DensityMatrix::from_pure(&spec.eigenvector(3), Dims::new(vec![4]).unwrap()).unwrap();
        assert!((expectation(&h, &ground).unwrap() - spec.min_eigenvalue()).abs() < 1e-10);

        assert!(matches!(
            expectation(&ComplexMatrix::identity(4), &rho),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rindler_vacuum_temperature() {
        let c = PhysicalConstants::default();
        let h = ComplexMatrix::from_real_diagonal(&[0.0, 1e-40]);
        let (rho, t0) = rindler_vacuum(&h, 9.81, &c).unwrap();
        assert!((t0 - 3.98e-20).abs() / 3.98e-20 < 2e-3);
        let (_, t1) = rindler_vacuum(&h, 19.62, &c).unwrap();
        assert_eq!(t1, 2.0 * t0);
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-9);
        assert!(matches!(
            rindler_vacuum(&h, 0.0, &c),
            Err(Error::NonPositiveAcceleration(_))
        ));
    }

    #[test]
    fn causal_mixture_examples() {
        let a = diag_state(&[1.0, 0.0]);
        let b = diag_state(&[0.0, 1.0]);
        let m = mix_causal_orders(&a, &b).unwrap();
        let eig = m.spectrum().unwrap().eigenvalues;
        assert!((eig[0] - 0.5).abs() < 1e-15 && (eig[1] - 0.5).abs() < 1e-15);
        assert_eq!(mix_causal_orders(&a, &a).unwrap(), a);
        let c = DensityMatrix::maximally_mixed(Dims::new(vec![3]).unwrap());
        assert!(matches!(mix_causal_orders(&a, &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn family_construction_examples() {
        let mixed = build_flagged_family(&FamilyParams::new(0.4, vec![0.5, 0.5], 1.0)).unwrap();
        let target = ComplexMatrix::identity(8).scale(0.125);
        assert!(mixed.matrix().max_abs_diff(&target) < 1e-15);

        let flagged = build_flagged_family(&FamilyParams::new(0.0, vec![0.5, 0.5], 0.0)).unwrap();
        assert!((flagged.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(flagged.spectrum().unwrap().min_eigenvalue() >= -1e-12);

        for d_g in [2, 4] {
            let p = FamilyParams::new(1.1, vec![0.2, 0.3, 0.5], 0.1).with_bias(0.3).with_d_g(d_g);
            let rho = build_flagged_family(&p).unwrap();
            assert_eq!(rho.dims().as_slice(), &[d_g, 2, 2]);
            assert!(rho.spectrum().unwrap().min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn family_parameter_errors() {
        let bad = |p: FamilyParams| build_flagged_family(&p).unwrap_err();
        assert!(matches!(bad(FamilyParams::new(0.0, vec![0.5, 0.6], 0.0)), Error::InvalidWeights(_)));
        assert!(matches!(bad(FamilyParams::new(0.0, vec![1.0, 0.0], 0.0)), Error::InvalidWeights(_)));
        assert!(matches!(bad(FamilyParams::new(0.0, vec![1.0], 1.5)), Error::InvalidNoise(_)));
        assert!(matches!(bad(FamilyParams::new(0.0, vec![1.0], 0.0).with_d_g(3)), Error::DimensionMismatch(_)));
    }

    #[test]
    fn unbiased_family_is_symmetric_under_g_b_swap() {
        let p = FamilyParams::new(0.9, vec![0.3, 0.3, 0.4], 0.05);
        let rho = build_flagged_family(&p).unwrap();
        let ng = entropy::negativity(&rho, 0).unwrap();
        let nb = entropy::negativity(&rho, 2).unwrap();
        assert!((ng - nb).abs() < 1e-12);
    }

    #[test]
    fn certificate_requires_three_parties() {
        let rho = DensityMatrix::maximally_mixed(Dims::new(vec![2, 2]).unwrap());
        assert!(matches!(certify_partitions(&rho), Err(Error::WrongArity(2))));
    }

    #[test]
    fn search_rejects_out_of_range_targets() {
        let opts = SearchOptions::default();
        assert!(search_gravity_state(0.0, 1, &opts).is_err());
        assert!(search_gravity_state(0.6, 1, &opts).is_err());
    }
}
