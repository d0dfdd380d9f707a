//! Numerical toolkit for smooth entropy transfer under causality cancellation.
//!
//! The crate is layered bottom-up:
//!
//! - [`qmatrix`]: dense Hermitian linear algebra (Jacobi eigensolver, partial
//!   trace/transpose, spectral functions).
//! - [`states`]: Gibbs and Rindler-vacuum states, the causal-order mixture,
//!   the flagged tripartite family and its partition certificate.
//! - [`entropy`]: von Neumann entropy, Schmidt spectra, strong-subadditivity
//!   gaps, modular Hamiltonians and negativity.
//! - [`transfer`]: before/after entropy ledger, thermodynamic bookkeeping.
//! - [`geometry`]: regulated area laws and the horizon-entropy relations.
//! - [`horizon`]: quadratures over sampled horizon fields.
//! - [`scenario`]: JSON-configured runs and canonical reports (used by the CLI).

pub mod constants;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod horizon;
pub mod qmatrix;
pub mod random;
pub mod scenario;
pub mod separable;
pub mod states;
pub mod transfer;

pub use error::{Error, Result};
pub use qmatrix::{ComplexMatrix, Dims, Spectrum};
pub use states::DensityMatrix;
