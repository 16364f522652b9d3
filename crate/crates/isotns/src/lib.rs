//! A simulation laboratory for isometric tensor-network state (isoTNS) paths
//! across 2D topological phase transitions.
//!
//! The crate builds parameterized isoTNS via the plumbing construction,
//! realizes them as linear-depth sequential quantum-circuit programs, and
//! cross-checks them with three independent engines:
//!
//! * [`statevector`] — dense amplitudes, the ground-truth oracle;
//! * [`holographic`] — the sequential measure-and-reset protocol on a 1D
//!   register, exact or with a truncated boundary MPS;
//! * [`worldline`] — classical Monte Carlo for the vertex-model picture of
//!   the squared amplitudes.
//!
//! [`diagnostics`] detects the symmetry-enriched topological order along the
//! path (membrane order around an inserted defect, boundary-operator
//! invariant, pulling-through condition, symmetry transfer spectra), and
//! [`spectra`] builds the frustration-free parent Hamiltonians with exact
//! diagonalization.
//!
//! Core numerics are generic over the real scalar (`f32`/`f64`) through the
//! [`scalar::Scalar`] trait; the `*64` aliases below are the concrete types
//! used by the CLI and the quoted tolerances.

pub mod circuit;
pub mod diagnostics;
pub mod error;
pub mod holographic;
pub mod lattice;
mod linalg;
pub mod scalar;
pub mod spectra;
pub mod statevector;
pub mod tensor;
pub mod worldline;

pub use error::{Error, Result};
pub use scalar::{Scalar, C, EXACT_TOL};

/// Concrete f64 aliases for the main domain types.
pub type WMatrix64 = tensor::WMatrix<f64>;
pub type WeightMatrix64 = tensor::WeightMatrix<f64>;
pub type PlumbedTensor64 = tensor::PlumbedTensor<f64>;
pub type MpsWMatrix64 = tensor::MpsWMatrix<f64>;
pub type DoubleLineTensor64 = tensor::DoubleLineTensor<f64>;
pub type GateProgram64 = circuit::GateProgram<f64>;
pub type StateVector64 = statevector::StateVector<f64>;
pub type SparseOperator64 = spectra::SparseOperator<f64>;
pub type Complex64 = num_complex::Complex<f64>;
