//! Parent Hamiltonians and exact diagonalization (placeholder).
use crate::scalar::Scalar;

/// Sparse Hermitian operator (placeholder).
#[derive(Debug, Clone)]
pub struct SparseOperator<T: Scalar> {
    _marker: std::marker::PhantomData<T>,
}
