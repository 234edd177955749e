//! Symmetric linear algebra: dense storage, operators, and eigensolvers.

mod dense;
mod eigen;
mod lanczos;
mod operator;

pub use dense::SymMatrix;
pub use eigen::{
    eigenvalues_dense, symmetric_eigen, tridiagonal_eigen, DenseOptions, SymmetricEigen, DEFAULT_DENSE_CAP,
};
pub use lanczos::{top_eigenvalues, LanczosOptions, TopEigen};
pub use operator::{MaxKernel, SparseSym, SymmetricOperator};

pub(crate) fn dot<T: crate::Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: crate::Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
