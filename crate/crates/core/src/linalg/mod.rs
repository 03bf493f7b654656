//! Band storage, direct factorizations and block Krylov eigensolvers.
//!
//! With control points numbered lexicographically every plate operator is
//! banded, so factorizations cost `O(n b^2)` instead of `O(n^3)`.

mod band;
mod krylov;

pub use band::{BandCholesky, BandLu, BandMatrix};
pub use krylov::{
    dense_generalized_eigenvalues, symmetric_largest, unsymmetric_smallest, ComplexPairs, KrylovOptions, SymmetricPairs,
};
