//! Nonnegative tensor factorization with hypergraph-Laplacian smoothing on the
//! sample mode, plus the supporting pieces: dense N-way tensor kernels, k-NN
//! hypergraph/graph construction, spectral manifold unfolding (hypergraph
//! Laplacian, graph Laplacian, LLE), and a clustering evaluation harness.
//!
//! Everything is `f64`, single-threaded, and deterministic given a seed.

// index loops mirror the math; `!(x > 0)` checks intentionally reject NaN
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod factorization;
pub mod hypergraph;
pub mod linalg;
pub mod synthetic;
pub mod tensor;

pub use error::Error;
pub use tensor::{DenseMatrix, DenseTensor};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
