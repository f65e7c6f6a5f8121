//! Dense linear algebra and the matrix product state representation.
//!
//! All tensors are real `f64`. A site tensor has shape
//! `(left bond) × 2 × (right bond)` and is stored as a pair of matrices, one
//! per value of the physical index. The vector index of a basis state is
//! `Σ_k σ_k 2^(N-1-k)`, so site 0 carries the most significant bit.

mod mps;
mod svd;

pub use mps::{Mps, SiteTensor, TruncationResult, TruncationSummary, DEFAULT_DENSE_LIMIT};
pub use svd::{svd_truncate, Truncated};
