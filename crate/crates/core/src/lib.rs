//! Quantum-resource analysis of 2D scalar fields.
//!
//! A field sampled on a `2^nx × 2^ny` grid is flattened into a length
//! `2^(nx+ny)` vector, one binary digit of the grid index per site, and
//! factorized as a matrix product state (MPS). The encoded state is then
//! characterized by its bipartite entanglement entropy and its stabilizer
//! 2-Rényi entropy (magic), computed by a dense enumeration, an exact
//! replica contraction, or perfect Pauli sampling.
//!
//! Module map:
//!
//! - [`tensor`]: dense SVD truncation and the [`Mps`] type.
//! - [`encoding`]: grid ↔ MPS site orderings, value shifts, normalization.
//! - [`resources`]: entanglement profiles and stabilizer Rényi entropies.
//! - [`analysis`]: coarse-graining, sign-shift, ordering and time-series studies.
//! - [`io`]: field loaders, synthetic shear-flow initial conditions, reports.
//! - [`cli`]: the `flowmagic` command-line front end.

pub mod analysis;
pub mod cli;
pub mod encoding;
mod error;
pub mod io;
pub mod resources;
pub mod tensor;

pub use encoding::{EncodedState, EncodingConfig, Field2D, Ordering};
pub use error::{Error, ErrorKind, Result};
pub use tensor::{Mps, TruncationResult};
