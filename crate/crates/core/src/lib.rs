//! Truncated HEOM Liouvillians with a Schur-complement terminator.
//!
//! The crate builds the block Liouvillian of the hierarchical equations of
//! motion on a finite multi-index set, closes it either naively or with the
//! Schur-complement terminator, computes dense spectra, and checks the
//! Gershgorin-type resolvent bounds that control the truncation.
//!
//! Density operators are vectorized by row-major stacking throughout, so
//! `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.

// `!(x > 0.0)` is used on purpose so NaN is rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod bath;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod hierarchy;
pub mod linalg;
pub mod spectra;
pub mod superop;

pub use error::{HeomError, Result};
pub use linalg::C64;
