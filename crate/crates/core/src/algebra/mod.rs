//! Exact finite-dimensional Grassmann algebra over named odd generators.
//!
//! Monomials are strictly increasing generator index sets stored as `u64`
//! bitmasks, so products, graded derivatives, conjugation, exponentials and
//! inverses of even elements are all exact finite computations.

mod basis;
mod element;

pub use basis::{
    canonical_mask, mask_indices, mul_sign, ConjTarget, GeneratorBasis, GeneratorKind,
    MAX_GENERATORS,
};
pub use element::{GrassmannElement, TermRecord};

use thiserror::Error;

/// Coefficients below this magnitude are pruned after every operation.
pub const PRUNE_TOL: f64 = 1e-14;

/// Default tolerance for exact-identity comparisons.
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("generator bases differ: {left} vs {right}")]
    BasisMismatch { left: String, right: String },
    #[error("generator index {index} out of bounds for basis of size {size}")]
    IndexOutOfBounds { index: usize, size: usize },
    #[error("at most {MAX_GENERATORS} generators are supported, got {count}")]
    TooManyGenerators { count: usize },
    #[error("duplicate generator name `{name}`")]
    DuplicateGenerator { name: String },
    #[error("operation requires an even element, found parity {found:?}")]
    NotEven { found: Parity },
    #[error("element is not invertible: its scalar part vanishes")]
    NotInvertible,
}
