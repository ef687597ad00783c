//! Library for classical mechanics of systems with anticommuting dynamical
//! variables: an exact finite-dimensional algebra kernel, a symbolic layer
//! for equations of motion and first-order generating-function analysis, a
//! small text format for model input, numeric integration on grids, and
//! structured report types used by the command line front end.

pub mod algebra;
pub mod dynamics;
pub mod grid;
pub mod hj;
pub mod mechanics;
pub mod model;
pub mod poly;
pub mod report;
pub mod scalar;
pub mod symbols;
pub mod xform;

pub use algebra::{
    canonical_mask, mask_indices, mul_sign, AlgebraError, ConjTarget, GeneratorBasis,
    GeneratorKind, GrassmannElement, Parity, TermRecord, ALGEBRA_TOL, MAX_GENERATORS, PRUNE_TOL,
};
pub use poly::{GrassmannPoly, MonomialEquation, PolyError};
pub use scalar::{format_complex, EvalError, FuncDef, RealityInfo, ScalarEnv, ScalarExpr, FD_STEP};
pub use symbols::{
    endpoint_table, hj_table, mechanics_table, FermionInfo, OddSymbolTable, SymbolRole,
};
