//! Generating-function machinery for first-order fermionic systems: the
//! general even ansatz over constant momenta and coordinates, assembly of
//! the evolution equation plus constraint and constant-coordinate equation
//! families, the constraint solve that binds coordinates to constants, the
//! constant-relation reduction, per-monomial coefficient matching, and
//! numeric verification of candidate coefficient functions on a time grid.

mod ansatz;
mod closed_form;
mod system;
mod verify;

pub use ansatz::{generate_even_ansatz, HJAnsatz};
pub use closed_form::{InteractingClosedForm, TimeFn};
pub use system::{
    assemble_hj_system, constant_relations, match_hj_coefficients, reduce, reduce_hpf,
    solve_constraints_for_psi, ConstantRelation, HJSystem, HpfReduction, Obligation,
    OddConstantEq, ReducedSystem,
};
pub use verify::{boundary_consistency, verify_candidate, FamilyResidual, VerifyOutcome};

use crate::algebra::AlgebraError;
use crate::grid::GridError;
use crate::mechanics::MechError;
use crate::poly::PolyError;
use crate::scalar::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum HjError {
    #[error("the generating-function pipeline supports purely fermionic models")]
    BosonsUnsupported,
    #[error("coefficient name `{name}` collides with a declared model symbol")]
    NameCollision { name: String },
    #[error("constraint equation for `{equation}` is not linear in the coordinates")]
    NotLinearInCoordinates { equation: String },
    #[error(
        "cannot solve the constraint equations for `{symbol}`: the coefficient \
         has no invertible scalar part"
    )]
    SecondClassFailure { symbol: String },
    #[error("unexpected symbol `{name}` in {place}")]
    UnexpectedSymbol { name: String, place: &'static str },
    #[error("the model declares no kinetic metric; the endpoint check needs one")]
    MissingMetric,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Mech(#[from] MechError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
