//! Assembly of the generating-function equation system, the linear solve
//! that binds coordinates to constant momenta, the constant-coordinate
//! relations with their constancy obligations, per-monomial coefficient
//! matching, and the end-to-end reduction pipeline.

use super::ansatz::{generate_even_ansatz, HJAnsatz};
use super::HjError;
use crate::mechanics::{legendre, CanonicalSystem, DeriveConvention, ElSign};
use crate::model::ModelSpec;
use crate::poly::{GrassmannPoly, MonomialEquation};
use crate::scalar::ScalarExpr;
use crate::symbols::{OddSymbolTable, SymbolRole};
use std::collections::BTreeMap;
use std::sync::Arc;

/// One constant-coordinate equation ∂F/∂ρ − β = 0 before reduction.
pub struct OddConstantEq {
    pub name: String,
    pub beta_index: usize,
    pub poly: GrassmannPoly,
}

/// The assembled equation families for one model.
pub struct HJSystem {
    pub table: Arc<OddSymbolTable>,
    pub ansatz: HJAnsatz,
    /// Coefficient time derivatives of F plus the Hamiltonian with momenta
    /// eliminated through ∂F/∂ψ.
    pub hj_pde: GrassmannPoly,
    /// Per fermion: ∂F/∂ψ_α minus the momentum expression f^α.
    pub constraint_eqs: Vec<(String, GrassmannPoly)>,
    pub odd_constant_eqs: Vec<OddConstantEq>,
    /// Count of even constant equations (zero for purely fermionic models).
    pub even_constant_count: usize,
    pub convention: DeriveConvention,
    pub el_sign: ElSign,
}

/// A solved constant-coordinate relation β = (coefficients)·ρ-monomials,
/// with the time-independence obligations on its coefficients.
pub struct ConstantRelation {
    pub name: String,
    pub beta_index: usize,
    pub rhs: GrassmannPoly,
    pub obligations: Vec<Obligation>,
}

/// A scalar expression that must vanish for the candidate coefficients to
/// describe genuine constants.
pub struct Obligation {
    pub label: String,
    pub expr: ScalarExpr,
}

/// Everything the reduction pipeline produces for one model.
pub struct ReducedSystem {
    pub system: HJSystem,
    /// Coordinate symbol index → polynomial in the constant momenta.
    pub bindings: BTreeMap<usize, GrassmannPoly>,
    pub relations: Vec<ConstantRelation>,
    pub matched: Vec<MonomialEquation>,
    pub pinned_zero: Vec<String>,
    pub free_constants_before: usize,
    pub free_constants_after: usize,
}

fn conv_derive(
    poly: &GrassmannPoly,
    index: usize,
    convention: DeriveConvention,
) -> GrassmannPoly {
    match convention {
        DeriveConvention::Left => poly.derive_left(index),
        DeriveConvention::Right => poly.derive_right(index),
    }
}

/// Instantiate the equation families with the ansatz substituted. The
/// evolution equation uses the Hamiltonian with every odd-content monomial
/// sign-flipped when the equations of motion carry the flipped potential
/// sign, keeping the two routes to the trajectories consistent.
pub fn assemble_hj_system(
    spec: &ModelSpec,
    canon: &CanonicalSystem,
    ansatz: HJAnsatz,
    convention: DeriveConvention,
    el_sign: ElSign,
) -> Result<HJSystem, HjError> {
    if !spec.bosons.is_empty() {
        return Err(HjError::BosonsUnsupported);
    }
    let mu = ansatz.mu;
    let table = Arc::clone(&ansatz.table);
    let mech = &canon.table;
    // mechanics coordinates land on the ansatz coordinate slots
    let mut coord_map = BTreeMap::new();
    for g in 0..mu {
        let from = mech
            .index_in_group(g, SymbolRole::Coordinate)
            .expect("coordinate per group");
        coord_map.insert(from, ansatz.psi_index(g));
    }
    let df_dpsi: Vec<GrassmannPoly> =
        (0..mu).map(|g| conv_derive(&ansatz.poly, ansatz.psi_index(g), convention)).collect();
    let mut constraint_eqs = Vec::with_capacity(mu);
    for (g, (name, f)) in canon.fermion_momenta.iter().enumerate() {
        let f_mapped = f.remap(&table, &coord_map)?;
        let variable = name.strip_prefix("pi_").unwrap_or(name).to_string();
        constraint_eqs.push((variable, df_dpsi[g].sub(&f_mapped)?));
    }
    // Hamiltonian with coordinates mapped and momenta replaced by ∂F/∂ψ;
    // odd-content monomials flip sign under the Minus equation convention.
    let mut h_conv = GrassmannPoly::zero(&table);
    for (mask, coeff) in canon.hamiltonian.terms() {
        let mut c = coeff.clone();
        if el_sign == ElSign::Minus && *mask != 0 {
            c = c.neg();
        }
        let mut term = GrassmannPoly::scalar(&table, c);
        for idx in crate::algebra::mask_indices(*mask) {
            let factor = match mech.role(idx) {
                SymbolRole::Coordinate => {
                    GrassmannPoly::symbol(&table, coord_map[&idx])
                }
                SymbolRole::Momentum => {
                    let g = mech.group(idx).expect("momentum group");
                    df_dpsi[g].clone()
                }
                _ => {
                    return Err(HjError::UnexpectedSymbol {
                        name: mech.name(idx).into(),
                        place: "the Hamiltonian",
                    })
                }
            };
            term = term.mul(&factor)?;
        }
        h_conv = h_conv.add(&term)?;
    }
    let hj_pde = ansatz.poly.time_derivative_coeffs().add(&h_conv)?;
    let mut odd_constant_eqs = Vec::with_capacity(mu);
    for g in 0..mu {
        let beta_index = ansatz.beta_index(g);
        let df_drho = conv_derive(&ansatz.poly, ansatz.rho_index(g), convention);
        let eq = df_drho.sub(&GrassmannPoly::symbol(&table, beta_index))?;
        odd_constant_eqs.push(OddConstantEq {
            name: table.name(beta_index).to_string(),
            beta_index,
            poly: eq,
        });
    }
    Ok(HJSystem {
        table,
        ansatz,
        hj_pde,
        constraint_eqs,
        odd_constant_eqs,
        even_constant_count: 0,
        convention,
        el_sign,
    })
}

/// Solve the constraint equations for the coordinates. The equations must
/// be linear in the coordinates with coefficients that are even in the
/// constant momenta; Gauss-Jordan elimination over that commutative
/// subalgebra yields explicit bindings ψ_α → polynomial in ρ.
pub fn solve_constraints_for_psi(
    sys: &HJSystem,
) -> Result<BTreeMap<usize, GrassmannPoly>, HjError> {
    let table = &sys.table;
    let coords = table.indices_with_role(SymbolRole::Coordinate);
    let mu = coords.len();
    let coord_mask: u64 = coords.iter().map(|i| 1u64 << i).sum();
    let mut matrix: Vec<Vec<GrassmannPoly>> = Vec::with_capacity(mu);
    let mut rhs: Vec<GrassmannPoly> = Vec::with_capacity(mu);
    for (name, eq) in &sys.constraint_eqs {
        for mask in eq.terms().keys() {
            if (mask & coord_mask).count_ones() > 1 {
                return Err(HjError::NotLinearInCoordinates { equation: name.clone() });
            }
        }
        let mut row = Vec::with_capacity(mu);
        for &c in &coords {
            row.push(eq.derive_right(c));
        }
        let mut remainder = GrassmannPoly::zero(table);
        for (mask, coeff) in eq.terms() {
            if mask & coord_mask == 0 {
                remainder = remainder
                    .add(&GrassmannPoly::from_term(
                        table,
                        coeff.clone(),
                        &crate::algebra::mask_indices(*mask),
                    ))
                    .expect("same table");
            }
        }
        matrix.push(row);
        rhs.push(remainder.neg());
    }
    // Gauss-Jordan over the even (commutative) subalgebra
    for col in 0..mu {
        let pivot = (col..mu)
            .find(|&r| !matrix[r][col].coefficient(0).simplify().is_zero())
            .ok_or_else(|| HjError::SecondClassFailure {
                symbol: table.name(coords[col]).to_string(),
            })?;
        matrix.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = matrix[col][col]
            .invert_even()
            .map_err(|_| HjError::SecondClassFailure {
                symbol: table.name(coords[col]).to_string(),
            })?;
        for j in 0..mu {
            matrix[col][j] = inv.mul(&matrix[col][j])?;
        }
        rhs[col] = inv.mul(&rhs[col])?;
        for row in 0..mu {
            if row != col && !matrix[row][col].is_zero() {
                let factor = matrix[row][col].clone();
                for j in 0..mu {
                    let sub = factor.mul(&matrix[col][j])?;
                    matrix[row][j] = matrix[row][j].sub(&sub)?;
                }
                let sub = factor.mul(&rhs[col])?;
                rhs[row] = rhs[row].sub(&sub)?;
            }
        }
    }
    let rho_mask: u64 = table
        .indices_with_role(SymbolRole::ConstMomentum)
        .iter()
        .map(|i| 1u64 << i)
        .sum();
    let mut bindings = BTreeMap::new();
    for (j, &c) in coords.iter().enumerate() {
        for mask in rhs[j].terms().keys() {
            if mask & !rho_mask != 0 {
                return Err(HjError::UnexpectedSymbol {
                    name: table.name(c).to_string(),
                    place: "a solved coordinate binding",
                });
            }
        }
        bindings.insert(c, rhs[j].clone());
    }
    Ok(bindings)
}

/// Substitute the coordinate bindings into the constant-coordinate
/// equations, producing β_α as a polynomial in the constant momenta, and
/// record the time-independence obligations on its coefficients.
pub fn constant_relations(
    sys: &HJSystem,
    bindings: &BTreeMap<usize, GrassmannPoly>,
) -> Result<Vec<ConstantRelation>, HjError> {
    let table = &sys.table;
    let mut relations = Vec::with_capacity(sys.odd_constant_eqs.len());
    for eq in &sys.odd_constant_eqs {
        let substituted = eq.poly.substitute_odd(bindings)?;
        let rhs = substituted.add(&GrassmannPoly::symbol(table, eq.beta_index))?;
        let mut obligations = Vec::new();
        for (mask, coeff) in rhs.terms() {
            let monomial: Vec<String> = crate::algebra::mask_indices(*mask)
                .into_iter()
                .map(|i| table.name(i).to_string())
                .collect();
            let label = if monomial.is_empty() {
                format!("d/dt[{}]", eq.name)
            } else {
                format!("d/dt[{} @ {}]", eq.name, monomial.join("*"))
            };
            obligations.push(Obligation {
                label,
                expr: coeff.time_derivative().simplify(),
            });
        }
        relations.push(ConstantRelation {
            name: eq.name.clone(),
            beta_index: eq.beta_index,
            rhs,
            obligations,
        });
    }
    Ok(relations)
}

/// Substitute the bindings into the evolution equation AFTER its coefficient
/// time derivatives were taken, then emit one scalar equation per surviving
/// monomial. The substitution order matters: the time derivative must not
/// act through the bindings' time dependence.
pub fn match_hj_coefficients(
    sys: &HJSystem,
    bindings: &BTreeMap<usize, GrassmannPoly>,
) -> Result<Vec<MonomialEquation>, HjError> {
    let bound = sys.hj_pde.substitute_odd(bindings)?;
    let zero = GrassmannPoly::zero(&sys.table);
    let mut eqs = bound.match_against(&zero)?;
    for eq in &mut eqs {
        eq.expr = eq.expr.simplify();
    }
    eqs.retain(|eq| !eq.expr.is_zero());
    Ok(eqs)
}

/// Run the full reduction pipeline: generate the ansatz (optionally with the
/// mixed bilinears pinned to zero), assemble the equation families, solve
/// the constraints, derive the constant relations, and match coefficients.
pub fn reduce(
    spec: &ModelSpec,
    convention: DeriveConvention,
    el_sign: ElSign,
    pin_cross: bool,
) -> Result<ReducedSystem, HjError> {
    let canon = legendre(spec, convention)?;
    let mut ansatz = generate_even_ansatz(spec)?;
    if pin_cross {
        ansatz = ansatz.pin_cross_terms();
    }
    let pinned_zero = ansatz.pinned.clone();
    let mu = ansatz.mu;
    let system = assemble_hj_system(spec, &canon, ansatz, convention, el_sign)?;
    let bindings = solve_constraints_for_psi(&system)?;
    let relations = constant_relations(&system, &bindings)?;
    let matched = match_hj_coefficients(&system, &bindings)?;
    Ok(ReducedSystem {
        system,
        bindings,
        relations,
        matched,
        pinned_zero,
        free_constants_before: 2 * mu,
        free_constants_after: mu,
    })
}

/// The generating function with the coordinate bindings applied (its
/// ρ-monomial form), and for two-fermion systems also the coefficient of
/// the ψ-bilinear form obtained by inverting the binding product.
pub struct HpfReduction {
    pub rho_form: GrassmannPoly,
    /// Coefficient of ψ1ψ2 when the reduced function is re-expressed over
    /// the coordinate bilinear; only available for μ = 2.
    pub psi_form_coeff: Option<ScalarExpr>,
}

pub fn reduce_hpf(reduced: &ReducedSystem) -> Result<HpfReduction, HjError> {
    let sys = &reduced.system;
    let rho_form = sys.ansatz.poly.substitute_odd(&reduced.bindings)?;
    let mu = sys.ansatz.mu;
    let psi_form_coeff = if mu == 2 {
        let p1 = &reduced.bindings[&sys.ansatz.psi_index(0)];
        let p2 = &reduced.bindings[&sys.ansatz.psi_index(1)];
        let product = p1.mul(p2)?;
        let rho_pair_mask = (1u64 << sys.ansatz.rho_index(0)) | (1u64 << sys.ansatz.rho_index(1));
        let w = product.coefficient(rho_pair_mask).simplify();
        let u_general = rho_form.coefficient(rho_pair_mask).simplify();
        if w.is_zero() {
            None
        } else {
            Some(u_general.div(w).simplify())
        }
    } else {
        None
    };
    Ok(HpfReduction { rho_form, psi_form_coeff })
}
