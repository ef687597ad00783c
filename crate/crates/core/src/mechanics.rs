//! Lagrangian mechanics over a parsed model: Euler-Lagrange equations,
//! canonical momenta, second-class constraints, the canonical Hamiltonian and
//! the endpoint boundary term fixed by the kinetic metric.

use crate::algebra::mask_indices;
use crate::model::ModelSpec;
use crate::poly::{GrassmannPoly, PolyError};
use crate::scalar::ScalarExpr;
use crate::symbols::{endpoint_table, OddSymbolTable, SymbolRole};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Which graded derivative acts on odd variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeriveConvention {
    #[default]
    Left,
    Right,
}

/// Relative sign of the velocity-free part of the coordinate derivative in
/// the fermionic Euler-Lagrange assembly. The two choices produce equations
/// differing by the sign of the potential; `Minus` is the calibrated default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElSign {
    Plus,
    #[default]
    Minus,
}

#[derive(Debug, thiserror::Error)]
pub enum MechError {
    #[error("momentum for `{name}` depends on a velocity; model is not first order")]
    VelocityDependentMomentum { name: String },
    #[error("cannot solve the bosonic kinetic form for the velocity of `{name}`")]
    NonInvertibleKinetic { name: String },
    #[error("velocity terms failed to cancel in the Hamiltonian assembly")]
    ResidualVelocityInHamiltonian,
    #[error("no kinetic metric was recognized; the boundary term is defined by one")]
    NoKineticMetric,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Algebra(#[from] crate::algebra::AlgebraError),
}

/// One equation of motion, normalized so the leading velocity coefficient is
/// the imaginary unit (purely imaginary case) or one (otherwise), together
/// with the raw assembled form.
#[derive(Debug, Clone)]
pub struct ElEquation {
    pub variable: String,
    pub is_fermionic: bool,
    /// Assembled equation before normalization.
    pub raw: GrassmannPoly,
    /// Normalized equation; equal to `raw` when no literal leading velocity
    /// coefficient exists to scale by.
    pub lhs: GrassmannPoly,
}

/// Momenta, constraints, Hamiltonian and bookkeeping from the Legendre
/// transform.
#[derive(Debug, Clone)]
pub struct CanonicalSystem {
    pub table: Arc<OddSymbolTable>,
    /// Per fermion, the velocity-free polynomial f with momentum = f.
    pub fermion_momenta: Vec<(String, GrassmannPoly)>,
    /// Second-class primary constraints: momentum symbol minus f.
    pub constraints: Vec<GrassmannPoly>,
    /// Per boson, the momentum expression in coordinates and velocities.
    pub boson_momenta: Vec<(String, ScalarExpr)>,
    /// Canonical Hamiltonian with bosonic velocities eliminated; fermionic
    /// velocity terms cancel structurally.
    pub hamiltonian: GrassmannPoly,
    pub h_independent_of_fermionic_momenta: bool,
}

fn graded_derivative(
    poly: &GrassmannPoly,
    index: usize,
    convention: DeriveConvention,
) -> GrassmannPoly {
    match convention {
        DeriveConvention::Left => poly.derive_left(index),
        DeriveConvention::Right => poly.derive_right(index),
    }
}

/// Split a polynomial into (terms containing at least one fermionic velocity
/// symbol, velocity-free terms).
fn split_by_velocity(poly: &GrassmannPoly) -> (GrassmannPoly, GrassmannPoly) {
    let table = poly.table();
    let mut with_vel = GrassmannPoly::zero(table);
    let mut without = GrassmannPoly::zero(table);
    for (mask, coeff) in poly.terms() {
        let has_velocity =
            mask_indices(*mask).iter().any(|&i| table.role(i) == SymbolRole::Velocity);
        let piece = GrassmannPoly::from_term(table, coeff.clone(), &mask_indices(*mask));
        if has_velocity {
            with_vel = with_vel.add(&piece).expect("same table");
        } else {
            without = without.add(&piece).expect("same table");
        }
    }
    (with_vel, without)
}

/// Scale an equation so its leading (lowest-index) single-velocity monomial
/// gets coefficient i when the current coefficient is purely imaginary, or 1
/// otherwise. Returns the input unchanged when no literal velocity
/// coefficient exists.
fn normalize_fermionic(eq: &GrassmannPoly) -> GrassmannPoly {
    let table = eq.table();
    for i in 0..table.len() {
        if table.role(i) != SymbolRole::Velocity {
            continue;
        }
        let coeff = eq.coefficient(1u64 << i);
        if let Some(c) = coeff.simplify().as_literal() {
            if c.norm() <= 1e-14 {
                continue;
            }
            let target = if c.re.abs() <= 1e-12 * c.norm() {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(1.0, 0.0)
            };
            return eq.scale(&ScalarExpr::lit(target / c));
        }
    }
    eq.clone()
}

fn normalize_bosonic(eq: &GrassmannPoly, name: &str) -> GrassmannPoly {
    let accel = eq.coefficient(0).derive_func(name, 2).simplify();
    if let Some(c) = accel.as_literal() {
        if c.norm() > 1e-14 {
            return eq.scale(&ScalarExpr::lit(Complex64::new(1.0, 0.0) / c));
        }
    }
    eq.clone()
}

/// Euler-Lagrange equations, one per declared coordinate (fermions first,
/// then bosons), each as a polynomial equal to zero.
pub fn euler_lagrange(
    spec: &ModelSpec,
    convention: DeriveConvention,
    el_sign: ElSign,
) -> Result<Vec<ElEquation>, MechError> {
    let table = &spec.table;
    let lagr = &spec.lagrangian;
    let dots = table.velocity_map();
    let mut equations = Vec::new();
    for (g, fermion) in spec.fermions.iter().enumerate() {
        let coord = table.index_in_group(g, SymbolRole::Coordinate).expect("coordinate");
        let vel = table.index_in_group(g, SymbolRole::Velocity).expect("velocity");
        let momentum = graded_derivative(lagr, vel, convention);
        let momentum_dot = momentum.total_time_derivative(&dots)?;
        let coord_deriv = graded_derivative(lagr, coord, convention);
        let (d_vel, d_pot) = split_by_velocity(&coord_deriv);
        let potential_part = match el_sign {
            ElSign::Plus => d_pot.neg(),
            ElSign::Minus => d_pot,
        };
        let raw = momentum_dot.sub(&d_vel)?.add(&potential_part)?;
        let lhs = normalize_fermionic(&raw);
        equations.push(ElEquation {
            variable: fermion.name.clone(),
            is_fermionic: true,
            raw,
            lhs,
        });
    }
    for boson in &spec.bosons {
        let momentum = lagr.map_coeffs(|e| e.derive_func(boson, 1));
        let momentum_dot = momentum.total_time_derivative(&dots)?;
        let coord_deriv = lagr.map_coeffs(|e| e.derive_func(boson, 0));
        let raw = momentum_dot.sub(&coord_deriv)?;
        let lhs = normalize_bosonic(&raw, boson);
        equations.push(ElEquation {
            variable: boson.clone(),
            is_fermionic: false,
            raw,
            lhs,
        });
    }
    Ok(equations)
}

/// Momentum symbol name for a bosonic coordinate.
pub fn boson_momentum_name(name: &str) -> String {
    format!("p_{name}")
}

/// Legendre transform: momenta, constraints and the canonical Hamiltonian.
pub fn legendre(
    spec: &ModelSpec,
    convention: DeriveConvention,
) -> Result<CanonicalSystem, MechError> {
    let table = &spec.table;
    let lagr = &spec.lagrangian;

    let mut fermion_momenta = Vec::new();
    let mut constraints = Vec::new();
    // velocity * momentum summed over fermions, with momenta already replaced
    // by their velocity-free expressions.
    let mut fermionic_legendre = GrassmannPoly::zero(table);
    for (g, fermion) in spec.fermions.iter().enumerate() {
        let vel = table.index_in_group(g, SymbolRole::Velocity).expect("velocity");
        let mom = table.index_in_group(g, SymbolRole::Momentum).expect("momentum");
        let f = graded_derivative(lagr, vel, convention);
        let velocity_free = f
            .terms()
            .keys()
            .all(|m| mask_indices(*m).iter().all(|&i| table.role(i) != SymbolRole::Velocity));
        if !velocity_free {
            return Err(MechError::VelocityDependentMomentum { name: fermion.name.clone() });
        }
        let phi = GrassmannPoly::symbol(table, mom).sub(&f)?;
        // With left-derivative momenta, velocity * momentum reproduces the
        // velocity part of the Lagrangian exactly; with right-derivative
        // momenta the product order is reversed.
        let contribution = match convention {
            DeriveConvention::Left => GrassmannPoly::symbol(table, vel).mul(&f)?,
            DeriveConvention::Right => f.mul(&GrassmannPoly::symbol(table, vel))?,
        };
        fermionic_legendre = fermionic_legendre.add(&contribution)?;
        fermion_momenta.push((format!("pi_{}", fermion.name), f));
        constraints.push(phi);
    }

    // Bosonic momenta p = a q-dot + b with literal a and velocity-free b;
    // solve for the velocity.
    let mut boson_momenta = Vec::new();
    let mut velocity_solutions: BTreeMap<String, ScalarExpr> = BTreeMap::new();
    let mut bosonic_legendre = ScalarExpr::zero();
    let lagr_scalar = lagr.coefficient(0);
    for (i, boson) in spec.bosons.iter().enumerate() {
        // A bosonic momentum with fermionic content cannot be solved for the
        // velocity here.
        let p_full = lagr.map_coeffs(|e| e.derive_func(boson, 1));
        if p_full.terms().keys().any(|m| *m != 0) {
            return Err(MechError::NonInvertibleKinetic { name: boson.clone() });
        }
        let p = lagr_scalar.derive_func(boson, 1).simplify();
        for other in spec.bosons.iter().skip(i + 1) {
            let cross = p.derive_func(other, 1).simplify();
            if !cross.is_zero() {
                return Err(MechError::NonInvertibleKinetic { name: boson.clone() });
            }
        }
        if p.is_zero() {
            continue;
        }
        let a = p.derive_func(boson, 1).simplify();
        let Some(a_lit) = a.as_literal() else {
            return Err(MechError::NonInvertibleKinetic { name: boson.clone() });
        };
        if a_lit.norm() <= 1e-14 {
            return Err(MechError::NonInvertibleKinetic { name: boson.clone() });
        }
        let zero_vel = |e: &ScalarExpr| match e {
            ScalarExpr::Func { name, order } if *order == 1 && spec.bosons.contains(name) => {
                Some(ScalarExpr::zero())
            }
            _ => None,
        };
        let b = p.substitute(&zero_vel).simplify();
        let p_sym = ScalarExpr::sym(&boson_momentum_name(boson));
        let solved = p_sym.clone().sub(b).mul(ScalarExpr::lit(
            Complex64::new(1.0, 0.0) / a_lit,
        ));
        velocity_solutions.insert(boson.clone(), solved);
        bosonic_legendre = bosonic_legendre
            .add(ScalarExpr::func_order(boson, 1).mul(p_sym));
        boson_momenta.push((boson_momentum_name(boson), p));
    }

    let mut h = fermionic_legendre
        .add(&GrassmannPoly::scalar(table, bosonic_legendre))?
        .sub(lagr)?;
    // Fermionic velocity terms must cancel structurally.
    let (residual, _) = split_by_velocity(&h);
    if !residual.is_zero() {
        return Err(MechError::ResidualVelocityInHamiltonian);
    }
    // Eliminate bosonic velocities in favor of momenta.
    let rules = |e: &ScalarExpr| match e {
        ScalarExpr::Func { name, order } if *order == 1 => {
            velocity_solutions.get(name).cloned()
        }
        _ => None,
    };
    h = h.map_coeffs(|e| e.substitute(&rules).simplify());
    // Any surviving bosonic velocity means the kinetic form was not solvable.
    for boson in &spec.bosons {
        let leftover = h.map_coeffs(|e| e.derive_func(boson, 1).simplify());
        if !leftover.is_zero() {
            return Err(MechError::NonInvertibleKinetic { name: boson.clone() });
        }
    }

    let momentum_indices = table.indices_with_role(SymbolRole::Momentum);
    let h_independent = h
        .terms()
        .keys()
        .all(|m| momentum_indices.iter().all(|&i| m & (1u64 << i) == 0));

    Ok(CanonicalSystem {
        table: Arc::clone(table),
        fermion_momenta,
        constraints,
        boson_momenta,
        hamiltonian: h,
        h_independent_of_fermionic_momenta: h_independent,
    })
}

/// Endpoint boundary term -(i/2) g^{ab} psi_a(t1) psi_b(t2) over duplicated
/// endpoint symbols, defined whenever the kinetic metric was recognized.
pub fn boundary_term(spec: &ModelSpec) -> Result<GrassmannPoly, MechError> {
    if spec.mu() == 0 {
        let table = endpoint_table(&spec.fermions)?;
        return Ok(GrassmannPoly::zero(&table));
    }
    let Some(g) = &spec.kinetic_metric else {
        return Err(MechError::NoKineticMetric);
    };
    let table = endpoint_table(&spec.fermions)?;
    let mu = spec.mu();
    let mut bt = GrassmannPoly::zero(&table);
    for (a, row) in g.iter().enumerate() {
        for (b, &gab) in row.iter().enumerate() {
            if gab == 0.0 {
                continue;
            }
            let coeff = ScalarExpr::lit(Complex64::new(0.0, -0.5 * gab));
            let term = GrassmannPoly::from_term(&table, coeff, &[a, mu + b]);
            bt = bt.add(&term).expect("same table");
        }
    }
    Ok(bt)
}
