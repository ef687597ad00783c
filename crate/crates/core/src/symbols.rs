//! Tables of named odd symbols with roles (coordinate, velocity, momentum,
//! constant momentum, constant coordinate, endpoint value) and a signed
//! conjugation pairing. A table is the index space over which symbolic
//! Grassmann polynomials are built.

use crate::algebra::{AlgebraError, ConjTarget, GeneratorBasis};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SymbolRole {
    /// Dynamical odd coordinate.
    Coordinate,
    /// Time derivative of a coordinate.
    Velocity,
    /// Canonical momentum conjugate to a coordinate.
    Momentum,
    /// Constant odd momentum of the transformed system.
    ConstMomentum,
    /// Constant odd coordinate of the transformed system.
    ConstCoordinate,
    /// Coordinate value at a fixed endpoint time.
    Endpoint,
}

/// Ordered odd symbols with roles, degree-of-freedom grouping and signed
/// conjugation pairing.
#[derive(Debug, Clone)]
pub struct OddSymbolTable {
    basis: Arc<GeneratorBasis>,
    roles: Vec<SymbolRole>,
    /// Degree-of-freedom index linking a coordinate with its velocity,
    /// momentum and constants; None for symbols outside any group.
    groups: Vec<Option<usize>>,
}

impl OddSymbolTable {
    pub fn build(
        symbols: &[(String, SymbolRole, Option<usize>)],
        conj_pairs: &[(usize, usize, f64)],
    ) -> Result<Arc<Self>, AlgebraError> {
        let names: Vec<String> = symbols.iter().map(|(n, _, _)| n.clone()).collect();
        let mut basis = GeneratorBasis::new(names)?;
        for &(a, b, sign) in conj_pairs {
            basis = basis.pair_conjugates(a, b, sign)?;
        }
        Ok(Arc::new(Self {
            basis,
            roles: symbols.iter().map(|(_, r, _)| *r).collect(),
            groups: symbols.iter().map(|(_, _, g)| *g).collect(),
        }))
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        self.basis.name(index)
    }

    pub fn role(&self, index: usize) -> SymbolRole {
        self.roles[index]
    }

    pub fn group(&self, index: usize) -> Option<usize> {
        self.groups[index]
    }

    pub fn conj_target(&self, index: usize) -> ConjTarget {
        self.basis.conj_target(index)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.basis.index_of(name)
    }

    pub fn indices_with_role(&self, role: SymbolRole) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roles[i] == role).collect()
    }

    /// Index of the symbol with `role` in degree-of-freedom group `group`.
    pub fn index_in_group(&self, group: usize, role: SymbolRole) -> Option<usize> {
        (0..self.len()).find(|&i| self.roles[i] == role && self.groups[i] == Some(group))
    }

    /// Map each coordinate symbol to its velocity symbol.
    pub fn velocity_map(&self) -> BTreeMap<usize, usize> {
        let mut map = BTreeMap::new();
        for i in self.indices_with_role(SymbolRole::Coordinate) {
            if let Some(g) = self.groups[i] {
                if let Some(v) = self.index_in_group(g, SymbolRole::Velocity) {
                    map.insert(i, v);
                }
            }
        }
        map
    }
}

/// Declaration of one fermionic degree of freedom: its name and, if its
/// conjugate is another declared variable, that variable's name with the
/// pairing sign.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionInfo {
    pub name: String,
    /// Name of the conjugate variable, if a pairing was declared.
    pub conj: Option<String>,
}

/// Mechanics-phase table: coordinates, then velocities, then momenta, one of
/// each per fermion, in declaration order. Velocities are named `name'` and
/// momenta `pi_name`.
pub fn mechanics_table(fermions: &[FermionInfo]) -> Result<Arc<OddSymbolTable>, AlgebraError> {
    let mu = fermions.len();
    let mut symbols = Vec::with_capacity(3 * mu);
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((f.name.clone(), SymbolRole::Coordinate, Some(g)));
    }
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((format!("{}'", f.name), SymbolRole::Velocity, Some(g)));
    }
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((format!("pi_{}", f.name), SymbolRole::Momentum, Some(g)));
    }
    let pairs = conj_pairs_for(fermions, &[0, mu, 2 * mu], &[1.0, 1.0, 1.0]);
    OddSymbolTable::build(&symbols, &pairs)
}

/// Generating-function-phase table for mu fermions: constant momenta rho,
/// then coordinates psi, then constant coordinates beta. The constants
/// inherit the coordinate pairing: rho with an extra −1 (the reordering
/// sign of the paired bilinear), beta with the same sign.
pub fn hj_table(fermions: &[FermionInfo]) -> Result<Arc<OddSymbolTable>, AlgebraError> {
    let mu = fermions.len();
    let mut symbols = Vec::with_capacity(3 * mu);
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((format!("rho_{}", f.name), SymbolRole::ConstMomentum, Some(g)));
    }
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((f.name.clone(), SymbolRole::Coordinate, Some(g)));
    }
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((format!("beta_{}", f.name), SymbolRole::ConstCoordinate, Some(g)));
    }
    let pairs = conj_pairs_for(fermions, &[0, mu, 2 * mu], &[-1.0, 1.0, 1.0]);
    OddSymbolTable::build(&symbols, &pairs)
}

/// Endpoint table for the boundary term: each fermion duplicated at the two
/// endpoint times, named `name@t1` / `name@t2`.
pub fn endpoint_table(fermions: &[FermionInfo]) -> Result<Arc<OddSymbolTable>, AlgebraError> {
    let mu = fermions.len();
    let mut symbols = Vec::with_capacity(2 * mu);
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((format!("{}@t1", f.name), SymbolRole::Endpoint, Some(g)));
    }
    for (g, f) in fermions.iter().enumerate() {
        symbols.push((format!("{}@t2", f.name), SymbolRole::Endpoint, Some(g)));
    }
    let pairs = conj_pairs_for(fermions, &[0, mu], &[1.0, 1.0]);
    OddSymbolTable::build(&symbols, &pairs)
}

/// Replicate the declared coordinate conjugation pairing at each block
/// offset, with a per-block extra sign.
fn conj_pairs_for(
    fermions: &[FermionInfo],
    offsets: &[usize],
    block_signs: &[f64],
) -> Vec<(usize, usize, f64)> {
    let index_of = |name: &str| fermions.iter().position(|f| f.name == name);
    let mut pairs = Vec::new();
    for (g, f) in fermions.iter().enumerate() {
        if let Some(conj_name) = &f.conj {
            if let Some(h) = index_of(conj_name) {
                if g <= h {
                    for (&off, &sign) in offsets.iter().zip(block_signs) {
                        pairs.push((off + g, off + h, sign));
                    }
                }
            }
        }
    }
    pairs
}
