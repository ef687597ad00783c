//! The general even ansatz: one named coefficient function of time per
//! even monomial in the constant momenta and the coordinates, with reality
//! relations among the coefficients derived from the declared conjugation
//! pairing.

use super::HjError;
use crate::model::ModelSpec;
use crate::poly::GrassmannPoly;
use crate::scalar::{RealityInfo, ScalarExpr};
use crate::symbols::{hj_table, OddSymbolTable, SymbolRole};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Even generating-function ansatz over the constant momenta ρ and the
/// coordinates ψ of a purely fermionic model.
#[derive(Debug, Clone)]
pub struct HJAnsatz {
    pub table: Arc<OddSymbolTable>,
    pub mu: usize,
    /// F as a polynomial whose coefficients are named functions of time.
    pub poly: GrassmannPoly,
    /// Monomial mask → coefficient function name.
    pub coeff_names: BTreeMap<u64, String>,
    /// Model reality data extended with the coefficient relations.
    pub reality: RealityInfo,
    /// Coefficient names forced to zero by `pin_cross_terms`.
    pub pinned: Vec<String>,
}

fn slot_name(mu: usize, mask: u64) -> String {
    if mask == 0 {
        return "s0".into();
    }
    if mu == 1 {
        // only one non-constant even monomial exists: the ρψ bilinear
        return "a".into();
    }
    if mu == 2 {
        match mask {
            0b0011 => return "s01".into(),
            0b0101 => return "s1".into(),
            0b1010 => return "s2".into(),
            0b1100 => return "s30".into(),
            0b1111 => return "s3".into(),
            0b1001 => return "sx12".into(),
            0b0110 => return "sx21".into(),
            _ => {}
        }
    }
    let mut name = String::from("c");
    for g in 0..mu {
        if mask & (1 << g) != 0 {
            name.push_str(&format!("_r{}", g + 1));
        }
    }
    for g in 0..mu {
        if mask & (1 << (mu + g)) != 0 {
            name.push_str(&format!("_p{}", g + 1));
        }
    }
    name
}

/// Enumerate every even monomial in (ρ_1..ρ_μ, ψ_1..ψ_μ) and attach one
/// named coefficient function of time to each. When the model declares a
/// conjugation pairing, the self-conjugacy of the ansatz is recorded as
/// reality relations on the coefficient names.
pub fn generate_even_ansatz(spec: &ModelSpec) -> Result<HJAnsatz, HjError> {
    if !spec.bosons.is_empty() {
        return Err(HjError::BosonsUnsupported);
    }
    let mu = spec.mu();
    let table = hj_table(&spec.fermions)?;
    let mut poly = GrassmannPoly::zero(&table);
    let mut coeff_names = BTreeMap::new();
    for mask in 0..(1u64 << (2 * mu)) {
        if mask.count_ones() % 2 != 0 {
            continue;
        }
        let name = slot_name(mu, mask);
        for (existing, _) in &spec.params {
            if existing == &name {
                return Err(HjError::NameCollision { name });
            }
        }
        let indices: Vec<usize> = (0..2 * mu).filter(|b| mask & (1 << b) != 0).collect();
        poly = poly
            .add(&GrassmannPoly::from_term(
                &table,
                ScalarExpr::func_order(&name, 0),
                &indices,
            ))
            .expect("same table");
        coeff_names.insert(mask, name);
    }
    let mut reality = spec.reality.clone();
    if spec.reality_declared {
        record_reality(&table, &coeff_names, &mut reality)?;
    }
    Ok(HJAnsatz { table, mu, poly, coeff_names, reality, pinned: Vec::new() })
}

/// Derive the coefficient relations that make the ansatz self-conjugate:
/// conjugating a basis monomial lands on ± another basis monomial, so the
/// coefficient of the image must equal ± the conjugate of the original.
fn record_reality(
    table: &Arc<OddSymbolTable>,
    coeff_names: &BTreeMap<u64, String>,
    reality: &mut RealityInfo,
) -> Result<(), HjError> {
    for (&mask, name) in coeff_names {
        let indices: Vec<usize> =
            (0..table.len()).filter(|b| mask & (1 << b) != 0).collect();
        let conj =
            GrassmannPoly::from_term(table, ScalarExpr::one(), &indices).conjugate();
        let (partner_mask, sign_expr) = conj
            .terms()
            .iter()
            .next()
            .map(|(m, e)| (*m, e.clone()))
            .expect("monomial conjugate is a single term");
        let sign = sign_expr
            .simplify()
            .as_literal()
            .map(|c| c.re)
            .unwrap_or(0.0);
        let partner = coeff_names.get(&partner_mask).ok_or_else(|| {
            HjError::UnexpectedSymbol {
                name: format!("{partner_mask:#b}"),
                place: "conjugated ansatz monomial",
            }
        })?;
        if partner_mask == mask {
            if sign > 0.0 {
                reality.mark_real(name);
            }
            // a negative self-pairing would force a purely imaginary
            // coefficient; none of the supported pairings produce one, and
            // leaving the coefficient unconstrained is always sound
        } else if partner_mask > mask && sign > 0.0 {
            reality.pair(name, partner);
        } else if partner_mask > mask {
            return Err(HjError::UnexpectedSymbol {
                name: name.clone(),
                place: "negatively paired ansatz coefficient",
            });
        }
    }
    Ok(())
}

impl HJAnsatz {
    /// Zero out the coefficients of mixed monomials whose constant-momentum
    /// groups differ from their coordinate groups (for μ = 2 these are the
    /// ρ1ψ2 and ρ2ψ1 bilinears). Returns the restricted ansatz with the
    /// removed names recorded.
    pub fn pin_cross_terms(&self) -> Self {
        let mu = self.mu;
        let mut pinned = self.pinned.clone();
        let mut poly = self.poly.clone();
        let mut coeff_names = self.coeff_names.clone();
        for (&mask, name) in &self.coeff_names {
            let rho_groups: u64 = mask & ((1 << mu) - 1);
            let psi_groups: u64 = (mask >> mu) & ((1 << mu) - 1);
            if rho_groups != 0 && psi_groups != 0 && rho_groups != psi_groups {
                poly = poly
                    .sub(&GrassmannPoly::from_term(
                        &self.table,
                        self.poly.coefficient(mask),
                        &(0..2 * mu).filter(|b| mask & (1 << b) != 0).collect::<Vec<_>>(),
                    ))
                    .expect("same table");
                coeff_names.remove(&mask);
                pinned.push(name.clone());
            }
        }
        pinned.sort();
        Self {
            table: Arc::clone(&self.table),
            mu,
            poly,
            coeff_names,
            reality: self.reality.clone(),
            pinned,
        }
    }

    /// Index of coordinate `g` in the table.
    pub fn psi_index(&self, g: usize) -> usize {
        self.mu + g
    }

    /// Index of constant momentum `g` in the table.
    pub fn rho_index(&self, g: usize) -> usize {
        g
    }

    /// Index of constant coordinate `g` in the table.
    pub fn beta_index(&self, g: usize) -> usize {
        2 * self.mu + g
    }

    /// Names of the free odd constants (all ρ and β symbols).
    pub fn odd_constant_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in self.table.indices_with_role(SymbolRole::ConstMomentum) {
            names.push(self.table.name(i).to_string());
        }
        for i in self.table.indices_with_role(SymbolRole::ConstCoordinate) {
            names.push(self.table.name(i).to_string());
        }
        names
    }
}
