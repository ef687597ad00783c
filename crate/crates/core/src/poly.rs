//! Grassmann polynomials over the odd symbols of an [`OddSymbolTable`], with
//! symbolic scalar coefficients. This is the representation in which
//! equations of motion are derived, generating-function equation systems are
//! assembled, and coefficient matching happens.

use crate::algebra::{canonical_mask, mask_indices, mul_sign, GrassmannElement, Parity};
use crate::scalar::{EvalError, ScalarEnv, ScalarExpr};
use crate::symbols::OddSymbolTable;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("polynomials built over different symbol tables")]
    TableMismatch,
    #[error("unknown odd symbol `{name}`")]
    UnknownSymbol { name: String },
    #[error("binding for odd symbol `{symbol}` is not odd-parity")]
    ParityViolatingBinding { symbol: String },
    #[error("total time derivative needs a derivative partner for `{symbol}`")]
    MissingDerivativePartner { symbol: String },
    #[error("polynomial is not even, cannot invert")]
    NotEvenForInversion,
    #[error("structurally zero scalar part, polynomial not invertible")]
    NotInvertiblePoly,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Algebra(#[from] crate::algebra::AlgebraError),
}

/// One scalar equation produced by monomial matching: `expr = 0` as the
/// coefficient of the named odd monomial.
#[derive(Debug, Clone)]
pub struct MonomialEquation {
    pub mask: u64,
    pub monomial: Vec<String>,
    pub expr: ScalarExpr,
}

impl MonomialEquation {
    pub fn label(&self) -> String {
        if self.monomial.is_empty() {
            "1".to_string()
        } else {
            self.monomial.join("*")
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrassmannPoly {
    table: Arc<OddSymbolTable>,
    terms: BTreeMap<u64, ScalarExpr>,
}

impl GrassmannPoly {
    pub fn zero(table: &Arc<OddSymbolTable>) -> Self {
        Self { table: Arc::clone(table), terms: BTreeMap::new() }
    }

    pub fn scalar(table: &Arc<OddSymbolTable>, expr: ScalarExpr) -> Self {
        let mut p = Self::zero(table);
        p.accumulate(0, expr);
        p
    }

    pub fn symbol(table: &Arc<OddSymbolTable>, index: usize) -> Self {
        let mut p = Self::zero(table);
        p.accumulate(1u64 << index, ScalarExpr::one());
        p
    }

    pub fn from_term(table: &Arc<OddSymbolTable>, coeff: ScalarExpr, indices: &[usize]) -> Self {
        let mut p = Self::zero(table);
        match canonical_mask(indices) {
            Some((mask, sign)) => {
                let c = if sign < 0.0 { coeff.neg() } else { coeff };
                p.accumulate(mask, c);
            }
            None => {} // repeated symbol: identically zero
        }
        p
    }

    pub fn table(&self) -> &Arc<OddSymbolTable> {
        &self.table
    }

    pub fn terms(&self) -> &BTreeMap<u64, ScalarExpr> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: u64) -> ScalarExpr {
        self.terms.get(&mask).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for mask in self.terms.keys() {
            if mask.count_ones() % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (true, true) => Parity::Mixed,
            (false, true) => Parity::Odd,
            _ => Parity::Even,
        }
    }

    fn accumulate(&mut self, mask: u64, expr: ScalarExpr) {
        if expr.is_zero() {
            return;
        }
        let entry = self.terms.entry(mask).or_insert_with(ScalarExpr::zero);
        *entry = entry.clone().add(expr);
        if entry.is_zero() {
            self.terms.remove(&mask);
        }
    }

    fn check_table(&self, other: &Self) -> Result<(), PolyError> {
        if Arc::ptr_eq(&self.table, &other.table)
            || self.table.basis().describe() == other.table.basis().describe()
        {
            Ok(())
        } else {
            Err(PolyError::TableMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (mask, expr) in &other.terms {
            out.accumulate(*mask, expr.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|e| e.clone().neg())
    }

    pub fn scale(&self, factor: &ScalarExpr) -> Self {
        self.map_coeffs(|e| e.clone().mul(factor.clone()))
    }

    /// Apply a scalar transformation to every coefficient, dropping terms
    /// that become structurally zero.
    pub fn map_coeffs(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> Self {
        let mut out = Self::zero(&self.table);
        for (mask, expr) in &self.terms {
            out.accumulate(*mask, f(expr));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_table(other)?;
        let mut out = Self::zero(&self.table);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue; // repeated generator
                }
                let sign = mul_sign(*ma, *mb);
                let mut c = ca.clone().mul(cb.clone());
                if sign < 0.0 {
                    c = c.neg();
                }
                out.accumulate(ma | mb, c);
            }
        }
        Ok(out)
    }

    /// Left graded derivative with respect to the symbol at `index`.
    pub fn derive_left(&self, index: usize) -> Self {
        let bit = 1u64 << index;
        let mut out = Self::zero(&self.table);
        for (mask, expr) in &self.terms {
            if mask & bit == 0 {
                continue;
            }
            let position = (mask & (bit - 1)).count_ones();
            let c = if position % 2 == 1 { expr.clone().neg() } else { expr.clone() };
            out.accumulate(mask & !bit, c);
        }
        out
    }

    /// Right graded derivative with respect to the symbol at `index`.
    pub fn derive_right(&self, index: usize) -> Self {
        let bit = 1u64 << index;
        let mut out = Self::zero(&self.table);
        for (mask, expr) in &self.terms {
            if mask & bit == 0 {
                continue;
            }
            let after = (mask >> (index + 1)).count_ones();
            let c = if after % 2 == 1 { expr.clone().neg() } else { expr.clone() };
            out.accumulate(mask & !bit, c);
        }
        out
    }

    /// Partial time derivative acting on scalar coefficients only; odd
    /// symbols are untouched.
    pub fn time_derivative_coeffs(&self) -> Self {
        self.map_coeffs(|e| e.time_derivative())
    }

    /// Total time derivative: coefficient time derivatives plus promotion of
    /// each odd symbol to its derivative partner (an even derivation, so the
    /// promoted symbol keeps its position before re-canonicalization).
    pub fn total_time_derivative(
        &self,
        dot_map: &BTreeMap<usize, usize>,
    ) -> Result<Self, PolyError> {
        let mut out = self.time_derivative_coeffs();
        for (mask, expr) in &self.terms {
            let indices = mask_indices(*mask);
            for (p, &idx) in indices.iter().enumerate() {
                let dot = *dot_map.get(&idx).ok_or_else(|| {
                    PolyError::MissingDerivativePartner { symbol: self.table.name(idx).into() }
                })?;
                let mut promoted = indices.clone();
                promoted[p] = dot;
                if let Some((new_mask, sign)) = canonical_mask(&promoted) {
                    let c = if sign < 0.0 { expr.clone().neg() } else { expr.clone() };
                    out.accumulate(new_mask, c);
                }
            }
        }
        Ok(out)
    }

    /// Substitute odd symbols by odd polynomials over the same table.
    /// Unbound symbols stay as themselves.
    pub fn substitute_odd(
        &self,
        bindings: &BTreeMap<usize, GrassmannPoly>,
    ) -> Result<Self, PolyError> {
        for (idx, b) in bindings {
            self.check_table(b)?;
            if b.parity() == Parity::Even && !b.is_zero() || b.parity() == Parity::Mixed {
                return Err(PolyError::ParityViolatingBinding {
                    symbol: self.table.name(*idx).into(),
                });
            }
        }
        let mut out = Self::zero(&self.table);
        for (mask, expr) in &self.terms {
            let mut product = Self::scalar(&self.table, expr.clone());
            for idx in mask_indices(*mask) {
                let factor = match bindings.get(&idx) {
                    Some(b) => b.clone(),
                    None => Self::symbol(&self.table, idx),
                };
                product = product.mul(&factor)?;
            }
            out = out.add(&product)?;
        }
        Ok(out)
    }

    /// Rebuild the polynomial over another table, translating symbol indices
    /// through `index_map`.
    pub fn remap(
        &self,
        target: &Arc<OddSymbolTable>,
        index_map: &BTreeMap<usize, usize>,
    ) -> Result<Self, PolyError> {
        let mut out = Self::zero(target);
        for (mask, expr) in &self.terms {
            let mut mapped = Vec::new();
            for idx in mask_indices(*mask) {
                let t = *index_map
                    .get(&idx)
                    .ok_or_else(|| PolyError::UnknownSymbol { name: self.table.name(idx).into() })?;
                mapped.push(t);
            }
            if let Some((new_mask, sign)) = canonical_mask(&mapped) {
                let c = if sign < 0.0 { expr.clone().neg() } else { expr.clone() };
                out.accumulate(new_mask, c);
            }
        }
        Ok(out)
    }

    /// Graded anti-automorphism: conjugate coefficients (leaving conjugation
    /// markers for the caller to resolve against declared reality data),
    /// reverse each monomial, and map symbols through the table pairing.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero(&self.table);
        for (mask, expr) in &self.terms {
            let mut sign = 1.0;
            let mut reversed: Vec<usize> = Vec::new();
            for idx in mask_indices(*mask).into_iter().rev() {
                let target = self.table.conj_target(idx);
                sign *= target.sign;
                reversed.push(target.index);
            }
            if let Some((new_mask, perm_sign)) = canonical_mask(&reversed) {
                let mut c = expr.clone().conj();
                if sign * perm_sign < 0.0 {
                    c = c.neg();
                }
                out.accumulate(new_mask, c);
            }
        }
        out
    }

    /// Per-monomial scalar equations of `self − other = 0`; empty iff the
    /// two polynomials are structurally equal.
    pub fn match_against(&self, other: &Self) -> Result<Vec<MonomialEquation>, PolyError> {
        let diff = self.sub(other)?;
        Ok(diff
            .terms
            .iter()
            .map(|(mask, expr)| MonomialEquation {
                mask: *mask,
                monomial: mask_indices(*mask)
                    .into_iter()
                    .map(|i| self.table.name(i).to_string())
                    .collect(),
                expr: expr.clone(),
            })
            .collect())
    }

    /// Symbolic inverse of an even polynomial with structurally nonzero
    /// scalar part: the finite geometric series in the nilpotent part, with
    /// division represented by quotient nodes on the coefficients.
    pub fn invert_even(&self) -> Result<Self, PolyError> {
        if self.parity() != Parity::Even {
            return Err(PolyError::NotEvenForInversion);
        }
        let c0 = self.coefficient(0);
        if c0.is_zero() {
            return Err(PolyError::NotInvertiblePoly);
        }
        let mut nil = self.clone();
        nil.terms.remove(&0);
        // 1/(c0 + n) = sum_k (−1)^k n^k / c0^{k+1}
        let mut out = Self::scalar(&self.table, ScalarExpr::one().div(c0.clone()));
        let mut power = Self::scalar(&self.table, ScalarExpr::one());
        let mut k = 0usize;
        loop {
            power = power.mul(&nil)?;
            k += 1;
            if power.is_zero() || k > self.table.len() {
                break;
            }
            let sign = if k % 2 == 1 { ScalarExpr::real(-1.0) } else { ScalarExpr::one() };
            let factor = sign.div(c0.clone().pow(k as i32 + 1));
            out = out.add(&power.scale(&factor))?;
        }
        Ok(out)
    }

    /// Numeric instantiation: evaluate every coefficient in `env` at time
    /// `t`, producing an exact element over the table's generator basis.
    pub fn to_element(&self, env: &ScalarEnv, t: f64) -> Result<GrassmannElement, PolyError> {
        let basis = self.table.basis();
        let mut element = GrassmannElement::zero(Arc::clone(basis));
        for (mask, expr) in &self.terms {
            let value = expr.eval(env, t)?;
            let term = GrassmannElement::from_term(Arc::clone(basis), &mask_indices(*mask), value)?;
            element = element.add(&term)?;
        }
        Ok(element)
    }

    /// Deterministic text rendering, terms ordered by degree then mask.
    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<u64> = self.terms.keys().copied().collect();
        keys.sort_by_key(|m| (m.count_ones(), *m));
        let mut out = String::new();
        for (i, mask) in keys.iter().enumerate() {
            let expr = &self.terms[mask];
            let names: Vec<String> = mask_indices(*mask)
                .into_iter()
                .map(|j| self.table.name(j).to_string())
                .collect();
            let term = render_term(expr, &names);
            if i == 0 {
                out.push_str(&term);
            } else if let Some(rest) = term.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(&term);
            }
        }
        out
    }
}

fn render_term(expr: &ScalarExpr, names: &[String]) -> String {
    let monomial = names.join("*");
    if names.is_empty() {
        return expr.display();
    }
    if expr.is_one() {
        return monomial;
    }
    if let Some(c) = expr.as_literal() {
        if c == Complex64::new(-1.0, 0.0) {
            return format!("-{monomial}");
        }
    }
    let coeff = expr.display();
    let needs_parens = matches!(
        expr,
        ScalarExpr::Add(_) | ScalarExpr::Div(..)
    ) || (coeff.contains('+') || coeff.contains(' '));
    if needs_parens && !(coeff.starts_with('(') && coeff.ends_with(')')) {
        format!("({coeff})*{monomial}")
    } else {
        format!("{coeff}*{monomial}")
    }
}
