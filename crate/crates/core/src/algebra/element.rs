//! Sparse elements of a finite Grassmann algebra with complex coefficients.

use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

use super::basis::{canonical_mask, mask_indices, mul_sign, GeneratorBasis};
use super::{AlgebraError, Parity, PRUNE_TOL};

/// Element of the Grassmann algebra over a [`GeneratorBasis`]: a sparse map
/// from canonical monomials (strictly increasing index sets, stored as
/// bitmasks) to complex coefficients. Coefficients with absolute value below
/// [`PRUNE_TOL`] are dropped after every operation.
#[derive(Debug, Clone)]
pub struct GrassmannElement {
    basis: Arc<GeneratorBasis>,
    terms: BTreeMap<u64, Complex64>,
}

/// One term of the serialized form: generator indices plus the coefficient.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TermRecord {
    pub monomial: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

impl GrassmannElement {
    pub fn zero(basis: Arc<GeneratorBasis>) -> Self {
        Self { basis, terms: BTreeMap::new() }
    }

    pub fn scalar(basis: Arc<GeneratorBasis>, value: Complex64) -> Self {
        let mut e = Self::zero(basis);
        e.accumulate(0, value);
        e
    }

    pub fn one(basis: Arc<GeneratorBasis>) -> Self {
        Self::scalar(basis, Complex64::new(1.0, 0.0))
    }

    pub fn generator(basis: Arc<GeneratorBasis>, index: usize) -> Result<Self, AlgebraError> {
        if index >= basis.len() {
            return Err(AlgebraError::IndexOutOfBounds { index, size: basis.len() });
        }
        let mut e = Self::zero(basis);
        e.accumulate(1u64 << index, Complex64::new(1.0, 0.0));
        Ok(e)
    }

    /// Build `value * g_{i1} g_{i2} ...` from an arbitrarily ordered index
    /// sequence; the sequence is canonicalized with the permutation sign and
    /// collapses to zero when an index repeats.
    pub fn from_term(
        basis: Arc<GeneratorBasis>,
        indices: &[usize],
        value: Complex64,
    ) -> Result<Self, AlgebraError> {
        for &i in indices {
            if i >= basis.len() {
                return Err(AlgebraError::IndexOutOfBounds { index: i, size: basis.len() });
            }
        }
        let mut e = Self::zero(basis);
        if let Some((mask, sign)) = canonical_mask(indices) {
            e.accumulate(mask, value * sign);
        }
        Ok(e)
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the canonical monomial given by `indices` (which may be
    /// unordered; the query is canonicalized first, so asking for the
    /// coefficient of `g1 g0` on an element containing `g0 g1` reports the
    /// sign-adjusted value).
    pub fn coefficient(&self, indices: &[usize]) -> Complex64 {
        match canonical_mask(indices) {
            Some((mask, sign)) => self.coefficient_mask(mask) * sign,
            None => Complex64::default(),
        }
    }

    pub fn coefficient_mask(&self, mask: u64) -> Complex64 {
        self.terms.get(&mask).copied().unwrap_or_default()
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.coefficient_mask(0)
    }

    /// The element minus its scalar part.
    pub fn nilpotent_part(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&0);
        out
    }

    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for &mask in self.terms.keys() {
            if mask.count_ones() % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even, // zero counts as even
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    fn accumulate(&mut self, mask: u64, value: Complex64) {
        let entry = self.terms.entry(mask).or_default();
        *entry += value;
        if entry.norm() < PRUNE_TOL {
            self.terms.remove(&mask);
        }
    }

    fn check_basis(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.basis != other.basis {
            return Err(AlgebraError::BasisMismatch {
                left: self.basis.describe(),
                right: other.basis.describe(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_basis(other)?;
        let mut out = self.clone();
        for (&mask, &c) in &other.terms {
            out.accumulate(mask, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_basis(other)?;
        let mut out = self.clone();
        for (&mask, &c) in &other.terms {
            out.accumulate(mask, -c);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::zero(self.basis.clone());
        for (&mask, &c) in &self.terms {
            out.accumulate(mask, c * factor);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_basis(other)?;
        let mut out = Self::zero(self.basis.clone());
        for (&ma, &ca) in &self.terms {
            for (&mb, &cb) in &other.terms {
                if ma & mb != 0 {
                    continue; // nilpotency kills repeated generators
                }
                out.accumulate(ma | mb, ca * cb * mul_sign(ma, mb));
            }
        }
        Ok(out)
    }

    /// Left graded derivative with respect to generator `index`: the
    /// generator is commuted to the front of each monomial (one sign per
    /// transposition) and removed.
    pub fn derive_left(&self, index: usize) -> Result<Self, AlgebraError> {
        if index >= self.basis.len() {
            return Err(AlgebraError::IndexOutOfBounds { index, size: self.basis.len() });
        }
        let bit = 1u64 << index;
        let mut out = Self::zero(self.basis.clone());
        for (&mask, &c) in &self.terms {
            if mask & bit == 0 {
                continue;
            }
            let position = (mask & (bit - 1)).count_ones();
            let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
            out.accumulate(mask & !bit, c * sign);
        }
        Ok(out)
    }

    /// Right graded derivative: the generator is commuted to the back of
    /// each monomial before removal.
    pub fn derive_right(&self, index: usize) -> Result<Self, AlgebraError> {
        if index >= self.basis.len() {
            return Err(AlgebraError::IndexOutOfBounds { index, size: self.basis.len() });
        }
        let bit = 1u64 << index;
        let mut out = Self::zero(self.basis.clone());
        for (&mask, &c) in &self.terms {
            if mask & bit == 0 {
                continue;
            }
            let after = (mask >> (index + 1)).count_ones();
            let sign = if after % 2 == 0 { 1.0 } else { -1.0 };
            out.accumulate(mask & !bit, c * sign);
        }
        Ok(out)
    }

    /// Conjugation: a graded anti-automorphism. Coefficients are complex
    /// conjugated, each monomial is reversed (anti-automorphism sign) and its
    /// generators are mapped through the basis conjugation pairing.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero(self.basis.clone());
        for (&mask, &c) in &self.terms {
            let indices = mask_indices(mask);
            let mut sign = 1.0;
            let mapped: Vec<usize> = indices
                .iter()
                .rev()
                .map(|&i| {
                    let t = self.basis.conj_target(i);
                    sign *= t.sign;
                    t.index
                })
                .collect();
            if let Some((new_mask, perm_sign)) = canonical_mask(&mapped) {
                out.accumulate(new_mask, c.conj() * sign * perm_sign);
            }
        }
        out
    }

    /// Exponential of an even element: `exp(s) *` the finite Taylor series of
    /// the nilpotent part. Errors on odd or mixed parity.
    pub fn exp(&self) -> Result<Self, AlgebraError> {
        let parity = self.parity();
        if parity != Parity::Even {
            return Err(AlgebraError::NotEven { found: parity });
        }
        let scalar = self.scalar_part().exp();
        let nil = self.nilpotent_part();
        let mut sum = Self::one(self.basis.clone());
        let mut power = Self::one(self.basis.clone());
        let mut factorial = 1.0;
        for k in 1..=self.basis.len() {
            power = power.mul(&nil)?;
            if power.is_zero() {
                break;
            }
            factorial *= k as f64;
            sum = sum.add(&power.scale(Complex64::new(1.0 / factorial, 0.0)))?;
        }
        Ok(sum.scale(scalar))
    }

    /// Inverse of an even element with nonzero scalar part, via the finite
    /// geometric series in the nilpotent part.
    pub fn invert_even(&self) -> Result<Self, AlgebraError> {
        let parity = self.parity();
        if parity != Parity::Even {
            return Err(AlgebraError::NotEven { found: parity });
        }
        let s = self.scalar_part();
        if s.norm() < PRUNE_TOL {
            return Err(AlgebraError::NotInvertible);
        }
        let u = self.nilpotent_part().scale(Complex64::new(1.0, 0.0) / s);
        let mut sum = Self::one(self.basis.clone());
        let mut power = Self::one(self.basis.clone());
        let mut sign = 1.0;
        loop {
            power = power.mul(&u)?;
            if power.is_zero() {
                break;
            }
            sign = -sign;
            sum = sum.add(&power.scale(Complex64::new(sign, 0.0)))?;
        }
        Ok(sum.scale(Complex64::new(1.0, 0.0) / s))
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, AlgebraError> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Coefficient-wise comparison within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> Result<bool, AlgebraError> {
        Ok(self.max_abs_diff(other)? <= tol)
    }

    /// Serialized form: one record per term with the generator index list,
    /// sorted by degree and then lexicographically by indices.
    pub fn to_records(&self) -> Vec<TermRecord> {
        let mut records: Vec<TermRecord> = self
            .terms
            .iter()
            .map(|(&mask, &c)| TermRecord { monomial: mask_indices(mask), re: c.re, im: c.im })
            .collect();
        records.sort_by(|a, b| {
            (a.monomial.len(), &a.monomial).cmp(&(b.monomial.len(), &b.monomial))
        });
        records
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_records()).expect("term records serialize")
    }

    /// Human-readable form, e.g. `1 + 2i*x1*x2`.
    pub fn display(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for rec in self.to_records() {
            let names: Vec<&str> = rec.monomial.iter().map(|&i| self.basis.name(i)).collect();
            let coeff = crate::scalar::format_complex(Complex64::new(rec.re, rec.im), !names.is_empty());
            let part = if names.is_empty() {
                coeff
            } else if coeff == "1" {
                names.join("*")
            } else if coeff == "-1" {
                format!("-{}", names.join("*"))
            } else {
                format!("{}*{}", coeff, names.join("*"))
            };
            parts.push(part);
        }
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i == 0 {
                out.push_str(p);
            } else if let Some(rest) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis3() -> Arc<GeneratorBasis> {
        GeneratorBasis::new(vec!["x1", "x2", "x3"]).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn from_term_canonicalizes_with_sign() {
        let b = basis3();
        let e = GrassmannElement::from_term(b.clone(), &[1, 0], c(1.0, 0.0)).unwrap();
        assert_eq!(e.coefficient(&[0, 1]), c(-1.0, 0.0));
        // querying in the original order restores +1
        assert_eq!(e.coefficient(&[1, 0]), c(1.0, 0.0));
    }

    #[test]
    fn repeated_generator_collapses_to_zero() {
        let b = basis3();
        let x1 = GrassmannElement::generator(b.clone(), 0).unwrap();
        assert!(x1.mul(&x1).unwrap().is_zero());
    }

    #[test]
    fn product_of_conjugate_pair_terms() {
        // (1 + x1 x2)(1 - x1 x2) = 1 because (x1 x2)^2 = 0
        let b = basis3();
        let one = GrassmannElement::one(b.clone());
        let x12 = GrassmannElement::from_term(b.clone(), &[0, 1], c(1.0, 0.0)).unwrap();
        let lhs = one.add(&x12).unwrap();
        let rhs = one.sub(&x12).unwrap();
        let prod = lhs.mul(&rhs).unwrap();
        assert!(prod.approx_eq(&one, 1e-12).unwrap());
    }

    #[test]
    fn derive_left_counts_preceding_generators() {
        // d/dx2 (x1 x2) = -x1 with the left convention
        let b = basis3();
        let e = GrassmannElement::from_term(b.clone(), &[0, 1], c(1.0, 0.0)).unwrap();
        let d = e.derive_left(1).unwrap();
        assert_eq!(d.coefficient(&[0]), c(-1.0, 0.0));
        // and d/dx1 (x1 x2) = +x2
        let d0 = e.derive_left(0).unwrap();
        assert_eq!(d0.coefficient(&[1]), c(1.0, 0.0));
    }

    #[test]
    fn derive_right_counts_following_generators() {
        let b = basis3();
        let e = GrassmannElement::from_term(b.clone(), &[0, 1], c(1.0, 0.0)).unwrap();
        assert_eq!(e.derive_right(1).unwrap().coefficient(&[0]), c(1.0, 0.0));
        assert_eq!(e.derive_right(0).unwrap().coefficient(&[1]), c(-1.0, 0.0));
    }

    #[test]
    fn conjugate_reverses_and_maps() {
        // with x1* = x2: (x1 x2)* = x2* x1* = x1 x2
        let b = basis3().pair_conjugates(0, 1, 1.0).unwrap();
        let e = GrassmannElement::from_term(b.clone(), &[0, 1], c(1.0, 0.0)).unwrap();
        let conj = e.conjugate();
        assert_eq!(conj.coefficient(&[0, 1]), c(1.0, 0.0));
    }

    #[test]
    fn conjugate_is_involutive_with_signed_pairing() {
        let b = basis3().pair_conjugates(0, 1, -1.0).unwrap();
        let e = GrassmannElement::from_term(b.clone(), &[0, 2], c(2.0, 3.0)).unwrap();
        let twice = e.conjugate().conjugate();
        assert!(twice.approx_eq(&e, 1e-12).unwrap());
    }

    #[test]
    fn exp_of_nilpotent_truncates() {
        let b = basis3();
        let x12 = GrassmannElement::from_term(b.clone(), &[0, 1], c(0.5, 0.0)).unwrap();
        let e = x12.exp().unwrap();
        assert_eq!(e.scalar_part(), c(1.0, 0.0));
        assert_eq!(e.coefficient(&[0, 1]), c(0.5, 0.0));
    }

    #[test]
    fn exp_rejects_odd_argument() {
        let b = basis3();
        let x1 = GrassmannElement::generator(b, 0).unwrap();
        assert!(matches!(x1.exp(), Err(AlgebraError::NotEven { .. })));
    }

    #[test]
    fn invert_even_geometric_series() {
        let b = basis3();
        let a = GrassmannElement::scalar(b.clone(), c(2.0, 0.0))
            .add(&GrassmannElement::from_term(b.clone(), &[0, 1], c(3.0, 1.0)).unwrap())
            .unwrap();
        let inv = a.invert_even().unwrap();
        let prod = a.mul(&inv).unwrap();
        assert!(prod.approx_eq(&GrassmannElement::one(b), 1e-12).unwrap());
    }

    #[test]
    fn invert_rejects_zero_scalar_part() {
        let b = basis3();
        let n = GrassmannElement::from_term(b, &[0, 1], c(1.0, 0.0)).unwrap();
        assert!(matches!(n.invert_even(), Err(AlgebraError::NotInvertible)));
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let a = GrassmannElement::one(basis3());
        let b = GrassmannElement::one(GeneratorBasis::new(vec!["y"]).unwrap());
        assert!(matches!(a.add(&b), Err(AlgebraError::BasisMismatch { .. })));
    }

    #[test]
    fn records_sorted_by_degree_then_indices() {
        let b = basis3();
        let e = GrassmannElement::from_term(b.clone(), &[2], c(1.0, 0.0))
            .unwrap()
            .add(&GrassmannElement::from_term(b.clone(), &[0, 1], c(2.0, 0.0)).unwrap())
            .unwrap();
        let recs = e.to_records();
        assert_eq!(recs[0].monomial, vec![2]);
        assert_eq!(recs[1].monomial, vec![0, 1]);
    }
}
