//! Ordered sets of anticommuting generators.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::AlgebraError;

/// Hard cap on generator count so a monomial fits in a `u64` bitmask.
pub const MAX_GENERATORS: usize = 63;

/// Whether a generator represents a dynamical variable or a constant of
/// integration. The distinction is bookkeeping only; the algebra treats
/// both identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    Dynamical,
    Constant,
}

/// Image of a generator under conjugation: `g* = sign * basis[index]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjTarget {
    pub sign: f64,
    pub index: usize,
}

/// An ordered list of named odd generators together with a signed
/// conjugation involution. The order fixes the canonical form of every
/// monomial built over the basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorBasis {
    names: Vec<String>,
    kinds: Vec<GeneratorKind>,
    conj: Vec<ConjTarget>,
}

impl GeneratorBasis {
    /// Basis of dynamical generators, each self-conjugate with sign +1.
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Arc<Self>, AlgebraError> {
        Self::with_kinds(names.into_iter().map(|n| (n.into(), GeneratorKind::Dynamical)))
    }

    pub fn with_kinds<I>(items: I) -> Result<Arc<Self>, AlgebraError>
    where
        I: IntoIterator<Item = (String, GeneratorKind)>,
    {
        let (names, kinds): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        if names.len() > MAX_GENERATORS {
            return Err(AlgebraError::TooManyGenerators { count: names.len() });
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(AlgebraError::DuplicateGenerator { name: a.clone() });
            }
        }
        let conj = (0..names.len()).map(|i| ConjTarget { sign: 1.0, index: i }).collect();
        Ok(Arc::new(Self { names, kinds, conj }))
    }

    /// Declare `a* = sign * b` (and therefore `b* = sign * a`, keeping the
    /// map an involution).
    pub fn pair_conjugates(
        self: &Arc<Self>,
        a: usize,
        b: usize,
        sign: f64,
    ) -> Result<Arc<Self>, AlgebraError> {
        let n = self.len();
        if a >= n || b >= n {
            return Err(AlgebraError::IndexOutOfBounds { index: a.max(b), size: n });
        }
        let mut new = (**self).clone();
        new.conj[a] = ConjTarget { sign, index: b };
        new.conj[b] = ConjTarget { sign, index: a };
        Ok(Arc::new(new))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self, i: usize) -> GeneratorKind {
        self.kinds[i]
    }

    pub fn conj_target(&self, i: usize) -> ConjTarget {
        self.conj[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Short description used in mismatch errors.
    pub fn describe(&self) -> String {
        format!("[{}]", self.names.join(", "))
    }
}

/// Canonicalize a sequence of generator indices into a bitmask and the sign
/// of the sorting permutation. Returns `None` when an index repeats (the
/// product is then zero by nilpotency).
pub fn canonical_mask(indices: &[usize]) -> Option<(u64, f64)> {
    let mut seq: Vec<usize> = indices.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting transpositions of adjacent odd factors
    for i in 1..seq.len() {
        let mut j = i;
        while j > 0 && seq[j - 1] > seq[j] {
            seq.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    let mut mask = 0u64;
    for &i in &seq {
        let bit = 1u64 << i;
        if mask & bit != 0 {
            return None;
        }
        mask |= bit;
    }
    Some((mask, sign))
}

/// Indices present in a monomial mask, ascending.
pub fn mask_indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1u64 << i) != 0).collect()
}

/// Sign picked up when multiplying canonical monomials `a * b`
/// (assumes `a & b == 0`): one factor of -1 per out-of-order pair.
pub fn mul_sign(a: u64, b: u64) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_mask_sorts_with_parity_sign() {
        assert_eq!(canonical_mask(&[0, 1]), Some((0b11, 1.0)));
        assert_eq!(canonical_mask(&[1, 0]), Some((0b11, -1.0)));
        assert_eq!(canonical_mask(&[2, 0, 1]), Some((0b111, 1.0)));
        assert_eq!(canonical_mask(&[0, 0]), None);
        assert_eq!(canonical_mask(&[]), Some((0, 1.0)));
    }

    #[test]
    fn mul_sign_counts_inversions() {
        // x0 * x1 keeps order, x1 * x0 swaps once
        assert_eq!(mul_sign(0b01, 0b10), 1.0);
        assert_eq!(mul_sign(0b10, 0b01), -1.0);
        // (x0 x1) * (x2 x3) no swaps
        assert_eq!(mul_sign(0b0011, 0b1100), 1.0);
        // (x2 x3) * (x0 x1): each of x0, x1 moves past two generators
        assert_eq!(mul_sign(0b1100, 0b0011), 1.0);
        // (x1) * (x0 x2): x0 moves past x1
        assert_eq!(mul_sign(0b010, 0b101), -1.0);
    }

    #[test]
    fn pairing_is_symmetric() {
        let b = GeneratorBasis::new(vec!["r1", "r2"]).unwrap();
        let b = b.pair_conjugates(0, 1, -1.0).unwrap();
        assert_eq!(b.conj_target(0), ConjTarget { sign: -1.0, index: 1 });
        assert_eq!(b.conj_target(1), ConjTarget { sign: -1.0, index: 0 });
    }

    #[test]
    fn rejects_too_many_generators() {
        let names: Vec<String> = (0..64).map(|i| format!("g{i}")).collect();
        assert!(GeneratorBasis::new(names).is_err());
    }
}
