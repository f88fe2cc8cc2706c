//! Finitely generated abelian groups over an interned basis: sparse elements,
//! dense integer matrices with Hermite/Smith normal forms, and presented
//! groups with exact membership certificates. All coefficient arithmetic is
//! arbitrary-precision, so no lattice computation ever overflows silently.

mod matrix;
mod presented;

pub use matrix::IntMatrix;
pub use presented::{
    member, quotient_invariants, row_lattice_member, subgroup_equal, subgroup_equal_rows,
    PresentedGroup, QuotientShape,
};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::{Error, Result};

/// Identifier of one basis symbol inside a [`BasisRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisId(pub u32);

/// Interns string labels to dense [`BasisId`]s. Interning is injective:
/// within one registry, equal labels always yield the identical identifier
/// and distinct labels never collide.
#[derive(Debug, Default, Clone)]
pub struct BasisRegistry {
    labels: Vec<String>,
    index: BTreeMap<String, BasisId>,
}

impl BasisRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `label`, interning it on first sight.
    pub fn intern(&mut self, label: &str) -> BasisId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = BasisId(self.labels.len() as u32);
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    /// Interns `label` only if it is fresh; registering a duplicate is an error.
    pub fn intern_fresh(&mut self, label: &str) -> Result<BasisId> {
        if self.index.contains_key(label) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
        Ok(self.intern(label))
    }

    pub fn lookup(&self, label: &str) -> Option<BasisId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: BasisId) -> &str {
        &self.labels[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Element of the free abelian group on a basis: a finite formal sum of
/// basis symbols with nonzero integer coefficients. The zero-coefficient
/// invariant is maintained by every mutating operation, so structural
/// equality of the underlying maps is equality in the group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupElement {
    terms: BTreeMap<BasisId, BigInt>,
}

impl GroupElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn generator(id: BasisId) -> Self {
        let mut e = Self::zero();
        e.add_term(id, BigInt::from(1));
        e
    }

    pub fn from_terms<I, C>(terms: I) -> Self
    where
        I: IntoIterator<Item = (BasisId, C)>,
        C: Into<BigInt>,
    {
        let mut e = Self::zero();
        for (id, c) in terms {
            e.add_term(id, c.into());
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, id: BasisId) -> BigInt {
        self.terms.get(&id).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Adds `c * id`, dropping the term if the total cancels to zero.
    pub fn add_term(&mut self, id: BasisId, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(id).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&id);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&id, c) in &other.terms {
            out.add_term(id, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&id, c) in &other.terms {
            out.add_term(id, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero();
        for (&id, c) in &self.terms {
            out.add_term(id, -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        let mut out = Self::zero();
        for (&id, c) in &self.terms {
            out.add_term(id, k * c);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisId, &BigInt)> {
        self.terms.iter().map(|(&id, c)| (id, c))
    }

    pub fn support(&self) -> impl Iterator<Item = BasisId> + '_ {
        self.terms.keys().copied()
    }

    /// Renders the element with labels drawn from `reg`, terms sorted by label.
    pub fn display(&self, reg: &BasisRegistry) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts: Vec<(String, &BigInt)> = self
            .terms
            .iter()
            .map(|(&id, c)| (reg.label(id).to_string(), c))
            .collect();
        parts.sort();
        let mut out = String::new();
        for (label, c) in parts {
            let (sign, mag) = if c.sign() == num_bigint::Sign::Minus {
                ("-", -c.clone())
            } else {
                ("+", c.clone())
            };
            if out.is_empty() {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            if mag != BigInt::from(1) {
                out.push_str(&format!("{mag}"));
            }
            out.push_str(&format!("[{label}]"));
        }
        out
    }
}

impl fmt::Display for GroupElement {
    /// Label-free rendering (`e<id>` symbols); used by Debug-style output.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&id, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{c}*e{}", id.0)?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_injective() {
        let mut reg = BasisRegistry::new();
        let a = reg.intern("a");
        let b = reg.intern("b");
        assert_ne!(a, b);
        assert_eq!(reg.intern("a"), a);
        assert_eq!(reg.label(b), "b");
        assert!(reg.intern_fresh("a").is_err());
    }

    #[test]
    fn zero_terms_are_dropped() {
        let mut reg = BasisRegistry::new();
        let a = reg.intern("a");
        let mut e = GroupElement::generator(a);
        e.add_term(a, BigInt::from(-1));
        assert!(e.is_zero());
        assert_eq!(e, GroupElement::zero());
    }

    #[test]
    fn display_sorts_by_label() {
        let mut reg = BasisRegistry::new();
        let b = reg.intern("beta");
        let a = reg.intern("alpha");
        let e = GroupElement::from_terms([(b, -2), (a, 1)]);
        assert_eq!(e.display(&reg), "[alpha] - 2[beta]");
    }
}
