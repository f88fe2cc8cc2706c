//! Realization homomorphisms out of the class groups: the fixed-point
//! character of the Galois action on geometric components, and the free
//! abelian group on declared indecomposable principally polarized abelian
//! factors. Both induce consistency checks on words, verified here.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::abgroup::GroupElement;
use crate::bircalc::{c, BirWord};
use crate::universe::{ClassId, GaloisGroup, Universe};
use crate::{Error, Result};

/// Integer class function on the universe's Galois quotient: one value per
/// group element, constant on conjugacy classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterVector {
    group: GaloisGroup,
    values: Vec<BigInt>,
}

impl CharacterVector {
    pub fn new(group: GaloisGroup, values: Vec<BigInt>) -> Result<Self> {
        if values.len() != group.len() {
            return Err(Error::invalid(
                "character",
                format!(
                    "{} values for a group of order {}",
                    values.len(),
                    group.len()
                ),
            ));
        }
        let v = Self { group, values };
        if !v.is_class_function() {
            return Err(Error::invalid(
                "character",
                "values are not constant on conjugacy classes",
            ));
        }
        Ok(v)
    }

    pub fn zero(group: GaloisGroup) -> Self {
        let n = group.len();
        Self {
            group,
            values: vec![BigInt::zero(); n],
        }
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    /// Value at the identity element — for permutation characters, the
    /// number of components.
    pub fn rank(&self) -> &BigInt {
        &self.values[self.group.identity_index()]
    }

    fn is_class_function(&self) -> bool {
        // Exact smallness is irrelevant here; route through i64 when the
        // values fit, else compare conjugates directly.
        let as_i64: Option<Vec<i64>> = self.values.iter().map(|v| i64::try_from(v).ok()).collect();
        match as_i64 {
            Some(v) => self.group.class_constant(&v),
            None => false,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::invalid("character", "mismatched groups"));
        }
        Ok(Self {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::invalid("character", "mismatched groups"));
        }
        Ok(Self {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

impl fmt::Display for CharacterVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Element of the free abelian group on indecomposable principally
/// polarized abelian factor labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PPAVElement {
    terms: BTreeMap<String, BigInt>,
}

impl PPAVElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, label: &str, k: BigInt) {
        let v = self.terms.entry(label.to_string()).or_default();
        *v += k;
        if v.is_zero() {
            self.terms.remove(label);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &BigInt)> {
        self.terms.iter().map(|(l, k)| (l.as_str(), k))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, k) in &other.terms {
            out.add_term(l, k.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (l, k) in &other.terms {
            out.add_term(l, -k.clone());
        }
        out
    }
}

impl fmt::Display for PPAVElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (l, k)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{k}[{l}]")?;
        }
        Ok(())
    }
}

/// Outcome of one consistency check, with a human-readable account of both
/// sides.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

/// Fixed-point character of one class: the declared component action when
/// present, otherwise one component with trivial action.
fn fixed_points(u: &Universe, class: ClassId) -> Vec<i64> {
    let group = u.galois_group();
    match u.effective(class, |s| s.galois.clone()) {
        Some(set) => set
            .action
            .iter()
            .map(|p| p.iter().enumerate().filter(|&(i, &j)| i == j).count() as i64)
            .collect(),
        None => vec![1; group.len()],
    }
}

/// Linear extension of "class ↦ fixed-point character of the Galois action
/// on its geometric components".
pub fn sigma(u: &Universe, x: &GroupElement) -> CharacterVector {
    let group = u.galois_group().clone();
    let mut values = vec![BigInt::zero(); group.len()];
    for (b, k) in x.iter() {
        let class = ClassId(b.0);
        for (i, f) in fixed_points(u, class).into_iter().enumerate() {
            values[i] += k * BigInt::from(f);
        }
    }
    CharacterVector { group, values }
}

/// The declared lattice character of one end of a word, read off the exact
/// class (not its birational orbit — the lattice is a datum of the model).
fn end_ns_character(u: &Universe, id: ClassId) -> Result<CharacterVector> {
    match &u.meta(id).spec.ns_character {
        Some(values) => CharacterVector::new(
            u.galois_group().clone(),
            values.iter().map(|&v| BigInt::from(v)).collect(),
        ),
        None => Err(Error::MissingDeclaration(format!(
            "`{}` carries no lattice character",
            u.label(id)
        ))),
    }
}

/// Checks `sigma(c(w)) = N(target) - N(source)` against the declared
/// lattice characters; for strict endomorphisms the right side is zero and
/// no declarations are needed.
pub fn check_picnb(u: &Universe, w: &BirWord) -> Result<Verdict> {
    let lhs = sigma(u, &c(u, w));
    let rhs = if w.is_strict_endo() {
        CharacterVector::zero(u.galois_group().clone())
    } else {
        end_ns_character(u, w.target())?.sub(&end_ns_character(u, w.source())?)?
    };
    let pass = lhs == rhs;
    Ok(Verdict {
        pass,
        detail: format!("character of the strata count {lhs}, lattice difference {rhs}"),
    })
}

/// Linear extension of "surface ruled over a curve ↦ the curve's declared
/// indecomposable Jacobian factors; everything else ↦ 0".
pub fn j_realize(u: &Universe, x: &GroupElement) -> PPAVElement {
    let mut out = PPAVElement::zero();
    for (b, k) in x.iter() {
        let class = ClassId(b.0);
        let Some(curve) = u.effective(class, |s| s.ruled_over) else {
            continue;
        };
        let factors = u
            .effective(curve, |s| s.jacobian.clone())
            .unwrap_or_default();
        for label in &factors {
            out.add_term(label, k.clone());
        }
    }
    out
}

/// The declared Jacobian factors of one end of a threefold word. Built-in
/// spaces are implicitly trivial; everything else must declare, possibly
/// an empty list.
fn end_jacobian(u: &Universe, id: ClassId) -> Result<PPAVElement> {
    let declared = match &u.meta(id).spec.jacobian {
        Some(list) => list.clone(),
        None if u.meta(id).space.is_some() => Vec::new(),
        None => {
            return Err(Error::MissingDeclaration(format!(
                "`{}` carries no Jacobian factor list",
                u.label(id)
            )))
        }
    };
    let mut out = PPAVElement::zero();
    for label in &declared {
        out.add_term(label, BigInt::from(1));
    }
    Ok(out)
}

/// Checks `j(c(w)) = [J(target)] - [J(source)]` for threefold words against
/// the declared Jacobian factor lists; strict endomorphisms need none.
pub fn check_jacobian(u: &Universe, w: &BirWord) -> Result<Verdict> {
    if w.dim(u) != 3 {
        return Err(Error::DimensionMismatch {
            context: "Jacobian check".to_string(),
            got: w.dim(u),
            expected: 3,
        });
    }
    let lhs = j_realize(u, &c(u, w));
    let rhs = if w.is_strict_endo() {
        PPAVElement::zero()
    } else {
        end_jacobian(u, w.target())?.sub(&end_jacobian(u, w.source())?)
    };
    let pass = lhs == rhs;
    let fmt_side = |p: &PPAVElement| -> String {
        if p.is_zero() {
            "0".to_string()
        } else {
            p.terms()
                .map(|(l, k)| format!("{k}[{l}]"))
                .collect::<Vec<_>>()
                .join(" + ")
        }
    };
    Ok(Verdict {
        pass,
        detail: format!(
            "Jacobian of the strata count {}, declared difference {}",
            fmt_side(&lhs),
            fmt_side(&rhs)
        ),
    })
}
