//! Composable words of birational maps and their divisor-counting
//! invariants.
//!
//! A map is modeled as a *word*: a chain of oriented letters, each an open
//! inclusion, a formal blow-up, or a declared (pseudo-)isomorphism. Every
//! letter stays inside one birational class — records and iso letters merge
//! endpoint classes in the registry when they are introduced — so a word's
//! declared source and target always share a union-find root.
//!
//! `tilde_c` counts exceptional strata with orientation signs in the free
//! group on all registered classes; `c` is its top-codimension shadow over
//! birational classes, additive under composition and anti-symmetric under
//! inversion by construction.

use num_bigint::BigInt;

use crate::abgroup::GroupElement;
use crate::universe::{ClassFlags, ClassId, ClassSpec, Universe};
use crate::{Error, Result};

/// Direction a letter is traversed in a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Inverse,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Inverse,
            Orientation::Inverse => Orientation::Forward,
        }
    }

    fn sign(self) -> i64 {
        match self {
            Orientation::Forward => 1,
            Orientation::Inverse => -1,
        }
    }
}

/// One generator of the word calculus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    /// The inclusion of the dense open complement of `complement` into
    /// `ambient`. Forward orientation is the inclusion `U -> X`.
    OpenRestrict {
        ambient: ClassId,
        complement: Vec<ClassId>,
    },
    /// Formal blow-up of `base` along `center` of the stated codimension.
    /// Forward orientation walks from the base up to the blown-up variety.
    BlowUp {
        base: ClassId,
        center: ClassId,
        codim: u32,
        exceptional: ClassId,
    },
    /// Declared isomorphism (or isomorphism in codimension one, when
    /// `pseudo` is set). Contributes nothing to any invariant.
    DeclaredIso {
        source: ClassId,
        target: ClassId,
        pseudo: bool,
    },
}

impl Atom {
    /// Open-inclusion letter. Complement strata must all have dimension
    /// strictly below the ambient class. The decomposition
    /// `[ambient] = [open] + strata` is recorded in the registry: an
    /// existing record with this exact shape is reused, otherwise the open
    /// part is registered under a derived label.
    pub fn open_restrict(
        u: &mut Universe,
        ambient: ClassId,
        complement: Vec<ClassId>,
    ) -> Result<Atom> {
        let n = u.dim(ambient);
        for &d in &complement {
            if u.dim(d) >= n {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "complement stratum `{}` of `{}`",
                        u.label(d),
                        u.label(ambient)
                    ),
                    got: u.dim(d),
                    expected: n.saturating_sub(1),
                });
            }
        }
        if !complement.is_empty() {
            ensure_open_decomposition(u, ambient, &complement)?;
        }
        Ok(Atom::OpenRestrict {
            ambient,
            complement,
        })
    }

    /// Blow-up letter. The exceptional divisor defaults to
    /// `P^{codim-1} x center` (the smooth-center shape) and may be
    /// overridden when only its birational type is known; either way it must
    /// be a divisor class of the base.
    pub fn blow_up(
        u: &mut Universe,
        base: ClassId,
        center: ClassId,
        codim: u32,
        exceptional: Option<ClassId>,
    ) -> Result<Atom> {
        if codim < 2 {
            return Err(Error::invalid(
                "blow-up",
                format!("codimension {codim} is below 2"),
            ));
        }
        let n = u.dim(base);
        if u.dim(center) + codim != n {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "center `{}` of a codim-{codim} blow-up of `{}`",
                    u.label(center),
                    u.label(base)
                ),
                got: u.dim(center),
                expected: n.saturating_sub(codim),
            });
        }
        let exceptional = match exceptional {
            Some(e) => e,
            None => {
                let p = u.projective_space(codim - 1);
                u.product(p, center)?
            }
        };
        if u.dim(exceptional) + 1 != n {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "exceptional divisor `{}` over `{}`",
                    u.label(exceptional),
                    u.label(base)
                ),
                got: u.dim(exceptional),
                expected: n.saturating_sub(1),
            });
        }
        // Record the two decompositions that resolve the blow-up:
        // [base] = [base minus center] + [center] and
        // [blown-up] = [base minus center] + [exceptional].
        let open = ensure_open_decomposition(u, base, std::slice::from_ref(&center))?;
        let bl_label = format!("Bl({}/{})", u.label(base), u.label(center));
        let bl = match u
            .records()
            .iter()
            .find(|r| r.open == open && r.closed == vec![exceptional] && r.total != base)
        {
            Some(r) => r.total,
            None => {
                let base_flags = u.meta(base).spec.flags;
                let center_flags = u.meta(center).spec.flags;
                let bl = u.register_or_get(
                    &bl_label,
                    ClassSpec {
                        dim: n,
                        flags: ClassFlags {
                            smooth: base_flags.smooth && center_flags.smooth,
                            projective: base_flags.projective,
                            irreducible: base_flags.irreducible,
                            geometrically_reduced: base_flags.geometrically_reduced,
                            k_trivial: false,
                            separably_rationally_connected: base_flags
                                .separably_rationally_connected,
                        },
                        ..ClassSpec::default()
                    },
                )?;
                u.add_record(bl, open, vec![exceptional])?;
                bl
            }
        };
        debug_assert!(u.same_class(bl, base));
        Ok(Atom::BlowUp {
            base,
            center,
            codim,
            exceptional,
        })
    }

    /// Declared isomorphism letter. Identifies the two classes birationally
    /// and as cut-and-paste classes (an isomorphism is both), which can
    /// surface a contradiction with the distinctness oracle.
    pub fn declared_iso(
        u: &mut Universe,
        source: ClassId,
        target: ClassId,
        pseudo: bool,
    ) -> Result<Atom> {
        if u.dim(source) != u.dim(target) {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "declared isomorphism `{}` -> `{}`",
                    u.label(source),
                    u.label(target)
                ),
                got: u.dim(target),
                expected: u.dim(source),
            });
        }
        if source != target {
            if pseudo {
                // Isomorphic in codimension one: birational, but the
                // cut-and-paste classes may differ.
                u.declare_birational(source, target)?;
            } else {
                u.add_record(source, target, Vec::new())?;
            }
        }
        Ok(Atom::DeclaredIso {
            source,
            target,
            pseudo,
        })
    }

    pub fn is_iso(&self) -> bool {
        matches!(self, Atom::DeclaredIso { .. })
    }

    /// Dimension of the birational class the letter lives on.
    pub fn ambient_dim(&self, u: &Universe) -> u32 {
        match self {
            Atom::OpenRestrict { ambient, .. } => u.dim(*ambient),
            Atom::BlowUp { base, .. } => u.dim(*base),
            Atom::DeclaredIso { source, .. } => u.dim(*source),
        }
    }

    /// Union-find root of the birational class the letter lives on.
    pub fn root(&self, u: &Universe) -> ClassId {
        match self {
            Atom::OpenRestrict { ambient, .. } => u.find(*ambient),
            Atom::BlowUp { base, .. } => u.find(*base),
            Atom::DeclaredIso { source, .. } => u.find(*source),
        }
    }

    /// Raw strata contributions of the letter traversed forward.
    fn forward_terms(&self) -> Vec<(ClassId, i64)> {
        match self {
            Atom::OpenRestrict { complement, .. } => {
                complement.iter().map(|&d| (d, 1)).collect()
            }
            Atom::BlowUp {
                center,
                exceptional,
                ..
            } => vec![(*exceptional, 1), (*center, -1)],
            Atom::DeclaredIso { .. } => Vec::new(),
        }
    }
}

/// Finds or creates the record `[total] = [open] + strata` and returns the
/// open part. Reuses an exact existing record (declared charts included), so
/// repeated letters and manual declarations converge on one class.
pub fn ensure_open_decomposition(
    u: &mut Universe,
    total: ClassId,
    strata: &[ClassId],
) -> Result<ClassId> {
    let mut closed = strata.to_vec();
    closed.sort();
    if let Some(r) = u
        .records()
        .iter()
        .find(|r| r.total == total && r.closed == closed)
    {
        return Ok(r.open);
    }
    let strata_labels: Vec<&str> = closed.iter().map(|&z| u.label(z)).collect();
    let label = format!("U({}/{})", u.label(total), strata_labels.join("+"));
    let flags = u.meta(total).spec.flags;
    let open = u.register_or_get(
        &label,
        ClassSpec {
            dim: u.dim(total),
            flags: ClassFlags {
                smooth: flags.smooth,
                projective: false,
                irreducible: flags.irreducible,
                geometrically_reduced: flags.geometrically_reduced,
                k_trivial: false,
                separably_rationally_connected: false,
            },
            ..ClassSpec::default()
        },
    )?;
    u.add_record(total, open, closed)?;
    Ok(open)
}

/// The registered total space of a blow-up letter: the class recorded as
/// `[total] = [base minus center] + [exceptional]` when the letter was
/// constructed.
pub fn blow_up_total(u: &Universe, atom: &Atom) -> Option<ClassId> {
    let Atom::BlowUp {
        base,
        center,
        exceptional,
        ..
    } = atom
    else {
        return None;
    };
    let open = u
        .records()
        .iter()
        .find(|r| r.total == *base && r.closed == vec![*center])?
        .open;
    u.records()
        .iter()
        .find(|r| r.open == open && r.closed == vec![*exceptional] && r.total != *base)
        .map(|r| r.total)
}

/// A birational map presented as a word of oriented letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BirWord {
    source: ClassId,
    target: ClassId,
    letters: Vec<(Atom, Orientation)>,
}

impl BirWord {
    /// The empty word at `x`.
    pub fn identity(x: ClassId) -> Self {
        Self {
            source: x,
            target: x,
            letters: Vec::new(),
        }
    }

    /// Validates chaining: source, target and every letter must live on one
    /// birational class of one dimension.
    pub fn new(
        u: &Universe,
        source: ClassId,
        target: ClassId,
        letters: Vec<(Atom, Orientation)>,
    ) -> Result<Self> {
        let n = u.dim(source);
        if u.dim(target) != n {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "word `{}` -> `{}`",
                    u.label(source),
                    u.label(target)
                ),
                got: u.dim(target),
                expected: n,
            });
        }
        let root = u.find(source);
        if u.find(target) != root {
            return Err(Error::ChainMismatch {
                position: letters.len(),
                left: u.label(root).to_string(),
                right: u.label(u.find(target)).to_string(),
            });
        }
        for (i, (atom, _)) in letters.iter().enumerate() {
            if atom.ambient_dim(u) != n {
                return Err(Error::DimensionMismatch {
                    context: format!("letter {i}"),
                    got: atom.ambient_dim(u),
                    expected: n,
                });
            }
            if atom.root(u) != root {
                return Err(Error::ChainMismatch {
                    position: i,
                    left: u.label(root).to_string(),
                    right: u.label(atom.root(u)).to_string(),
                });
            }
        }
        Ok(Self {
            source,
            target,
            letters,
        })
    }

    pub fn source(&self) -> ClassId {
        self.source
    }

    pub fn target(&self) -> ClassId {
        self.target
    }

    pub fn letters(&self) -> &[(Atom, Orientation)] {
        &self.letters
    }

    /// Endomorphism at the level of declared classes (not merely of the
    /// birational class).
    pub fn is_strict_endo(&self) -> bool {
        self.source == self.target
    }

    pub fn compose(u: &Universe, first: &BirWord, second: &BirWord) -> Result<BirWord> {
        if !u.same_class(first.target, second.source) {
            return Err(Error::ChainMismatch {
                position: first.letters.len(),
                left: u.label(first.target).to_string(),
                right: u.label(second.source).to_string(),
            });
        }
        let mut letters = first.letters.clone();
        letters.extend(second.letters.iter().cloned());
        Ok(BirWord {
            source: first.source,
            target: second.target,
            letters,
        })
    }

    pub fn invert(&self) -> BirWord {
        BirWord {
            source: self.target,
            target: self.source,
            letters: self
                .letters
                .iter()
                .rev()
                .map(|(a, o)| (a.clone(), o.flip()))
                .collect(),
        }
    }

    pub fn dim(&self, u: &Universe) -> u32 {
        u.dim(self.source)
    }
}

/// The strata-counting invariant over the free group on all registered
/// classes: each letter contributes its exceptional strata with the
/// orientation sign. Additive under composition by construction.
pub fn tilde_c(w: &BirWord) -> GroupElement {
    let mut out = GroupElement::zero();
    for (atom, orient) in w.letters() {
        for (class, k) in atom.forward_terms() {
            out.add_term(class.basis(), BigInt::from(k * orient.sign()));
        }
    }
    out
}

/// Projection onto birational classes of dimension exactly `n`: classes of
/// other dimensions are dropped, declared-reducible classes expand into
/// their top-dimensional irreducible components, and every surviving class
/// is written as its union-find root.
pub fn pi(u: &Universe, n: u32, x: &GroupElement) -> GroupElement {
    let mut out = GroupElement::zero();
    for (b, k) in x.iter() {
        let class = ClassId(b.0);
        for comp in u.top_components(class) {
            if u.dim(comp) == n {
                out.add_term(u.find(comp).basis(), k.clone());
            }
        }
    }
    out
}

/// The divisor-class invariant: the codimension-one shadow of [`tilde_c`],
/// over the free group on birational classes of dimension `n - 1`.
pub fn c(u: &Universe, w: &BirWord) -> GroupElement {
    let n = w.dim(u);
    if n == 0 {
        return GroupElement::zero();
    }
    pi(u, n - 1, &tilde_c(w))
}

/// Builds the witness word `X <- A^n -> P^n` from a declared affine chart
/// of `X`. Its invariant is `[P^{n-1}] - [D]` where `D` is the
/// codimension-one part of the chart complement; when `D` is declared
/// birational to `P^{n-1}` the invariant vanishes and the word witnesses
/// strong rationality.
pub fn strong_rational_witness(
    u: &mut Universe,
    x: ClassId,
    divisor: ClassId,
) -> Result<BirWord> {
    let n = u.dim(x);
    if n == 0 {
        return Err(Error::invalid("strong rationality", "class must have dim >= 1"));
    }
    let strata = u
        .chart(x)
        .cloned()
        .ok_or_else(|| {
            Error::MissingDeclaration(format!(
                "no affine chart declared for `{}`",
                u.label(x)
            ))
        })?;
    let mut top: Vec<ClassId> = strata
        .iter()
        .copied()
        .filter(|&z| u.dim(z) == n - 1)
        .map(|z| u.find(z))
        .collect();
    top.sort();
    if top != vec![u.find(divisor)] {
        return Err(Error::invalid(
            "strong rationality",
            format!(
                "chart complement of `{}` is not the single divisor `{}`",
                u.label(x),
                u.label(divisor)
            ),
        ));
    }
    let pn = u.projective_space(n);
    let pn_minus_1 = u.projective_space(n - 1);
    let restrict_x = Atom::open_restrict(u, x, strata)?;
    let include_pn = Atom::open_restrict(u, pn, vec![pn_minus_1])?;
    BirWord::new(
        u,
        x,
        pn,
        vec![
            (restrict_x, Orientation::Inverse),
            (include_pn, Orientation::Forward),
        ],
    )
}

/// Conjugates an endo-word of declared isomorphisms by `alpha`:
/// the result is `alpha` then `gamma` then `alpha` inverted, a word whose
/// invariant cancels exactly.
pub fn pseudo_reg_conjugate(
    u: &Universe,
    alpha: &BirWord,
    gamma: &BirWord,
) -> Result<BirWord> {
    if !u.same_class(gamma.source(), gamma.target())
        || !u.same_class(alpha.target(), gamma.source())
    {
        return Err(Error::ChainMismatch {
            position: 0,
            left: u.label(alpha.target()).to_string(),
            right: u.label(gamma.source()).to_string(),
        });
    }
    for (i, (atom, _)) in gamma.letters().iter().enumerate() {
        if !atom.is_iso() {
            return Err(Error::invalid(
                "pseudo-regularization",
                format!("letter {i} of the conjugated word is not a declared isomorphism"),
            ));
        }
    }
    let inner = BirWord::compose(u, alpha, gamma)?;
    BirWord::compose(u, &inner, &alpha.invert())
}
