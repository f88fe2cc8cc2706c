//! Two-sided blow-up links: one top space carrying blow-down structures
//! onto both sides, validated against three conditions — equal sides in the
//! class group (L1), a strong-birationality witness word with vanishing
//! invariant (L2), and irreducible exceptionals (L3). Builders construct
//! the three shipped families (elliptic-torsor, lattice-polarized surface,
//! and the five-dimensional homogeneous pair), and the family homomorphism
//! sends endo-words to integer coordinates over a link family.

use num_bigint::BigInt;

use crate::abgroup::{GroupElement, IntMatrix};
use crate::bircalc::{
    blow_up_total, c, ensure_open_decomposition, strong_rational_witness, Atom, BirWord,
    Orientation,
};
use crate::grothendieck::{full_fragment, TruncatedK0};
use crate::pointcount::{count, ExplicitVariety, Fq, DEFAULT_BUDGET};
use crate::universe::{ClassFlags, ClassId, ClassSpec, Distinctness, TorsorClass, Universe};
use crate::{Error, Result};

/// Evidence that the two sides of a link agree in the class group.
#[derive(Debug, Clone)]
pub enum WitnessL1 {
    /// The sides are the same birational class already.
    SameClass,
    /// The difference of the side classes lies in the relation lattice of
    /// the saturated fragment at their dimension (cell-decomposition
    /// argument).
    K0Identity,
    /// Explicit models whose point counts agree over every listed field.
    Counts {
        left_model: Box<ExplicitVariety>,
        right_model: Box<ExplicitVariety>,
        fields: Vec<u64>,
    },
}

/// Construction data for [`make_link`].
#[derive(Debug, Clone)]
pub struct LinkParams {
    pub name: String,
    pub left: ClassId,
    pub right: ClassId,
    pub center_left: ClassId,
    pub center_right: ClassId,
    pub m: u32,
    pub m_prime: u32,
    /// Exceptional overrides; the default is the product of a projective
    /// space of dimension `m - 1` with the center.
    pub exc_left: Option<ClassId>,
    pub exc_right: Option<ClassId>,
    pub witness_l1: WitnessL1,
    /// Strong-birationality witness word from `left` to `right`; `None`
    /// means the identity word (valid when the sides coincide).
    pub witness_l2: Option<BirWord>,
}

/// A validated two-sided blow-up link.
#[derive(Debug, Clone)]
pub struct LLink {
    pub name: String,
    /// The common blow-up total.
    pub top: ClassId,
    pub left: ClassId,
    pub right: ClassId,
    pub center_left: ClassId,
    pub center_right: ClassId,
    pub m: u32,
    pub m_prime: u32,
    pub exc_left: ClassId,
    pub exc_right: ClassId,
    /// The induced word: blow up the left center, blow down to the right.
    pub word: BirWord,
    pub witness_l1: WitnessL1,
    pub witness_l2: BirWord,
    c_value: GroupElement,
}

impl LLink {
    /// The invariant as computed when the link was validated.
    pub fn c_at_construction(&self) -> &GroupElement {
        &self.c_value
    }
}

/// The invariant of the link's word against the current registry state:
/// the left exceptional class minus the right one.
pub fn c_of_link(u: &Universe, l: &LLink) -> GroupElement {
    c(u, &l.word)
}

/// Nontriviality verdict for a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nontriviality {
    /// Certified nonzero, by the named distinctness rule.
    Yes(char),
    /// The exceptional classes coincide, so the invariant cancels.
    No,
    /// The oracle cannot certify either way.
    Unknown,
}

/// Whether the link's invariant is certified nonzero: the two exceptional
/// birational classes must be certified distinct by the registry oracle.
pub fn nontrivial(u: &Universe, l: &LLink) -> Nontriviality {
    match u.distinct(l.exc_left, l.exc_right) {
        Distinctness::Equal => Nontriviality::No,
        Distinctness::Distinct(rule) => Nontriviality::Yes(rule),
        Distinctness::Unknown => Nontriviality::Unknown,
    }
}

fn link_err(condition: &'static str, name: &str, reason: impl Into<String>) -> Error {
    Error::LinkCondition {
        condition,
        link: name.to_string(),
        reason: reason.into(),
    }
}

/// Builds and validates a link: constructs the two blow-up structures on a
/// common top, forms the induced word, and checks the three conditions.
pub fn make_link(u: &mut Universe, params: LinkParams) -> Result<LLink> {
    let LinkParams {
        name,
        left,
        right,
        center_left,
        center_right,
        m,
        m_prime,
        exc_left,
        exc_right,
        witness_l1,
        witness_l2,
    } = params;
    let n = u.dim(left);
    if u.dim(right) != n {
        return Err(Error::DimensionMismatch {
            context: format!("right side of link `{name}`"),
            got: u.dim(right),
            expected: n,
        });
    }
    // Left blow-up structure; its total is the link's top.
    let atom_left = Atom::blow_up(u, left, center_left, m, exc_left)?;
    let top = blow_up_total(u, &atom_left).expect("blow-up letters record their total");
    let exc_left = match &atom_left {
        Atom::BlowUp { exceptional, .. } => *exceptional,
        _ => unreachable!(),
    };
    // Right blow-up structure on the same top.
    let exc_right = match exc_right {
        Some(e) => e,
        None => {
            let fiber = u.projective_space(m_prime - 1);
            u.product(fiber, center_right)?
        }
    };
    let open_right = ensure_open_decomposition(u, right, &[center_right])?;
    u.add_record(top, open_right, vec![exc_right])?;
    let atom_right = Atom::blow_up(u, right, center_right, m_prime, Some(exc_right))?;
    let word = BirWord::new(
        u,
        left,
        right,
        vec![
            (atom_left, Orientation::Forward),
            (atom_right, Orientation::Inverse),
        ],
    )?;
    // L3: both exceptionals irreducible.
    for (side, e) in [("left", exc_left), ("right", exc_right)] {
        if !u.meta(e).spec.flags.irreducible {
            return Err(link_err(
                "L3",
                &name,
                format!("{side} exceptional `{}` is not irreducible", u.label(e)),
            ));
        }
    }
    // L1: the sides agree in the class group.
    match &witness_l1 {
        WitnessL1::SameClass => {
            if !u.same_class(left, right) {
                return Err(link_err(
                    "L1",
                    &name,
                    format!(
                        "`{}` and `{}` are not one birational class",
                        u.label(left),
                        u.label(right)
                    ),
                ));
            }
        }
        WitnessL1::K0Identity => {
            let (fragment, relations) = full_fragment(u, n)?;
            let t = TruncatedK0::build(u, n, fragment, relations)?;
            let mut diff = GroupElement::generator(left.basis());
            diff.add_term(right.basis(), BigInt::from(-1));
            if !t.contains(&diff)? {
                return Err(link_err(
                    "L1",
                    &name,
                    format!(
                        "`{}` - `{}` is not a relation-lattice element",
                        u.label(left),
                        u.label(right)
                    ),
                ));
            }
        }
        WitnessL1::Counts {
            left_model,
            right_model,
            fields,
        } => {
            if fields.is_empty() {
                return Err(link_err("L1", &name, "no fields listed for counting"));
            }
            for &q in fields {
                let f = Fq::new(q)?;
                let cl = count(&f, left_model, DEFAULT_BUDGET)?;
                let cr = count(&f, right_model, DEFAULT_BUDGET)?;
                if cl != cr {
                    return Err(link_err(
                        "L1",
                        &name,
                        format!(
                            "models `{}` and `{}` count {cl} vs {cr} at q = {q}",
                            left_model.name, right_model.name
                        ),
                    ));
                }
            }
        }
    }
    // L2: a witness word between the sides whose invariant vanishes.
    let witness_l2 = witness_l2.unwrap_or_else(|| BirWord::identity(left));
    if !u.same_class(witness_l2.source(), left) || !u.same_class(witness_l2.target(), right) {
        return Err(link_err(
            "L2",
            &name,
            "witness word does not run between the sides of the link",
        ));
    }
    let witness_c = c(u, &witness_l2);
    if !witness_c.is_zero() {
        return Err(link_err(
            "L2",
            &name,
            "witness word has a nonzero invariant",
        ));
    }
    let c_value = c(u, &word);
    Ok(LLink {
        name,
        top,
        left,
        right,
        center_left,
        center_right,
        m,
        m_prime,
        exc_left,
        exc_right,
        word,
        witness_l1,
        witness_l2,
        c_value,
    })
}

// ---------------------------------------------------------------------------
// the elliptic-torsor family
// ---------------------------------------------------------------------------

fn smooth_projective() -> ClassFlags {
    ClassFlags {
        smooth: true,
        projective: true,
        irreducible: true,
        geometrically_reduced: true,
        ..ClassFlags::default()
    }
}

/// A canonical label for the torsor curve, stable under twisting to the
/// canonical element.
fn torsor_label(t: &TorsorClass) -> String {
    let elems: Vec<String> = t
        .canonical_element()
        .iter()
        .map(|e| e.to_string())
        .collect();
    format!("C({};{})", t.base, elems.join(","))
}

/// The degree-five torsor link: a quadric threefold and projective
/// three-space, linked along a genus-one curve and its double twist.
///
/// The torsor element must have order five (order one is the degenerate
/// split case, where both centers coincide).
pub fn elliptic_link(u: &mut Universe, torsor: TorsorClass) -> Result<LLink> {
    let order = torsor.order();
    if order != 5 && order != 1 {
        return Err(Error::invalid(
            "elliptic link",
            format!("torsor element has order {order}, expected 5"),
        ));
    }
    let curve = u.torsor_curve(&torsor_label(&torsor), torsor)?;
    let curve_right = u.jk_class(curve, 2)?;
    // the quadric side, with its affine chart over the hyperplane cone
    let q3 = u.register_or_get(
        "Q3",
        ClassSpec {
            dim: 3,
            flags: ClassFlags {
                separably_rationally_connected: true,
                ..smooth_projective()
            },
            picard_rank: Some(1),
            degree_invariant: Some(2),
            jacobian: Some(Vec::new()),
            ..ClassSpec::default()
        },
    )?;
    let qh = u.register_or_get(
        "QH",
        ClassSpec {
            dim: 2,
            flags: ClassFlags {
                smooth: false,
                separably_rationally_connected: true,
                ..smooth_projective()
            },
            ..ClassSpec::default()
        },
    )?;
    let p3 = u.projective_space(3);
    let p2 = u.projective_space(2);
    let p1 = u.projective_space(1);
    if u.chart(q3).is_none() {
        u.declare_affine_chart(q3, vec![qh])?;
    }
    // The section through the chart's center is a cone over a conic; the
    // complement of its tangent-plane section (a single ruling line) is
    // itself an affine chart, so the quadric decomposes into affine cells
    // and matches the projective space of the same dimension in the class
    // group.
    if u.chart(qh).is_none() {
        u.declare_affine_chart(qh, vec![p1])?;
    }
    u.declare_birational(qh, p2)?;
    let witness = strong_rational_witness(u, q3, qh)?;
    make_link(
        u,
        LinkParams {
            name: format!("elliptic({})", u.label(curve)),
            left: q3,
            right: p3,
            center_left: curve,
            center_right: curve_right,
            m: 2,
            m_prime: 2,
            exc_left: None,
            exc_right: None,
            witness_l1: WitnessL1::Counts {
                left_model: Box::new(crate::pointcount::model_split_quadric3()),
                right_model: Box::new(crate::pointcount::model_projective_space(3)),
                fields: vec![2, 3, 5],
            },
            witness_l2: Some(witness),
        },
    )
}

// ---------------------------------------------------------------------------
// the polarized-surface family
// ---------------------------------------------------------------------------

/// A link of projective four-space with itself along two polarized
/// surfaces of degree twelve. The surfaces must be declared K-trivial of
/// Picard rank one and degree twelve; when they are genuinely different
/// classes, their non-isomorphism must be declared (partner marker), so
/// the oracle can certify the link.
pub fn k3_link(u: &mut Universe, s: ClassId, s_prime: ClassId) -> Result<LLink> {
    for surf in [s, s_prime] {
        let spec = &u.meta(surf).spec;
        if spec.dim != 2 {
            return Err(Error::DimensionMismatch {
                context: format!("link center `{}`", u.label(surf)),
                got: spec.dim,
                expected: 2,
            });
        }
        if !spec.flags.k_trivial
            || spec.picard_rank != Some(1)
            || spec.degree_invariant != Some(12)
        {
            return Err(Error::MissingDeclaration(format!(
                "`{}` must be declared K-trivial of Picard rank 1 and degree 12",
                u.label(surf)
            )));
        }
    }
    if !u.same_class(s, s_prime) && !matches!(u.distinct(s, s_prime), Distinctness::Distinct(_)) {
        return Err(Error::MissingDeclaration(format!(
            "`{}` and `{}` need a declared non-isomorphism marker",
            u.label(s),
            u.label(s_prime)
        )));
    }
    let p4 = u.projective_space(4);
    let p1 = u.projective_space(1);
    let exc_left = u.product(p1, s)?;
    let exc_right = u.product(p1, s_prime)?;
    make_link(
        u,
        LinkParams {
            name: format!("surface-pair({},{})", u.label(s), u.label(s_prime)),
            left: p4,
            right: p4,
            center_left: s,
            center_right: s_prime,
            m: 2,
            m_prime: 2,
            exc_left: Some(exc_left),
            exc_right: Some(exc_right),
            witness_l1: WitnessL1::SameClass,
            witness_l2: None,
        },
    )
}

// ---------------------------------------------------------------------------
// the homogeneous five-fold link
// ---------------------------------------------------------------------------

/// Registers one five-dimensional homogeneous side with its full chain of
/// Schubert-cell decompositions (each stratum is an affine cell over the
/// next), which places the class in the relation lattice alongside
/// projective five-space.
fn register_homogeneous_side(u: &mut Universe, label: &str) -> Result<ClassId> {
    let side = u.register_or_get(
        label,
        ClassSpec {
            dim: 5,
            flags: ClassFlags {
                separably_rationally_connected: true,
                ..smooth_projective()
            },
            picard_rank: Some(1),
            ..ClassSpec::default()
        },
    )?;
    if u.chart(side).is_some() {
        return Ok(side);
    }
    let mut strata = Vec::new();
    for d in (1..=4u32).rev() {
        let stratum = u.register_or_get(
            &format!("{label}.cell{d}"),
            ClassSpec {
                dim: d,
                flags: ClassFlags {
                    smooth: false,
                    separably_rationally_connected: true,
                    ..smooth_projective()
                },
                ..ClassSpec::default()
            },
        )?;
        strata.push(stratum);
    }
    u.declare_affine_chart(side, vec![strata[0]])?;
    for i in 0..strata.len() {
        let next: Vec<ClassId> = if i + 1 < strata.len() {
            vec![strata[i + 1]]
        } else {
            vec![u.point()]
        };
        u.declare_affine_chart(strata[i], next)?;
    }
    Ok(side)
}

/// The five-dimensional homogeneous link: two homogeneous five-folds with
/// matching cell decompositions, linked along K-trivial threefold centers
/// of degrees fourteen and forty-two. Self-registering.
pub fn g2_link(u: &mut Universe) -> Result<LLink> {
    let left = register_homogeneous_side(u, "GP")?;
    let right = register_homogeneous_side(u, "GP'")?;
    let z14 = u.register_or_get(
        "Z14",
        ClassSpec {
            dim: 3,
            flags: ClassFlags {
                k_trivial: true,
                ..smooth_projective()
            },
            picard_rank: Some(1),
            degree_invariant: Some(14),
            ..ClassSpec::default()
        },
    )?;
    let z42 = u.register_or_get(
        "Z42",
        ClassSpec {
            dim: 3,
            flags: ClassFlags {
                k_trivial: true,
                ..smooth_projective()
            },
            picard_rank: Some(1),
            degree_invariant: Some(42),
            ..ClassSpec::default()
        },
    )?;
    let left_divisor = u.lookup("GP.cell4").expect("registered above");
    let right_divisor = u.lookup("GP'.cell4").expect("registered above");
    let to_p5 = strong_rational_witness(u, left, left_divisor)?;
    let from_p5 = strong_rational_witness(u, right, right_divisor)?;
    let witness = BirWord::compose(u, &to_p5, &from_p5.invert())?;
    make_link(
        u,
        LinkParams {
            name: "g2".to_string(),
            left,
            right,
            center_left: z14,
            center_right: z42,
            m: 2,
            m_prime: 2,
            exc_left: None,
            exc_right: None,
            witness_l1: WitnessL1::K0Identity,
            witness_l2: Some(witness),
        },
    )
}

// ---------------------------------------------------------------------------
// stabilization
// ---------------------------------------------------------------------------

/// The product of a link with a separably rationally connected cofactor:
/// every structural class is multiplied by `w`, producing a link one
/// dimension class up whose invariant is the product of the original one.
pub fn stabilize(u: &mut Universe, link: &LLink, w: ClassId) -> Result<LLink> {
    if !u.is_src(w) {
        return Err(Error::invalid(
            "stabilization",
            format!(
                "cofactor `{}` is not separably rationally connected",
                u.label(w)
            ),
        ));
    }
    let left = u.product(link.left, w)?;
    let right = u.product(link.right, w)?;
    let center_left = u.product(link.center_left, w)?;
    let center_right = u.product(link.center_right, w)?;
    let exc_left = u.product(link.exc_left, w)?;
    let exc_right = u.product(link.exc_right, w)?;
    make_link(
        u,
        LinkParams {
            name: format!("{}*{}", link.name, u.label(w)),
            left,
            right,
            center_left,
            center_right,
            m: link.m,
            m_prime: link.m_prime,
            exc_left: Some(exc_left),
            exc_right: Some(exc_right),
            witness_l1: WitnessL1::SameClass,
            witness_l2: None,
        },
    )
}

// ---------------------------------------------------------------------------
// the family homomorphism
// ---------------------------------------------------------------------------

/// An indexed family of links whose center pairs partition their classes:
/// no birational class appears twice across the family, and no link is
/// degenerate.
#[derive(Debug, Clone)]
pub struct LinkFamily {
    links: Vec<LLink>,
}

impl LinkFamily {
    pub fn new(u: &Universe, links: Vec<LLink>) -> Result<Self> {
        let mut seen: Vec<ClassId> = Vec::new();
        for link in &links {
            for center in [link.center_left, link.center_right] {
                let root = u.find(center);
                if seen.contains(&root) {
                    return Err(Error::invalid(
                        "link family",
                        format!(
                            "center class `{}` appears twice — the pairing is not a partition",
                            u.label(root)
                        ),
                    ));
                }
                seen.push(root);
            }
        }
        Ok(Self { links })
    }

    pub fn links(&self) -> &[LLink] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Coordinates of the words' invariants over the family: row per word,
/// column per link, entry = coefficient of that link's left exceptional
/// class in the word's invariant. The generator word of link `i` maps to
/// the `i`-th standard basis vector.
pub fn cremona_hom(u: &Universe, family: &LinkFamily, words: &[&BirWord]) -> Result<IntMatrix> {
    let columns: Vec<ClassId> = family
        .links()
        .iter()
        .map(|l| u.find(l.exc_left))
        .collect();
    let mut out = IntMatrix::zero(0, columns.len());
    for w in words {
        let inv = c(u, w);
        let row: Vec<BigInt> = columns
            .iter()
            .map(|&col| inv.coeff(col.basis()))
            .collect();
        out.push_row(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bircalc::pseudo_reg_conjugate;

    fn surface_spec(degree: i64) -> ClassSpec {
        ClassSpec {
            dim: 2,
            flags: ClassFlags {
                k_trivial: true,
                ..smooth_projective()
            },
            picard_rank: Some(1),
            degree_invariant: Some(degree),
            ..ClassSpec::default()
        }
    }

    fn z5_torsor(t: i64) -> TorsorClass {
        TorsorClass::new("E", true, vec![5], vec![t]).unwrap()
    }

    #[test]
    fn degenerate_link_has_zero_invariant() {
        let mut u = Universe::new();
        let p3 = u.projective_space(3);
        let z = u
            .register(
                "Zc",
                ClassSpec {
                    dim: 1,
                    flags: smooth_projective(),
                    ..ClassSpec::default()
                },
            )
            .unwrap();
        let link = make_link(
            &mut u,
            LinkParams {
                name: "degenerate".to_string(),
                left: p3,
                right: p3,
                center_left: z,
                center_right: z,
                m: 2,
                m_prime: 2,
                exc_left: None,
                exc_right: None,
                witness_l1: WitnessL1::SameClass,
                witness_l2: None,
            },
        )
        .unwrap();
        assert!(c_of_link(&u, &link).is_zero());
        assert!(link.c_at_construction().is_zero());
        assert_eq!(nontrivial(&u, &link), Nontriviality::No);
    }

    #[test]
    fn l2_witness_with_nonzero_invariant_is_rejected() {
        let mut u = Universe::new();
        let p3 = u.projective_space(3);
        let z1 = u
            .register("Z1", ClassSpec { dim: 1, flags: smooth_projective(), ..ClassSpec::default() })
            .unwrap();
        let z2 = u
            .register("Z2", ClassSpec { dim: 1, flags: smooth_projective(), ..ClassSpec::default() })
            .unwrap();
        let a1 = Atom::blow_up(&mut u, p3, z1, 2, None).unwrap();
        let a2 = Atom::blow_up(&mut u, p3, z2, 2, None).unwrap();
        let bad_witness = BirWord::new(
            &u,
            p3,
            p3,
            vec![(a1, Orientation::Forward), (a2, Orientation::Inverse)],
        )
        .unwrap();
        let err = make_link(
            &mut u,
            LinkParams {
                name: "bad".to_string(),
                left: p3,
                right: p3,
                center_left: z1,
                center_right: z1,
                m: 2,
                m_prime: 2,
                exc_left: None,
                exc_right: None,
                witness_l1: WitnessL1::SameClass,
                witness_l2: Some(bad_witness),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::LinkCondition { condition: "L2", .. }));
    }

    #[test]
    fn l1_count_witness_rejects_unequal_models() {
        let mut u = Universe::new();
        let p3 = u.projective_space(3);
        let z = u
            .register("Zc", ClassSpec { dim: 1, flags: smooth_projective(), ..ClassSpec::default() })
            .unwrap();
        let err = make_link(
            &mut u,
            LinkParams {
                name: "unequal".to_string(),
                left: p3,
                right: p3,
                center_left: z,
                center_right: z,
                m: 2,
                m_prime: 2,
                exc_left: None,
                exc_right: None,
                witness_l1: WitnessL1::Counts {
                    left_model: Box::new(crate::pointcount::model_projective_space(3)),
                    right_model: Box::new(crate::pointcount::model_projective_space(2)),
                    fields: vec![2],
                },
                witness_l2: None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::LinkCondition { condition: "L1", .. }));
    }

    #[test]
    fn l3_rejects_a_reducible_exceptional() {
        let mut u = Universe::new();
        let p3 = u.projective_space(3);
        let p2 = u.projective_space(2);
        let z = u
            .register("Zc", ClassSpec { dim: 1, flags: smooth_projective(), ..ClassSpec::default() })
            .unwrap();
        let reducible = u
            .register(
                "twoPlanes",
                ClassSpec {
                    dim: 2,
                    flags: ClassFlags {
                        irreducible: false,
                        ..smooth_projective()
                    },
                    components: Some(vec![p2, p2]),
                    ..ClassSpec::default()
                },
            )
            .unwrap();
        let err = make_link(
            &mut u,
            LinkParams {
                name: "reducible".to_string(),
                left: p3,
                right: p3,
                center_left: z,
                center_right: z,
                m: 2,
                m_prime: 2,
                exc_left: Some(reducible),
                exc_right: None,
                witness_l1: WitnessL1::SameClass,
                witness_l2: None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::LinkCondition { condition: "L3", .. }));
    }

    #[test]
    fn elliptic_link_is_nontrivial_for_a_generating_element() {
        let mut u = Universe::new();
        let link = elliptic_link(&mut u, z5_torsor(1)).unwrap();
        // invariant = left exceptional minus right exceptional
        let cl = c_of_link(&u, &link);
        let mut expected = GroupElement::generator(u.find(link.exc_left).basis());
        expected.add_term(u.find(link.exc_right).basis(), BigInt::from(-1));
        assert_eq!(cl, expected);
        assert!(!cl.is_zero());
        assert_eq!(nontrivial(&u, &link), Nontriviality::Yes('C'));
        // the witness word runs between the sides with zero invariant
        assert!(c(&u, &link.witness_l2).is_zero());
        // twisting twice walks to the right center and back again
        let tw = u.jk_class(link.center_left, 2).unwrap();
        assert_eq!(u.find(tw), u.find(link.center_right));
        let tw2 = u.jk_class(tw, 2).unwrap();
        assert_eq!(u.find(tw2), u.find(link.center_left));
        // realizations cannot see the difference
        assert!(crate::realize::sigma(&u, &cl).is_zero());
        assert!(crate::realize::j_realize(&u, &cl).is_zero());
        // and the intermediate-Jacobian comparison passes on the link word
        assert!(crate::realize::check_jacobian(&u, &link.word).unwrap().pass);
    }

    #[test]
    fn elliptic_link_degenerates_at_the_trivial_torsor() {
        let mut u = Universe::new();
        let link = elliptic_link(&mut u, z5_torsor(0)).unwrap();
        assert_eq!(u.find(link.center_left), u.find(link.center_right));
        assert!(c_of_link(&u, &link).is_zero());
        assert_eq!(nontrivial(&u, &link), Nontriviality::No);
    }

    #[test]
    fn elliptic_link_rejects_wrong_torsor_order() {
        let mut u = Universe::new();
        let bad = TorsorClass::new("E", true, vec![4], vec![1]).unwrap();
        assert!(elliptic_link(&mut u, bad).is_err());
    }

    #[test]
    fn elliptic_twist_pairs_partition() {
        // orbits {t, -t} and the double-twist pairing on Z/5: 1 -> 2, and
        // 2 -> 4 ~ 1, so {C_1, C_2} is one unordered pair without fixed
        // points on nonzero elements.
        let mut u = Universe::new();
        let c1 = u.torsor_curve("C1", z5_torsor(1)).unwrap();
        let c2 = u.jk_class(c1, 2).unwrap();
        assert_ne!(u.find(c1), u.find(c2));
        let c4 = u.jk_class(c2, 2).unwrap();
        assert_eq!(u.find(c4), u.find(c1));
    }

    #[test]
    fn homogeneous_link_certifies_by_degree() {
        let mut u = Universe::new();
        let link = g2_link(&mut u).unwrap();
        assert_eq!(nontrivial(&u, &link), Nontriviality::Yes('A'));
        let cl = c_of_link(&u, &link);
        assert!(!cl.is_zero());
        let p1 = u.projective_space(1);
        let z14 = u.lookup("Z14").unwrap();
        let z42 = u.lookup("Z42").unwrap();
        let e14 = u.product(p1, z14).unwrap();
        let e42 = u.product(p1, z42).unwrap();
        let mut expected = GroupElement::generator(u.find(e14).basis());
        expected.add_term(u.find(e42).basis(), BigInt::from(-1));
        assert_eq!(cl, expected);
        // the sides really merged through their cell decompositions
        assert!(u.same_class(link.left, link.right));
        let p5 = u.projective_space(5);
        assert!(u.same_class(link.left, p5));
        // building the link twice reuses every declaration
        let again = g2_link(&mut u).unwrap();
        assert_eq!(again.top, link.top);
    }

    #[test]
    fn stabilized_link_upgrades_the_rule() {
        let mut u = Universe::new();
        let link = g2_link(&mut u).unwrap();
        let w = u
            .register(
                "W",
                ClassSpec {
                    dim: 2,
                    flags: ClassFlags {
                        separably_rationally_connected: true,
                        ..smooth_projective()
                    },
                    ..ClassSpec::default()
                },
            )
            .unwrap();
        let stab = stabilize(&mut u, &link, w).unwrap();
        assert_eq!(nontrivial(&u, &stab), Nontriviality::Yes('B'));
        assert!(!c_of_link(&u, &stab).is_zero());
        // a non-connected cofactor is rejected
        let curve = u
            .register("nonsrc", ClassSpec { dim: 1, flags: smooth_projective(), ..ClassSpec::default() })
            .unwrap();
        assert!(stabilize(&mut u, &link, curve).is_err());
    }

    #[test]
    fn surface_pair_link_and_family_coordinates() {
        let mut u = Universe::new();
        let mut links = Vec::new();
        for i in 0..3 {
            let s = u.register(&format!("S{i}"), surface_spec(12)).unwrap();
            let t = u.register(&format!("T{i}"), surface_spec(12)).unwrap();
            u.declare_distinct(s, t, "declared partner non-isomorphism")
                .unwrap();
            links.push(k3_link(&mut u, s, t).unwrap());
        }
        for link in &links {
            assert_eq!(nontrivial(&u, link), Nontriviality::Yes('A'));
        }
        let family = LinkFamily::new(&u, links.clone()).unwrap();
        let words: Vec<&BirWord> = family.links().iter().map(|l| &l.word).collect();
        let m = cremona_hom(&u, &family, &words).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = i64::from(i == j);
                assert_eq!(m[(i, j)], BigInt::from(expected));
            }
        }
        // image lattice over the generators is the full standard lattice
        let h = m.hnf();
        assert_eq!(h, IntMatrix::identity(3));
        // mixed word: generator 0 against the inverse of generator 1
        let mixed = BirWord::compose(&u, &links[0].word, &links[1].word.invert()).unwrap();
        let m2 = cremona_hom(&u, &family, &[&mixed]).unwrap();
        assert_eq!(m2[(0, 0)], BigInt::from(1));
        assert_eq!(m2[(0, 1)], BigInt::from(-1));
        assert_eq!(m2[(0, 2)], BigInt::from(0));
    }

    #[test]
    fn family_validation_rejects_repeated_centers() {
        let mut u = Universe::new();
        let s = u.register("S", surface_spec(12)).unwrap();
        let t = u.register("T", surface_spec(12)).unwrap();
        u.declare_distinct(s, t, "declared partner non-isomorphism")
            .unwrap();
        let link = k3_link(&mut u, s, t).unwrap();
        assert!(LinkFamily::new(&u, vec![link.clone(), link]).is_err());
    }

    #[test]
    fn k3_link_requires_complete_metadata() {
        let mut u = Universe::new();
        let s = u.register("S", surface_spec(12)).unwrap();
        let bad = u.register("bad", surface_spec(11)).unwrap();
        u.declare_distinct(s, bad, "marker").unwrap();
        assert!(matches!(
            k3_link(&mut u, s, bad),
            Err(Error::MissingDeclaration(_))
        ));
        // missing distinctness marker
        let s2 = u.register("S2", surface_spec(12)).unwrap();
        assert!(matches!(
            k3_link(&mut u, s, s2),
            Err(Error::MissingDeclaration(_))
        ));
        // degenerate self-link needs no marker
        assert!(k3_link(&mut u, s, s).is_ok());
    }

    #[test]
    fn conjugated_iso_words_have_zero_coordinates() {
        let mut u = Universe::new();
        let s = u.register("S", surface_spec(12)).unwrap();
        let t = u.register("T", surface_spec(12)).unwrap();
        u.declare_distinct(s, t, "declared partner non-isomorphism")
            .unwrap();
        let link = k3_link(&mut u, s, t).unwrap();
        let family = LinkFamily::new(&u, vec![link.clone()]).unwrap();
        // a finite-order regular automorphism of the right side, conjugated
        // through the link word
        let p4 = u.projective_space(4);
        let auto = Atom::declared_iso(&mut u, p4, p4, false).unwrap();
        let gamma = BirWord::new(&u, p4, p4, vec![(auto, Orientation::Forward)]).unwrap();
        let conj = pseudo_reg_conjugate(&u, &link.word, &gamma).unwrap();
        let m = cremona_hom(&u, &family, &[&conj]).unwrap();
        assert!(m.is_zero_row(0));
    }
}
