//! Presented abelian groups (free group on listed generators modulo the row
//! lattice of a relation matrix) plus exact membership and comparison
//! primitives for subgroups given by generating sets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::{BasisId, GroupElement, IntMatrix};
use crate::{Error, Result};

/// Collects the union of supports of `elems`, sorted, as a column basis.
pub fn joint_support(elems: &[&GroupElement]) -> Vec<BasisId> {
    let mut ids: Vec<BasisId> = elems
        .iter()
        .flat_map(|e| e.support().collect::<Vec<_>>())
        .collect();
    ids.sort();
    ids.dedup();
    ids
}

/// Writes `e` as a coordinate row over `order`; fails if the support of `e`
/// is not contained in `order`.
pub fn vectorize(e: &GroupElement, order: &[BasisId]) -> Result<Vec<BigInt>> {
    let mut row = vec![BigInt::zero(); order.len()];
    let pos: std::collections::BTreeMap<BasisId, usize> =
        order.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    for (id, c) in e.iter() {
        match pos.get(&id) {
            Some(&i) => row[i] = c.clone(),
            None => {
                return Err(Error::invalid(
                    "element",
                    format!("basis symbol e{} outside the generator list", id.0),
                ))
            }
        }
    }
    Ok(row)
}

/// Solves `y * h = x` for an integer row `y`, where `h` is in canonical
/// Hermite form. Returns `None` when no integer solution exists.
fn solve_against_hnf(h: &IntMatrix, x: &[BigInt]) -> Option<Vec<BigInt>> {
    let mut rem = x.to_vec();
    let mut y = vec![BigInt::zero(); h.rows()];
    for r in 0..h.rows() {
        let Some(p) = (0..h.cols()).find(|&c| !h[(r, c)].is_zero()) else {
            continue;
        };
        let (q, s) = rem[p].div_rem(&h[(r, p)]);
        if !s.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for c in 0..h.cols() {
                let t = &h[(r, c)] * &q;
                rem[c] -= t;
            }
        }
        y[r] = q;
    }
    if rem.iter().all(Zero::is_zero) {
        Some(y)
    } else {
        None
    }
}

/// Decides membership of `x` in the row lattice of `m` and, on success,
/// returns the exact integer coefficients over the rows of `m`.
pub fn row_lattice_member(m: &IntMatrix, x: &[BigInt]) -> Option<Vec<BigInt>> {
    let (h, u) = m.hnf_with_transform();
    let y = solve_against_hnf(&h, x)?;
    // x = y * H = y * U * m, so the certificate is y * U.
    let mut coeffs = vec![BigInt::zero(); m.rows()];
    for r in 0..u.rows() {
        if y[r].is_zero() {
            continue;
        }
        for c in 0..u.cols() {
            let t = &u[(r, c)] * &y[r];
            coeffs[c] += t;
        }
    }
    Some(coeffs)
}

/// Membership of `x` in the subgroup generated by `gens`, with an exact
/// integer certificate: `Some(cs)` means `x = sum cs[i] * gens[i]`.
pub fn member(x: &GroupElement, gens: &[GroupElement]) -> Option<Vec<BigInt>> {
    let mut refs: Vec<&GroupElement> = gens.iter().collect();
    refs.push(x);
    let order = joint_support(&refs);
    let rows: Vec<Vec<BigInt>> = gens
        .iter()
        .map(|g| vectorize(g, &order).expect("support is inside its own union"))
        .collect();
    let m = if order.is_empty() {
        // Everything in sight is zero; x = 0 is the empty combination.
        return if x.is_zero() {
            Some(vec![BigInt::zero(); gens.len()])
        } else {
            None
        };
    } else {
        IntMatrix::from_rows(rows)
    };
    let xv = vectorize(x, &order).expect("support is inside its own union");
    if m.rows() == 0 {
        return if xv.iter().all(Zero::is_zero) {
            Some(Vec::new())
        } else {
            None
        };
    }
    row_lattice_member(&m, &xv)
}

/// Equality of the subgroups generated by `a` and `b`, via canonical Hermite
/// forms over the joint support (unique form ⇔ unique lattice).
pub fn subgroup_equal(a: &[GroupElement], b: &[GroupElement]) -> bool {
    let refs: Vec<&GroupElement> = a.iter().chain(b.iter()).collect();
    let order = joint_support(&refs);
    let to_matrix = |gens: &[GroupElement]| -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|g| vectorize(g, &order).expect("support is inside its own union"))
            .collect();
        if rows.is_empty() {
            IntMatrix::zero(0, order.len())
        } else {
            IntMatrix::from_rows(rows)
        }
    };
    let nonzero_rows = |m: &IntMatrix| -> Vec<Vec<BigInt>> {
        let h = m.hnf();
        (0..h.rows())
            .filter(|&r| !h.is_zero_row(r))
            .map(|r| h.row(r).to_vec())
            .collect()
    };
    nonzero_rows(&to_matrix(a)) == nonzero_rows(&to_matrix(b))
}

/// Equality of the row lattices of two matrices over the same column space.
pub fn subgroup_equal_rows(a: &IntMatrix, b: &IntMatrix) -> bool {
    assert_eq!(a.cols(), b.cols(), "row lattices over different column spaces");
    let nonzero_rows = |m: &IntMatrix| -> Vec<Vec<BigInt>> {
        let h = m.hnf();
        (0..h.rows())
            .filter(|&r| !h.is_zero_row(r))
            .map(|r| h.row(r).to_vec())
            .collect()
    };
    nonzero_rows(a) == nonzero_rows(b)
}

/// Finitely presented abelian group: the free group on `generators` modulo
/// the row lattice of `relations` (one relator per row, columns parallel to
/// the generator list).
#[derive(Debug, Clone)]
pub struct PresentedGroup {
    pub generators: Vec<BasisId>,
    pub relations: IntMatrix,
}

/// Isomorphism type of a finitely generated abelian group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientShape {
    /// Invariant factors > 1, in divisibility order.
    pub torsion: Vec<BigInt>,
    pub free_rank: usize,
}

impl PresentedGroup {
    pub fn new(generators: Vec<BasisId>, relations: IntMatrix) -> Result<Self> {
        if relations.rows() > 0 && relations.cols() != generators.len() {
            return Err(Error::invalid(
                "presentation",
                format!(
                    "relation width {} does not match generator count {}",
                    relations.cols(),
                    generators.len()
                ),
            ));
        }
        let relations = if relations.rows() == 0 {
            IntMatrix::zero(0, generators.len())
        } else {
            relations
        };
        Ok(Self {
            generators,
            relations,
        })
    }

    pub fn vectorize(&self, e: &GroupElement) -> Result<Vec<BigInt>> {
        vectorize(e, &self.generators)
    }

    /// True iff `e` lies in the relation lattice, i.e. vanishes in the
    /// quotient group.
    pub fn is_zero(&self, e: &GroupElement) -> Result<bool> {
        let v = self.vectorize(e)?;
        if v.iter().all(Zero::is_zero) {
            return Ok(true);
        }
        if self.relations.rows() == 0 {
            return Ok(false);
        }
        Ok(row_lattice_member(&self.relations, &v).is_some())
    }

    /// Equality of two elements in the quotient.
    pub fn elements_equal(&self, a: &GroupElement, b: &GroupElement) -> Result<bool> {
        self.is_zero(&a.sub(b))
    }
}

/// Invariant factors and free rank of the quotient of a presentation,
/// read off the Smith normal form of the relation matrix.
pub fn quotient_invariants(g: &PresentedGroup) -> QuotientShape {
    if g.relations.rows() == 0 {
        return QuotientShape {
            torsion: Vec::new(),
            free_rank: g.generators.len(),
        };
    }
    let (d, _, _) = g.relations.snf();
    let nonzero = d.iter().filter(|x| !x.is_zero()).count();
    let one = BigInt::from(1);
    QuotientShape {
        torsion: d.into_iter().filter(|x| !x.is_zero() && *x > one).collect(),
        free_rank: g.generators.len() - nonzero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abgroup::BasisRegistry;

    fn basis2() -> (BasisRegistry, BasisId, BasisId) {
        let mut reg = BasisRegistry::new();
        let a = reg.intern("e1");
        let b = reg.intern("e2");
        (reg, a, b)
    }

    #[test]
    fn member_sum_and_difference() {
        // 2*e1 = 1*(e1+e2) + 1*(e1-e2)
        let (_, a, b) = basis2();
        let x = GroupElement::from_terms([(a, 2)]);
        let g1 = GroupElement::from_terms([(a, 1), (b, 1)]);
        let g2 = GroupElement::from_terms([(a, 1), (b, -1)]);
        let cs = member(&x, &[g1.clone(), g2.clone()]).expect("2e1 is in the lattice");
        assert_eq!(cs, vec![BigInt::from(1), BigInt::from(1)]);
        // verify the certificate exactly
        let recomputed = g1.scale(&cs[0]).add(&g2.scale(&cs[1]));
        assert_eq!(recomputed, x);
    }

    #[test]
    fn member_parity_obstruction() {
        let (_, a, _) = basis2();
        let x = GroupElement::generator(a);
        let g = GroupElement::from_terms([(a, 2)]);
        assert!(member(&x, &[g]).is_none());
    }

    #[test]
    fn member_zero_in_empty() {
        assert_eq!(member(&GroupElement::zero(), &[]), Some(Vec::new()));
        let (_, a, _) = basis2();
        assert!(member(&GroupElement::generator(a), &[]).is_none());
    }

    #[test]
    fn subgroup_equal_swapped_generators() {
        let (_, a, b) = basis2();
        let ea = GroupElement::generator(a);
        let eb = GroupElement::generator(b);
        assert!(subgroup_equal(
            &[ea.clone(), eb.clone()],
            &[eb.add(&ea), eb.clone()]
        ));
        assert!(!subgroup_equal(&[ea.scale(&BigInt::from(2))], &[ea]));
    }

    #[test]
    fn quotient_invariants_examples() {
        let (_, a, b) = basis2();
        // <a, b | 2a> = Z/2 + Z
        let g = PresentedGroup::new(vec![a, b], IntMatrix::from_rows(vec![vec![2, 0]])).unwrap();
        let q = quotient_invariants(&g);
        assert_eq!(q.torsion, vec![BigInt::from(2)]);
        assert_eq!(q.free_rank, 1);
        // <a | > = Z
        let free = PresentedGroup::new(vec![a], IntMatrix::zero(0, 1)).unwrap();
        let qf = quotient_invariants(&free);
        assert!(qf.torsion.is_empty());
        assert_eq!(qf.free_rank, 1);
        // <a, b | a+b, a-b> = Z/2
        let tor = PresentedGroup::new(
            vec![a, b],
            IntMatrix::from_rows(vec![vec![1, 1], vec![1, -1]]),
        )
        .unwrap();
        let qt = quotient_invariants(&tor);
        assert_eq!(qt.torsion, vec![BigInt::from(2)]);
        assert_eq!(qt.free_rank, 0);
    }

    #[test]
    fn presented_zero_test() {
        let (_, a, b) = basis2();
        let g = PresentedGroup::new(
            vec![a, b],
            IntMatrix::from_rows(vec![vec![1, -1]]), // a = b
        )
        .unwrap();
        let diff = GroupElement::generator(a).sub(&GroupElement::generator(b));
        assert!(g.is_zero(&diff).unwrap());
        assert!(!g.is_zero(&GroupElement::generator(a)).unwrap());
    }
}
