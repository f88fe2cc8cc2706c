//! Registry of variety classes. Classes are interned per declared label;
//! birational identification is an equivalence maintained by a union-find
//! whose roots act as the canonical representatives ("birational classes").
//! Grothendieck-style bookkeeping keeps the finer, per-label classes.
//!
//! Everything here is declared input: the registry never infers geometry it
//! was not told, with three deliberate exceptions that are sound by
//! construction — products are interned as sorted multisets of their prime
//! factors, the dense open of an irreducible cut-and-paste total is
//! birational to the total, and `P^n` carries its standard affine chart.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::abgroup::{BasisId, BasisRegistry, GroupElement};
use crate::{Error, Result};

/// Interned identifier of a registered class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn basis(self) -> BasisId {
        BasisId(self.0)
    }
}

/// Declared geometric properties of a class. All default to "not declared".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFlags {
    pub smooth: bool,
    pub projective: bool,
    pub irreducible: bool,
    pub geometrically_reduced: bool,
    pub k_trivial: bool,
    pub separably_rationally_connected: bool,
}

/// Permutation of `0..n`, written as the image list.
pub type Perm = Vec<usize>;

fn compose(a: &Perm, b: &Perm) -> Perm {
    // (a then b): i -> b[a[i]]
    a.iter().map(|&i| b[i]).collect()
}

fn is_identity(p: &Perm) -> bool {
    p.iter().enumerate().all(|(i, &j)| i == j)
}

/// The finite Galois quotient through which every declared action factors:
/// an explicit list of permutations, verified to form a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisGroup {
    pub degree: usize,
    pub elements: Vec<Perm>,
    conjugacy: Vec<usize>, // conjugacy class index per element
}

impl GaloisGroup {
    /// The one-element group (every class geometrically "as declared").
    pub fn trivial() -> Self {
        Self {
            degree: 1,
            elements: vec![vec![0]],
            conjugacy: vec![0],
        }
    }

    pub fn new(degree: usize, elements: Vec<Perm>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("galois group", "no elements listed"));
        }
        for p in &elements {
            let mut seen = vec![false; degree];
            if p.len() != degree {
                return Err(Error::invalid(
                    "galois group",
                    format!("permutation {:?} does not act on 0..{degree}", p),
                ));
            }
            for &i in p {
                if i >= degree || seen[i] {
                    return Err(Error::invalid(
                        "galois group",
                        format!("{:?} is not a permutation of 0..{degree}", p),
                    ));
                }
                seen[i] = true;
            }
        }
        if !elements.iter().any(is_identity) {
            return Err(Error::invalid("galois group", "identity is missing"));
        }
        let index_of = |p: &Perm| elements.iter().position(|q| q == p);
        for a in &elements {
            for b in &elements {
                if index_of(&compose(a, b)).is_none() {
                    return Err(Error::invalid(
                        "galois group",
                        format!("not closed under composition: {:?} * {:?}", a, b),
                    ));
                }
            }
        }
        // Closure plus finiteness gives inverses, but verify explicitly.
        for a in &elements {
            if !elements.iter().any(|b| is_identity(&compose(a, b))) {
                return Err(Error::invalid(
                    "galois group",
                    format!("no inverse for {:?}", a),
                ));
            }
        }
        // Conjugacy classes by brute force.
        let n = elements.len();
        let mut conjugacy = vec![usize::MAX; n];
        let mut next = 0;
        for i in 0..n {
            if conjugacy[i] != usize::MAX {
                continue;
            }
            conjugacy[i] = next;
            for s in &elements {
                let sinv = invert(s);
                let conj = compose(&compose(&sinv, &elements[i]), s);
                if let Some(j) = index_of(&conj) {
                    conjugacy[j] = next;
                }
            }
            next += 1;
        }
        Ok(Self {
            degree,
            elements,
            conjugacy,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn identity_index(&self) -> usize {
        self.elements
            .iter()
            .position(is_identity)
            .expect("validated group contains the identity")
    }

    /// True iff `values` is constant on conjugacy classes.
    pub fn class_constant(&self, values: &[i64]) -> bool {
        if values.len() != self.elements.len() {
            return false;
        }
        let mut per_class: BTreeMap<usize, i64> = BTreeMap::new();
        for (i, &v) in values.iter().enumerate() {
            match per_class.get(&self.conjugacy[i]) {
                Some(&w) if w != v => return false,
                Some(_) => {}
                None => {
                    per_class.insert(self.conjugacy[i], v);
                }
            }
        }
        true
    }
}

fn invert(p: &Perm) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// Action of the Galois quotient on the geometric components of one class:
/// one permutation of `0..size` per group element, in group-element order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisSet {
    pub size: usize,
    pub action: Vec<Perm>,
}

impl GaloisSet {
    fn validate(&self, group: &GaloisGroup, irreducible: bool) -> Result<()> {
        if self.action.len() != group.len() {
            return Err(Error::invalid(
                "component action",
                format!(
                    "{} permutations listed for a group of order {}",
                    self.action.len(),
                    group.len()
                ),
            ));
        }
        for p in &self.action {
            let mut seen = vec![false; self.size];
            if p.len() != self.size {
                return Err(Error::invalid(
                    "component action",
                    format!("{:?} does not act on {} components", p, self.size),
                ));
            }
            for &i in p {
                if i >= self.size || seen[i] {
                    return Err(Error::invalid(
                        "component action",
                        format!("{:?} is not a permutation", p),
                    ));
                }
                seen[i] = true;
            }
        }
        // Homomorphism: action(g*h) = action(g) then action(h).
        for (gi, g) in group.elements.iter().enumerate() {
            for (hi, h) in group.elements.iter().enumerate() {
                let gh = compose(g, h);
                let ghi = group
                    .elements
                    .iter()
                    .position(|q| *q == gh)
                    .expect("group is closed");
                if compose(&self.action[gi], &self.action[hi]) != self.action[ghi] {
                    return Err(Error::invalid(
                        "component action",
                        "listed permutations are not a group action".to_string(),
                    ));
                }
            }
        }
        if !is_identity(&self.action[group.identity_index()]) {
            return Err(Error::invalid(
                "component action",
                "identity must act trivially".to_string(),
            ));
        }
        if irreducible && !self.is_transitive() {
            return Err(Error::invalid(
                "component action",
                "class is declared irreducible but the action is not transitive".to_string(),
            ));
        }
        Ok(())
    }

    fn is_transitive(&self) -> bool {
        if self.size == 0 {
            return false;
        }
        let mut reached = vec![false; self.size];
        reached[0] = true;
        let mut frontier = vec![0usize];
        while let Some(i) = frontier.pop() {
            for p in &self.action {
                if !reached[p[i]] {
                    reached[p[i]] = true;
                    frontier.push(p[i]);
                }
            }
        }
        reached.iter().all(|&r| r)
    }
}

/// Genus-one torsor data: an element of a finite abelian ambient group
/// (written by invariant factors) attached to a base-curve label. The
/// curve-isomorphism relation `t ~ -t` is only meaningful when the base has
/// `j_not_1728` set; universes that omit the flag get `Unknown` from every
/// rule that would need it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsorClass {
    pub base: String,
    pub j_not_1728: bool,
    /// Invariant factors of the ambient group, each >= 1.
    pub ambient: Vec<u64>,
    /// Componentwise residue representative, reduced into [0, factor).
    pub element: Vec<i64>,
}

impl TorsorClass {
    pub fn new(base: &str, j_not_1728: bool, ambient: Vec<u64>, element: Vec<i64>) -> Result<Self> {
        if ambient.contains(&0) {
            return Err(Error::invalid(
                "torsor",
                "ambient invariant factors must be positive",
            ));
        }
        if element.len() != ambient.len() {
            return Err(Error::invalid(
                "torsor",
                format!(
                    "element has {} coordinates for {} invariant factors",
                    element.len(),
                    ambient.len()
                ),
            ));
        }
        let element = element
            .iter()
            .zip(ambient.iter())
            .map(|(&t, &d)| t.rem_euclid(d as i64))
            .collect();
        Ok(Self {
            base: base.to_string(),
            j_not_1728,
            ambient,
            element,
        })
    }

    fn reduced(&self, raw: Vec<i64>) -> Vec<i64> {
        raw.iter()
            .zip(self.ambient.iter())
            .map(|(&t, &d)| t.rem_euclid(d as i64))
            .collect()
    }

    /// The twist `k * t` in the ambient group (same base curve).
    pub fn jk(&self, k: i64) -> Self {
        let element = self.reduced(self.element.iter().map(|&t| t.wrapping_mul(k)).collect());
        Self {
            element,
            ..self.clone()
        }
    }

    pub fn neg(&self) -> Self {
        self.jk(-1)
    }

    pub fn is_zero(&self) -> bool {
        self.element.iter().all(|&t| t == 0)
    }

    /// Multiplicative order of the element in the ambient group.
    pub fn order(&self) -> u64 {
        let mut ord = 1u64;
        for (&t, &d) in self.element.iter().zip(self.ambient.iter()) {
            let g = gcd(t.unsigned_abs(), d);
            ord = lcm(ord, d / g);
        }
        ord
    }

    /// Canonical representative of `{t, -t}`, used for interning curves when
    /// the `t ~ -t` relation applies.
    pub fn canonical_element(&self) -> Vec<i64> {
        if self.j_not_1728 {
            self.element.clone().min(self.neg().element)
        } else {
            self.element.clone()
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Torsors over one base curve are isomorphic as curves iff their elements
/// agree up to sign (meaningful under `j_not_1728`; see [`TorsorClass`]).
pub fn curves_isomorphic(a: &TorsorClass, b: &TorsorClass) -> Result<bool> {
    if a.base != b.base || a.ambient != b.ambient {
        return Err(Error::invalid(
            "torsor comparison",
            format!("`{}` and `{}` live over different bases", a.base, b.base),
        ));
    }
    Ok(a.element == b.element || a.element == b.neg().element)
}

/// Marker for the built-in space constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Projective(u32),
    Affine(u32),
}

/// Everything declared about one class.
#[derive(Debug, Clone, Default)]
pub struct ClassSpec {
    pub dim: u32,
    pub flags: ClassFlags,
    pub picard_rank: Option<u32>,
    pub degree_invariant: Option<i64>,
    pub galois: Option<GaloisSet>,
    /// Character of the Galois action on the geometric Neron-Severi lattice,
    /// one value per group element.
    pub ns_character: Option<Vec<i64>>,
    /// Curve this class is birationally ruled over, if declared.
    pub ruled_over: Option<ClassId>,
    /// Indecomposable principally polarized factors of the declared
    /// intermediate Jacobian / Albanese datum, as labels.
    pub jacobian: Option<Vec<String>>,
    pub torsor: Option<TorsorClass>,
    /// Top-dimensional irreducible components of a declared-reducible class
    /// (repeats allowed: one entry per component, by birational type).
    pub components: Option<Vec<ClassId>>,
}

#[derive(Debug, Clone)]
pub struct ClassMeta {
    pub label: String,
    pub spec: ClassSpec,
    /// Prime factor multiset for interned products (sorted by id).
    pub factors: Option<Vec<ClassId>>,
    pub space: Option<SpaceKind>,
}

/// One cut-and-paste record: `[total] = [open] + sum of closed strata`.
/// The open part is dense when the total is irreducible, which is what
/// justifies the automatic birational identification of `open` and `total`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CutAndPaste {
    pub total: ClassId,
    pub open: ClassId,
    /// Closed strata with multiplicity one each; repeats allowed.
    pub closed: Vec<ClassId>,
}

/// Outcome of the distinctness oracle. `Distinct` names the rule that
/// certified it; `Unknown` is the honest default — the oracle never guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distinctness {
    Equal,
    Distinct(char),
    Unknown,
}

#[derive(Debug, Clone)]
pub struct Universe {
    classes: Vec<ClassMeta>,
    basis: BasisRegistry,
    parent: Vec<u32>,
    galois: GaloisGroup,
    galois_declared: bool,
    product_index: BTreeMap<Vec<ClassId>, ClassId>,
    records: Vec<CutAndPaste>,
    record_keys: BTreeSet<CutAndPaste>,
    distinct_pairs: BTreeMap<(ClassId, ClassId), String>,
    charts: BTreeMap<ClassId, Vec<ClassId>>,
    ppav_labels: BTreeSet<String>,
    point: ClassId,
}

impl Universe {
    pub fn new() -> Self {
        let mut u = Self {
            classes: Vec::new(),
            basis: BasisRegistry::new(),
            parent: Vec::new(),
            galois: GaloisGroup::trivial(),
            galois_declared: false,
            product_index: BTreeMap::new(),
            records: Vec::new(),
            record_keys: BTreeSet::new(),
            distinct_pairs: BTreeMap::new(),
            charts: BTreeMap::new(),
            ppav_labels: BTreeSet::new(),
            point: ClassId(0),
        };
        let pt = u
            .register(
                "pt",
                ClassSpec {
                    dim: 0,
                    flags: ClassFlags {
                        smooth: true,
                        projective: true,
                        irreducible: true,
                        geometrically_reduced: true,
                        k_trivial: false,
                        separably_rationally_connected: true,
                    },
                    ..ClassSpec::default()
                },
            )
            .expect("fresh registry accepts the point class");
        u.point = pt;
        u
    }

    // ----- basic accessors -------------------------------------------------

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len() as u32).map(ClassId)
    }

    pub fn meta(&self, c: ClassId) -> &ClassMeta {
        &self.classes[c.0 as usize]
    }

    pub fn label(&self, c: ClassId) -> &str {
        &self.classes[c.0 as usize].label
    }

    pub fn dim(&self, c: ClassId) -> u32 {
        self.classes[c.0 as usize].spec.dim
    }

    pub fn lookup(&self, label: &str) -> Option<ClassId> {
        self.basis.lookup(label).map(|b| ClassId(b.0))
    }

    pub fn require(&self, label: &str) -> Result<ClassId> {
        self.lookup(label)
            .ok_or_else(|| Error::unknown("class", label))
    }

    pub fn basis_registry(&self) -> &BasisRegistry {
        &self.basis
    }

    pub fn point(&self) -> ClassId {
        self.point
    }

    pub fn galois_group(&self) -> &GaloisGroup {
        &self.galois
    }

    pub fn records(&self) -> &[CutAndPaste] {
        &self.records
    }

    /// Declared affine-chart complement of `c`: the strata removed from `c`
    /// to leave `A^dim`. Looked up on the exact class first, then on any
    /// member of its birational class (lowest id wins) — distinct classes
    /// that have been merged keep their own charts.
    pub fn chart(&self, c: ClassId) -> Option<&Vec<ClassId>> {
        self.charts.get(&c).or_else(|| {
            self.members(self.find(c))
                .into_iter()
                .find_map(|m| self.charts.get(&m))
        })
    }

    pub fn ppav_labels(&self) -> &BTreeSet<String> {
        &self.ppav_labels
    }

    /// Renders a group element over the class basis with labels.
    pub fn display_element(&self, e: &GroupElement) -> String {
        e.display(&self.basis)
    }

    // ----- registration ----------------------------------------------------

    /// Declares the Galois quotient. Must happen before any class declares a
    /// component action or a character; may be set once.
    pub fn set_galois_group(&mut self, group: GaloisGroup) -> Result<()> {
        if self.galois_declared {
            return Err(Error::invalid(
                "galois group",
                "already declared for this universe",
            ));
        }
        let uses_group = self
            .classes
            .iter()
            .any(|c| c.spec.galois.is_some() || c.spec.ns_character.is_some());
        if uses_group {
            return Err(Error::invalid(
                "galois group",
                "must be declared before classes carrying actions or characters",
            ));
        }
        self.galois = group;
        self.galois_declared = true;
        Ok(())
    }

    pub fn declare_ppav_label(&mut self, label: &str) {
        self.ppav_labels.insert(label.to_string());
    }

    pub fn register(&mut self, label: &str, spec: ClassSpec) -> Result<ClassId> {
        self.register_inner(label, spec, None, None)
    }

    fn register_inner(
        &mut self,
        label: &str,
        spec: ClassSpec,
        factors: Option<Vec<ClassId>>,
        space: Option<SpaceKind>,
    ) -> Result<ClassId> {
        if let Some(g) = &spec.galois {
            g.validate(&self.galois, spec.flags.irreducible)?;
        }
        if let Some(ch) = &spec.ns_character {
            if !self.galois.class_constant(ch) {
                return Err(Error::invalid(
                    "ns character",
                    format!("`{label}`: values are not constant on conjugacy classes"),
                ));
            }
        }
        if let Some(comps) = &spec.components {
            if spec.flags.irreducible {
                return Err(Error::invalid(
                    "class",
                    format!("`{label}` declares components but is flagged irreducible"),
                ));
            }
            for &comp in comps {
                self.check_id(comp)?;
                if self.dim(comp) > spec.dim {
                    return Err(Error::DimensionMismatch {
                        context: format!("component of `{label}`"),
                        got: self.dim(comp),
                        expected: spec.dim,
                    });
                }
            }
        }
        if let Some(r) = spec.ruled_over {
            self.check_id(r)?;
            if self.dim(r) != 1 {
                return Err(Error::DimensionMismatch {
                    context: format!("ruling base of `{label}` must be a curve"),
                    got: self.dim(r),
                    expected: 1,
                });
            }
        }
        if let Some(t) = &spec.torsor {
            if spec.dim != 1 {
                return Err(Error::DimensionMismatch {
                    context: format!("torsor class `{label}` must be a curve"),
                    got: spec.dim,
                    expected: 1,
                });
            }
            self.ppav_labels.insert(t.base.clone());
        }
        let id = ClassId(self.basis.intern_fresh(label)?.0);
        self.classes.push(ClassMeta {
            label: label.to_string(),
            spec,
            factors,
            space,
        });
        self.parent.push(id.0);
        Ok(id)
    }

    fn check_id(&self, c: ClassId) -> Result<()> {
        if (c.0 as usize) < self.classes.len() {
            Ok(())
        } else {
            Err(Error::unknown("class id", format!("{}", c.0)))
        }
    }

    /// Get-or-create used by generated auxiliary classes: re-registering the
    /// same label is fine as long as the dimension agrees.
    pub fn register_or_get(&mut self, label: &str, spec: ClassSpec) -> Result<ClassId> {
        if let Some(existing) = self.lookup(label) {
            if self.dim(existing) != spec.dim {
                return Err(Error::DimensionMismatch {
                    context: format!("re-registration of `{label}`"),
                    got: spec.dim,
                    expected: self.dim(existing),
                });
            }
            return Ok(existing);
        }
        self.register(label, spec)
    }

    // ----- built-in spaces and products ------------------------------------

    /// `P^n`, interned as `P{n}`. Carries its standard chart, so `P^n`,
    /// `A^n` and every lower `P^k` chain together via cut-and-paste.
    pub fn projective_space(&mut self, n: u32) -> ClassId {
        if n == 0 {
            return self.point;
        }
        let label = format!("P{n}");
        if let Some(id) = self.lookup(&label) {
            return id;
        }
        let prev = self.projective_space(n - 1);
        let aff = self.affine_space(n);
        let id = self
            .register_inner(
                &label,
                ClassSpec {
                    dim: n,
                    flags: ClassFlags {
                        smooth: true,
                        projective: true,
                        irreducible: true,
                        geometrically_reduced: true,
                        k_trivial: false,
                        separably_rationally_connected: true,
                    },
                    picard_rank: Some(1),
                    ..ClassSpec::default()
                },
                None,
                Some(SpaceKind::Projective(n)),
            )
            .expect("fresh space label");
        self.add_record(id, aff, vec![prev])
            .expect("standard chart of projective space");
        self.charts.insert(id, vec![prev]);
        id
    }

    /// `A^n`, interned as `A{n}` (`A^0` is the point).
    pub fn affine_space(&mut self, n: u32) -> ClassId {
        if n == 0 {
            return self.point;
        }
        let label = format!("A{n}");
        if let Some(id) = self.lookup(&label) {
            return id;
        }
        self.register_inner(
            &label,
            ClassSpec {
                dim: n,
                flags: ClassFlags {
                    smooth: true,
                    projective: false,
                    irreducible: true,
                    geometrically_reduced: true,
                    k_trivial: false,
                    separably_rationally_connected: true,
                },
                ..ClassSpec::default()
            },
            None,
            Some(SpaceKind::Affine(n)),
        )
        .expect("fresh space label")
    }

    /// Interned product of two classes. Products are stored as sorted
    /// multisets of prime (non-product) factors, so the operation is
    /// associative and commutative by construction and the point is the
    /// identity. Repeated calls return the identical id.
    pub fn product(&mut self, a: ClassId, b: ClassId) -> Result<ClassId> {
        self.check_id(a)?;
        self.check_id(b)?;
        let mut factors = Vec::new();
        self.flatten_into(a, &mut factors);
        self.flatten_into(b, &mut factors);
        factors.retain(|&f| f != self.point);
        factors.sort();
        match factors.len() {
            0 => return Ok(self.point),
            1 => return Ok(factors[0]),
            _ => {}
        }
        if let Some(&id) = self.product_index.get(&factors) {
            return Ok(id);
        }
        let dim = factors.iter().map(|&f| self.dim(f)).sum();
        let all = |f: fn(&ClassFlags) -> bool| factors.iter().all(|&c| f(&self.meta(c).spec.flags));
        let geom_reducible = |u: &Self, c: ClassId| {
            u.meta(c)
                .spec
                .galois
                .as_ref()
                .map(|g| g.size > 1)
                .unwrap_or(false)
        };
        let irreducible = all(|f| f.irreducible)
            && factors.iter().filter(|&&c| geom_reducible(self, c)).count() <= 1;
        let flags = ClassFlags {
            smooth: all(|f| f.smooth),
            projective: all(|f| f.projective),
            irreducible,
            geometrically_reduced: all(|f| f.geometrically_reduced),
            k_trivial: all(|f| f.k_trivial),
            separably_rationally_connected: all(|f| f.separably_rationally_connected),
        };
        // A product is recorded as ruled over the unique curve factor that
        // is not itself rationally connected, when the remaining factors all
        // are; that is the shape every ruled-surface query here cares about.
        let src = |u: &Self, c: ClassId| u.meta(c).spec.flags.separably_rationally_connected;
        let non_src: Vec<ClassId> = factors.iter().copied().filter(|&c| !src(self, c)).collect();
        let ruled_over = match non_src.as_slice() {
            [c] if self.dim(*c) == 1 => Some(*c),
            _ => None,
        };
        let label = {
            let mut parts: Vec<&str> = factors.iter().map(|&f| self.label(f)).collect();
            parts.sort();
            parts.join("*")
        };
        // A product of reducible classes is itself reducible: its top
        // components are the products of the factors' top components.
        let mut tuples: Vec<Vec<ClassId>> = vec![Vec::new()];
        for &f in &factors {
            let comps = self.top_components(f);
            let mut next = Vec::new();
            for t in &tuples {
                for &comp in &comps {
                    let mut t2 = t.clone();
                    t2.push(comp);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let components = if tuples.len() > 1 {
            let mut comps = Vec::new();
            for t in &tuples {
                comps.push(self.product_many(t)?);
            }
            Some(comps)
        } else {
            None
        };
        let flags = ClassFlags {
            irreducible: flags.irreducible && components.is_none(),
            ..flags
        };
        let id = self.register_inner(
            &label,
            ClassSpec {
                dim,
                flags,
                ruled_over,
                components,
                ..ClassSpec::default()
            },
            Some(factors.clone()),
            None,
        )?;
        self.product_index.insert(factors, id);
        Ok(id)
    }

    /// Irreducible top-dimensional components of `c`, recursively expanded
    /// through declared component lists (repeats preserved); `[c]` when no
    /// components are declared. Terminates because components are always
    /// registered before the classes that list them.
    pub fn top_components(&self, c: ClassId) -> Vec<ClassId> {
        match &self.meta(c).spec.components {
            None => vec![c],
            Some(comps) => {
                let n = self.dim(c);
                let mut out = Vec::new();
                for &comp in comps {
                    if self.dim(comp) == n {
                        out.extend(self.top_components(comp));
                    }
                }
                out
            }
        }
    }

    pub fn product_many(&mut self, factors: &[ClassId]) -> Result<ClassId> {
        let mut acc = self.point;
        for &f in factors {
            acc = self.product(acc, f)?;
        }
        Ok(acc)
    }

    fn flatten_into(&self, c: ClassId, out: &mut Vec<ClassId>) {
        match &self.meta(c).factors {
            Some(fs) => out.extend(fs.iter().copied()),
            None => out.push(c),
        }
    }

    /// The interned product with the listed factor multiset, if any.
    pub fn find_product(&self, factors: &[ClassId]) -> Option<ClassId> {
        let mut fs = Vec::new();
        for &f in factors {
            self.flatten_into(f, &mut fs);
        }
        fs.retain(|&f| f != self.point);
        fs.sort();
        match fs.len() {
            0 => Some(self.point),
            1 => Some(fs[0]),
            _ => self.product_index.get(&fs).copied(),
        }
    }

    /// Prime factors of the birational class of `c`, mapped to roots and
    /// sorted: the first product decomposition found among the members of
    /// the root, or the singleton `[root]` for atoms.
    pub fn root_factors(&self, c: ClassId) -> Vec<ClassId> {
        let root = self.find(c);
        for id in self.members(root) {
            if let Some(fs) = &self.meta(id).factors {
                let mut rs: Vec<ClassId> = fs.iter().map(|&f| self.find(f)).collect();
                rs.sort();
                return rs;
            }
        }
        vec![root]
    }

    // ----- birational identification ---------------------------------------

    pub fn find(&self, c: ClassId) -> ClassId {
        let mut i = c.0;
        while self.parent[i as usize] != i {
            i = self.parent[i as usize];
        }
        ClassId(i)
    }

    pub fn same_class(&self, a: ClassId, b: ClassId) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn members(&self, root: ClassId) -> Vec<ClassId> {
        let root = self.find(root);
        self.ids().filter(|&c| self.find(c) == root).collect()
    }

    /// Declares `a` and `b` birationally equivalent. Refuses to merge classes
    /// the oracle already certifies as distinct, and refuses dimension
    /// mismatches. The smaller root id stays canonical.
    pub fn declare_birational(&mut self, a: ClassId, b: ClassId) -> Result<()> {
        self.check_id(a)?;
        self.check_id(b)?;
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        if self.dim(ra) != self.dim(rb) {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "declare_birational(`{}`, `{}`)",
                    self.label(a),
                    self.label(b)
                ),
                got: self.dim(rb),
                expected: self.dim(ra),
            });
        }
        if let Distinctness::Distinct(rule) = self.distinct(a, b) {
            return Err(Error::Contradiction {
                a: self.label(a).to_string(),
                b: self.label(b).to_string(),
                rule,
            });
        }
        let (keep, drop) = if ra.0 <= rb.0 { (ra, rb) } else { (rb, ra) };
        self.parent[drop.0 as usize] = keep.0;
        // Path-compress eagerly; the registry is small.
        for i in 0..self.parent.len() {
            let r = self.find(ClassId(i as u32));
            self.parent[i] = r.0;
        }
        self.renormalize_products()?;
        Ok(())
    }

    /// After merges, products whose factor multisets now share roots are
    /// themselves birational; keep merging until stable.
    fn renormalize_products(&mut self) -> Result<()> {
        loop {
            let mut by_key: BTreeMap<Vec<ClassId>, ClassId> = BTreeMap::new();
            let mut to_merge: Option<(ClassId, ClassId)> = None;
            for (&_, &id) in &self.product_index {
                let key = self.root_key_of_product(id);
                match by_key.get(&key) {
                    Some(&other) if !self.same_class(other, id) => {
                        to_merge = Some((other, id));
                        break;
                    }
                    Some(_) => {}
                    None => {
                        by_key.insert(key, id);
                    }
                }
            }
            match to_merge {
                Some((a, b)) => self.declare_birational(a, b)?,
                None => return Ok(()),
            }
        }
    }

    fn root_key_of_product(&self, id: ClassId) -> Vec<ClassId> {
        let mut key: Vec<ClassId> = self
            .meta(id)
            .factors
            .as_ref()
            .expect("product nodes carry factors")
            .iter()
            .map(|&f| self.find(f))
            .collect();
        key.sort();
        key
    }

    /// Declares that `a` and `b` are non-isomorphic (a discriminating marker
    /// the distinctness oracle may cite under rule A). Refuses pairs that
    /// were already identified.
    pub fn declare_distinct(&mut self, a: ClassId, b: ClassId, reason: &str) -> Result<()> {
        self.check_id(a)?;
        self.check_id(b)?;
        if self.same_class(a, b) {
            return Err(Error::Contradiction {
                a: self.label(a).to_string(),
                b: self.label(b).to_string(),
                rule: 'A',
            });
        }
        let (ra, rb) = (self.find(a), self.find(b));
        let key = if ra.0 <= rb.0 { (ra, rb) } else { (rb, ra) };
        self.distinct_pairs.insert(key, reason.to_string());
        Ok(())
    }

    /// Declares an affine chart: `class` minus the listed strata is `A^dim`.
    /// Recorded as a cut-and-paste with open part `A^dim`, which also
    /// identifies the class birationally with affine (hence projective) space.
    pub fn declare_affine_chart(&mut self, class: ClassId, strata: Vec<ClassId>) -> Result<()> {
        self.check_id(class)?;
        let n = self.dim(class);
        if n == 0 {
            return Err(Error::invalid("affine chart", "class must have dim >= 1"));
        }
        let aff = self.affine_space(n);
        self.add_record(class, aff, strata.clone())?;
        self.charts.entry(class).or_insert(strata);
        Ok(())
    }

    // ----- cut-and-paste records -------------------------------------------

    /// Adds `[total] = [open] + closed strata`. When the total carries no
    /// declared components, the open part is dense, so the two classes are
    /// identified birationally (which may surface a contradiction error).
    pub fn add_record(
        &mut self,
        total: ClassId,
        open: ClassId,
        closed: Vec<ClassId>,
    ) -> Result<()> {
        self.check_id(total)?;
        self.check_id(open)?;
        if self.dim(open) != self.dim(total) {
            return Err(Error::DimensionMismatch {
                context: format!("open part of `{}`", self.label(total)),
                got: self.dim(open),
                expected: self.dim(total),
            });
        }
        for &z in &closed {
            self.check_id(z)?;
            if self.dim(z) > self.dim(total) {
                return Err(Error::DimensionMismatch {
                    context: format!("closed stratum of `{}`", self.label(total)),
                    got: self.dim(z),
                    expected: self.dim(total),
                });
            }
            if self.dim(z) == self.dim(total) && self.meta(total).spec.components.is_none() {
                return Err(Error::invalid(
                    "cut-and-paste",
                    format!(
                        "stratum `{}` has full dimension but `{}` declares no components",
                        self.label(z),
                        self.label(total)
                    ),
                ));
            }
        }
        let mut rec = CutAndPaste {
            total,
            open,
            closed,
        };
        rec.closed.sort();
        if self.record_keys.contains(&rec) {
            return Ok(());
        }
        if self.meta(total).spec.components.is_none() {
            self.declare_birational(total, open)?;
        }
        self.record_keys.insert(rec.clone());
        self.records.push(rec);
        Ok(())
    }

    // ----- torsor curves ---------------------------------------------------

    /// Interns the genus-one curve with the given torsor data. Curves over
    /// one base are identified along `t ~ -t` (when meaningful), so asking
    /// for the same curve twice — possibly via a twist — returns the same id.
    pub fn torsor_curve(&mut self, label: &str, torsor: TorsorClass) -> Result<ClassId> {
        if let Some(existing) = self.find_torsor_curve(&torsor) {
            return Ok(existing);
        }
        let jacobian = Some(vec![torsor.base.clone()]);
        self.register(
            label,
            ClassSpec {
                dim: 1,
                flags: ClassFlags {
                    smooth: true,
                    projective: true,
                    irreducible: true,
                    geometrically_reduced: true,
                    k_trivial: true,
                    separably_rationally_connected: false,
                },
                picard_rank: Some(1),
                jacobian,
                torsor: Some(torsor),
                ..ClassSpec::default()
            },
        )
    }

    fn find_torsor_curve(&self, torsor: &TorsorClass) -> Option<ClassId> {
        let key = torsor.canonical_element();
        self.ids().find(|&c| {
            self.meta(c)
                .spec
                .torsor
                .as_ref()
                .map(|t| {
                    t.base == torsor.base
                        && t.ambient == torsor.ambient
                        && t.canonical_element() == key
                })
                .unwrap_or(false)
        })
    }

    /// The curve of the `k`-fold twist of the torsor carried by `c`,
    /// registered on demand with a derived label.
    pub fn jk_class(&mut self, c: ClassId, k: i64) -> Result<ClassId> {
        let torsor = self
            .meta(c)
            .spec
            .torsor
            .clone()
            .ok_or_else(|| Error::MissingDeclaration(format!("`{}` has no torsor data", self.label(c))))?;
        let twisted = torsor.jk(k);
        let label = format!("J{k}({})", self.label(c));
        self.torsor_curve(&label, twisted)
    }

    // ----- effective (root-level) metadata ---------------------------------

    /// First declared value of `get` among the members of the root of `c`,
    /// scanning ids in ascending order (deterministic).
    pub fn effective<T: Clone>(
        &self,
        c: ClassId,
        get: impl Fn(&ClassSpec) -> Option<T>,
    ) -> Option<T> {
        let root = self.find(c);
        self.members(root)
            .into_iter()
            .find_map(|id| get(&self.meta(id).spec))
    }

    fn effective_flag(&self, c: ClassId, get: impl Fn(&ClassFlags) -> bool) -> bool {
        let root = self.find(c);
        self.members(root)
            .into_iter()
            .any(|id| get(&self.meta(id).spec.flags))
    }

    pub fn is_src(&self, c: ClassId) -> bool {
        self.effective_flag(c, |f| f.separably_rationally_connected)
    }

    pub fn is_space(&self, c: ClassId) -> bool {
        let root = self.find(c);
        self.members(root)
            .into_iter()
            .any(|id| self.meta(id).space.is_some())
    }

    pub fn effective_torsor(&self, c: ClassId) -> Option<TorsorClass> {
        self.effective(c, |s| s.torsor.clone())
    }

    // ----- the distinctness oracle -----------------------------------------

    /// Three-valued comparison of birational classes. `Distinct` answers are
    /// certified by one of three rules:
    ///
    /// * **A** — both classes are K-trivial of Picard rank one and carry a
    ///   discriminating invariant: unequal degree invariants, non-isomorphic
    ///   torsor data, or an explicit declared non-isomorphism marker.
    /// * **B** — products `Z x V` and `Z' x V` with the same separably
    ///   rationally connected cofactor `V` (beyond plain `P^k`/`A^k`
    ///   factors) whose cores are distinct via rule A.
    /// * **C** — products `P^m x C` and `P^m x C'` over non-isomorphic
    ///   genus-one torsors (needs `j_not_1728` on both).
    ///
    /// Anything else is `Unknown`. Certified answers survive unrelated
    /// merges because they depend only on root-level declared data.
    pub fn distinct(&self, a: ClassId, b: ClassId) -> Distinctness {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Distinctness::Equal;
        }
        if self.rule_a(ra, rb) {
            return Distinctness::Distinct('A');
        }
        // Product rule: strip a common, separably rationally connected
        // cofactor and compare the leftover pair.
        let fa = self.root_factors(ra);
        let fb = self.root_factors(rb);
        if fa.len() > 1 || fb.len() > 1 {
            if let Some((za, zb, common)) = single_difference(&fa, &fb) {
                if common.iter().all(|&v| self.is_src(v)) {
                    if self.torsor_distinct(za, zb) {
                        return Distinctness::Distinct('C');
                    }
                    if let Distinctness::Distinct(_) = self.distinct(za, zb) {
                        let stabilized = common.iter().any(|&v| !self.is_space(v));
                        return Distinctness::Distinct(if stabilized { 'B' } else { 'A' });
                    }
                }
            }
        }
        Distinctness::Unknown
    }

    fn rule_a(&self, ra: ClassId, rb: ClassId) -> bool {
        let rigid = |c: ClassId| {
            self.effective_flag(c, |f| f.k_trivial)
                && self.effective(c, |s| s.picard_rank) == Some(1)
        };
        if !rigid(ra) || !rigid(rb) {
            return false;
        }
        let (da, db) = (
            self.effective(ra, |s| s.degree_invariant),
            self.effective(rb, |s| s.degree_invariant),
        );
        if let (Some(x), Some(y)) = (da, db) {
            if x != y {
                return true;
            }
        }
        if self.torsor_distinct(ra, rb) {
            return true;
        }
        let key = if ra.0 <= rb.0 { (ra, rb) } else { (rb, ra) };
        self.distinct_pairs.contains_key(&key)
    }

    /// Non-isomorphism of torsor curves: same base and ambient, the sign
    /// relation is meaningful on both sides, and `t != ±t'`.
    fn torsor_distinct(&self, a: ClassId, b: ClassId) -> bool {
        match (self.effective_torsor(a), self.effective_torsor(b)) {
            (Some(ta), Some(tb)) => {
                ta.base == tb.base
                    && ta.ambient == tb.ambient
                    && ta.j_not_1728
                    && tb.j_not_1728
                    && !curves_isomorphic(&ta, &tb).unwrap_or(true)
            }
            _ => false,
        }
    }
}

impl Default for Universe {
    fn default() -> Self {
        Self::new()
    }
}

/// If the multisets differ in exactly one element on each side, returns
/// `(left_extra, right_extra, common)`.
fn single_difference(
    a: &[ClassId],
    b: &[ClassId],
) -> Option<(ClassId, ClassId, Vec<ClassId>)> {
    let mut counts: BTreeMap<ClassId, i64> = BTreeMap::new();
    for &x in a {
        *counts.entry(x).or_insert(0) += 1;
    }
    for &y in b {
        *counts.entry(y).or_insert(0) -= 1;
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (&c, &n) in &counts {
        for _ in 0..n.abs() {
            if n > 0 {
                left.push(c);
            } else if n < 0 {
                right.push(c);
            }
        }
    }
    if left.len() != 1 || right.len() != 1 {
        return None;
    }
    let mut common = Vec::new();
    let mut used = left.clone();
    for &x in a {
        if used.contains(&x) {
            used.retain(|&u| u != x);
        } else {
            common.push(x);
        }
    }
    Some((left[0], right[0], common))
}
