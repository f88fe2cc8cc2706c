//! Independent numerical oracle: brute-force point counting of explicit
//! affine and projective varieties over small finite fields, with verdicts
//! for cut-and-paste, blow-up, and linear-extension counting identities.
//!
//! Counting is an order-independent sum over an explicit representative
//! set, so parallel and serial enumeration agree exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;

use crate::abgroup::GroupElement;
use crate::universe::{ClassId, CutAndPaste, Universe};
use crate::{Error, Result};

/// Default enumeration budget (points evaluated per count).
pub const DEFAULT_BUDGET: u128 = 100_000_000;

// ---------------------------------------------------------------------------
// finite fields
// ---------------------------------------------------------------------------

/// A small finite field with fully tabulated arithmetic. Prime order uses
/// residues directly; prime-power order uses a polynomial basis over the
/// prime subfield, with the modulus chosen as the first monic polynomial
/// that yields invertibility of every nonzero element.
#[derive(Debug, Clone)]
pub struct Fq {
    q: usize,
    p: usize,
    add_t: Vec<u8>,
    mul_t: Vec<u8>,
    neg_t: Vec<u8>,
    inv_t: Vec<u8>,
}

const MAX_Q: usize = 128;

fn prime_power(q: usize) -> Option<(usize, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|&d| q.is_multiple_of(d)).expect("q >= 2 has a divisor");
    let mut m = q;
    let mut k = 0;
    while m.is_multiple_of(p) {
        m /= p;
        k += 1;
    }
    (m == 1).then_some((p, k))
}

impl Fq {
    pub fn new(q: u64) -> Result<Self> {
        let q = usize::try_from(q)
            .ok()
            .filter(|&q| q <= MAX_Q)
            .ok_or_else(|| Error::invalid("field order", format!("{q} is out of range")))?;
        let (p, k) = prime_power(q).ok_or_else(|| {
            Error::invalid("field order", format!("{q} is not a prime power"))
        })?;
        if k == 1 {
            return Ok(Self::prime(p));
        }
        // Polynomial basis: element i encodes base-p digits, low degree
        // first. Try monic moduli x^k + m in encoding order until every
        // nonzero element is invertible.
        for m in 0..q {
            if let Some(f) = Self::with_modulus(p, k, m) {
                return Ok(f);
            }
        }
        unreachable!("an irreducible monic polynomial of every degree exists")
    }

    fn prime(p: usize) -> Self {
        let q = p;
        let mut add_t = vec![0u8; q * q];
        let mut mul_t = vec![0u8; q * q];
        for a in 0..q {
            for b in 0..q {
                add_t[a * q + b] = ((a + b) % p) as u8;
                mul_t[a * q + b] = ((a * b) % p) as u8;
            }
        }
        Self::finish(q, p, add_t, mul_t).expect("residue arithmetic is a field")
    }

    fn with_modulus(p: usize, k: u32, m: usize) -> Option<Self> {
        let q = p.pow(k);
        let digits = |mut x: usize| -> Vec<usize> {
            let mut d = vec![0; k as usize];
            for slot in d.iter_mut() {
                *slot = x % p;
                x /= p;
            }
            d
        };
        let encode = |d: &[usize]| -> usize {
            d.iter().rev().fold(0, |acc, &v| acc * p + v)
        };
        let modulus = digits(m); // x^k + modulus (low-degree coefficients)
        let mut add_t = vec![0u8; q * q];
        let mut mul_t = vec![0u8; q * q];
        for a in 0..q {
            for b in 0..q {
                let da = digits(a);
                let db = digits(b);
                let sum: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add_t[a * q + b] = encode(&sum) as u8;
                // multiply then reduce modulo x^k = -modulus
                let mut prod = vec![0usize; 2 * k as usize];
                for (i, &x) in da.iter().enumerate() {
                    for (j, &y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                for i in (k as usize..prod.len()).rev() {
                    let c = prod[i];
                    if c == 0 {
                        continue;
                    }
                    prod[i] = 0;
                    for (j, &md) in modulus.iter().enumerate() {
                        let slot = i - k as usize + j;
                        prod[slot] = (prod[slot] + p - (c * md) % p) % p;
                    }
                }
                mul_t[a * q + b] = encode(&prod[..k as usize]) as u8;
            }
        }
        Self::finish(q, p, add_t, mul_t)
    }

    /// Builds negation/inversion tables; `None` when some nonzero element
    /// has no inverse (reducible modulus).
    fn finish(q: usize, p: usize, add_t: Vec<u8>, mul_t: Vec<u8>) -> Option<Self> {
        let mut neg_t = vec![0u8; q];
        for a in 0..q {
            let na = (0..q).find(|&b| add_t[a * q + b] == 0)?;
            neg_t[a] = na as u8;
        }
        let mut inv_t = vec![0u8; q];
        for a in 1..q {
            let ia = (1..q).find(|&b| mul_t[a * q + b] == 1)?;
            inv_t[a] = ia as u8;
        }
        Some(Self {
            q,
            p,
            add_t,
            mul_t,
            neg_t,
            inv_t,
        })
    }

    pub fn q(&self) -> u64 {
        self.q as u64
    }

    pub fn characteristic(&self) -> u64 {
        self.p as u64
    }

    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add_t[a as usize * self.q + b as usize]
    }

    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul_t[a as usize * self.q + b as usize]
    }

    pub fn neg(&self, a: u8) -> u8 {
        self.neg_t[a as usize]
    }

    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    /// Multiplicative inverse; 0 maps to 0 by convention.
    pub fn inv(&self, a: u8) -> u8 {
        self.inv_t[a as usize]
    }

    pub fn pow(&self, a: u8, e: u32) -> u8 {
        let mut out = 1u8;
        for _ in 0..e {
            out = self.mul(out, a);
        }
        out
    }

    /// Reduction of an integer coefficient into the prime subfield.
    pub fn from_int(&self, n: i64) -> u8 {
        n.rem_euclid(self.p as i64) as u8
    }

    pub fn elements(&self) -> impl Iterator<Item = u8> {
        0..self.q as u8
    }
}

// ---------------------------------------------------------------------------
// polynomials
// ---------------------------------------------------------------------------

/// Integer-coefficient polynomial in variables `x0..x{nvars-1}`, stored as a
/// sum of monomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(i64, Vec<u32>)>,
}

impl Poly {
    /// Parses `"x0*x1 + x2*x3 - x4^2"`-style monomial sums. Each term is a
    /// `*`-separated product of an optional integer coefficient and
    /// `xi`/`xi^k` factors.
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let err = |reason: String| Error::Parse {
            context: format!("polynomial `{text}`"),
            reason,
        };
        let compact: String = text.split_whitespace().collect::<Vec<_>>().join("");
        if compact.is_empty() {
            return Err(err("empty input".to_string()));
        }
        // split into signed terms
        let mut terms: Vec<(i64, Vec<u32>)> = Vec::new();
        let mut chars = compact.chars().peekable();
        let mut sign: i64;
        let mut first = true;
        loop {
            match chars.peek() {
                Some('+') => {
                    chars.next();
                    sign = 1;
                }
                Some('-') => {
                    chars.next();
                    sign = -1;
                }
                Some(_) if first => {
                    sign = 1;
                }
                Some(other) => {
                    return Err(err(format!("expected `+` or `-`, found `{other}`")));
                }
                None if first => return Err(err("empty input".to_string())),
                None => break,
            }
            first = false;
            // one term: factors separated by '*'
            let mut coef = sign;
            let mut expo = vec![0u32; nvars];
            let mut any = false;
            loop {
                match chars.peek().copied() {
                    Some('x') => {
                        chars.next();
                        let idx = take_number(&mut chars)
                            .ok_or_else(|| err("variable index missing after `x`".to_string()))?;
                        if idx >= nvars as u64 {
                            return Err(err(format!(
                                "variable x{idx} exceeds the ambient ({nvars} variables)"
                            )));
                        }
                        let mut e = 1u32;
                        if chars.peek() == Some(&'^') {
                            chars.next();
                            e = take_number(&mut chars)
                                .ok_or_else(|| err("exponent missing after `^`".to_string()))?
                                .try_into()
                                .map_err(|_| err("exponent too large".to_string()))?;
                        }
                        expo[idx as usize] += e;
                        any = true;
                    }
                    Some(c) if c.is_ascii_digit() => {
                        let n = take_number(&mut chars).expect("digit peeked");
                        coef = coef
                            .checked_mul(n as i64)
                            .ok_or_else(|| err("coefficient overflow".to_string()))?;
                        any = true;
                    }
                    Some(other) => {
                        return Err(err(format!("unexpected character `{other}`")));
                    }
                    None => break,
                }
                if chars.peek() == Some(&'*') {
                    chars.next();
                    continue;
                }
                break;
            }
            if !any {
                return Err(err("empty term".to_string()));
            }
            terms.push((coef, expo));
        }
        // combine identical monomials, drop zeros
        let mut combined: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (c, e) in terms {
            *combined.entry(e).or_default() += c;
        }
        let terms: Vec<(i64, Vec<u32>)> = combined
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(e, c)| (c, e))
            .collect();
        Ok(Self { nvars, terms })
    }

    pub fn constant(c: i64, nvars: usize) -> Self {
        let terms = if c == 0 {
            Vec::new()
        } else {
            vec![(c, vec![0; nvars])]
        };
        Self { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn eval(&self, f: &Fq, point: &[u8]) -> u8 {
        debug_assert_eq!(point.len(), self.nvars);
        let mut acc = 0u8;
        for (c, expo) in &self.terms {
            let mut m = f.from_int(*c);
            for (i, &e) in expo.iter().enumerate() {
                if e > 0 {
                    m = f.mul(m, f.pow(point[i], e));
                }
            }
            acc = f.add(acc, m);
        }
        acc
    }

    /// Total degree within one variable block, per monomial; `None` when
    /// the monomials disagree (not homogeneous in that block).
    fn block_degree(&self, start: usize, len: usize) -> Option<u32> {
        let mut degree = None;
        for (_, expo) in &self.terms {
            let d: u32 = expo[start..start + len].iter().sum();
            match degree {
                None => degree = Some(d),
                Some(prev) if prev != d => return None,
                Some(_) => {}
            }
        }
        degree.or(Some(0))
    }
}

fn take_number(chars: &mut std::iter::Peekable<std::str::Chars>) -> Option<u64> {
    let mut any = false;
    let mut n: u64 = 0;
    while let Some(c) = chars.peek().copied() {
        if let Some(d) = c.to_digit(10) {
            n = n.checked_mul(10)?.checked_add(d as u64)?;
            chars.next();
            any = true;
        } else {
            break;
        }
    }
    any.then_some(n)
}

// ---------------------------------------------------------------------------
// varieties and counting
// ---------------------------------------------------------------------------

/// Ambient space of an explicit model. Product ambients carry one
/// projective block per listed dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ambient {
    Affine(usize),
    Projective(usize),
    ProjProduct(Vec<usize>),
}

impl Ambient {
    pub fn nvars(&self) -> usize {
        match self {
            Ambient::Affine(n) => *n,
            Ambient::Projective(n) => n + 1,
            Ambient::ProjProduct(ns) => ns.iter().map(|n| n + 1).sum(),
        }
    }

    /// `(start, length, projective)` per coordinate block.
    fn blocks(&self) -> Vec<(usize, usize, bool)> {
        match self {
            Ambient::Affine(n) => vec![(0, *n, false)],
            Ambient::Projective(n) => vec![(0, n + 1, true)],
            Ambient::ProjProduct(ns) => {
                let mut out = Vec::new();
                let mut start = 0;
                for n in ns {
                    out.push((start, n + 1, true));
                    start += n + 1;
                }
                out
            }
        }
    }
}

/// An explicit variety: vanishing of `equations` and non-vanishing of every
/// `avoid` polynomial inside the ambient. Projective blocks require each
/// polynomial to be homogeneous per block, so the loci are well defined on
/// representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitVariety {
    pub name: String,
    pub ambient: Ambient,
    pub equations: Vec<Poly>,
    pub avoid: Vec<Poly>,
}

impl ExplicitVariety {
    pub fn new(
        name: &str,
        ambient: Ambient,
        equations: Vec<Poly>,
        avoid: Vec<Poly>,
    ) -> Result<Self> {
        for poly in equations.iter().chain(avoid.iter()) {
            if poly.nvars != ambient.nvars() {
                return Err(Error::invalid(
                    "explicit model",
                    format!(
                        "`{name}`: polynomial over {} variables in an ambient with {}",
                        poly.nvars,
                        ambient.nvars()
                    ),
                ));
            }
            for (start, len, projective) in ambient.blocks() {
                if projective && poly.block_degree(start, len).is_none() {
                    return Err(Error::invalid(
                        "explicit model",
                        format!(
                            "`{name}`: polynomial is not homogeneous in the block starting at x{start}"
                        ),
                    ));
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            ambient,
            equations,
            avoid,
        })
    }

    fn satisfied(&self, f: &Fq, point: &[u8]) -> bool {
        self.equations.iter().all(|p| p.eval(f, point) == 0)
            && self.avoid.iter().all(|p| p.eval(f, point) != 0)
    }
}

/// One enumeration cell: some coordinates pinned (projective leading-one
/// normal form), the rest ranging over the whole field.
#[derive(Debug, Clone)]
struct Cell {
    fixed: Vec<(usize, u8)>,
    free: Vec<usize>,
}

fn make_cells(ambient: &Ambient) -> Vec<Cell> {
    let mut cells = vec![Cell {
        fixed: Vec::new(),
        free: Vec::new(),
    }];
    for (start, len, projective) in ambient.blocks() {
        if !projective {
            for c in &mut cells {
                c.free.extend(start..start + len);
            }
            continue;
        }
        let mut next = Vec::new();
        for cell in &cells {
            for lead in 0..len {
                let mut c = cell.clone();
                for i in 0..lead {
                    c.fixed.push((start + i, 0));
                }
                c.fixed.push((start + lead, 1));
                c.free.extend(start + lead + 1..start + len);
                next.push(c);
            }
        }
        cells = next;
    }
    cells
}

fn cell_size(q: u128, cell: &Cell) -> u128 {
    q.saturating_pow(cell.free.len() as u32)
}

/// Splits large cells along their first free coordinate until the work list
/// is fine-grained; independent of the worker count, so parallel totals
/// match serial ones exactly.
fn split_cells(q: usize, mut cells: Vec<Cell>) -> Vec<Cell> {
    const TARGET: u128 = 4096;
    let mut out = Vec::new();
    while let Some(cell) = cells.pop() {
        if cell_size(q as u128, &cell) <= TARGET || cell.free.is_empty() {
            out.push(cell);
            continue;
        }
        let var = cell.free[0];
        for v in 0..q as u8 {
            let mut sub = cell.clone();
            sub.free.remove(0);
            sub.fixed.push((var, v));
            cells.push(sub);
        }
    }
    out
}

fn count_cell(f: &Fq, v: &ExplicitVariety, cell: &Cell) -> u64 {
    let nvars = v.ambient.nvars();
    let q = f.q() as usize;
    let mut point = vec![0u8; nvars];
    for &(i, val) in &cell.fixed {
        point[i] = val;
    }
    let d = cell.free.len();
    let mut odometer = vec![0u8; d];
    let mut count = 0u64;
    loop {
        for (slot, &i) in odometer.iter().zip(cell.free.iter()) {
            point[i] = *slot;
        }
        if v.satisfied(f, &point) {
            count += 1;
        }
        // advance
        let mut carry = true;
        for slot in odometer.iter_mut() {
            *slot += 1;
            if (*slot as usize) < q {
                carry = false;
                break;
            }
            *slot = 0;
        }
        if carry {
            break;
        }
    }
    count
}

/// Exact number of F_q-points of the model, enumerated over leading-one
/// representatives (each projective point counted once).
pub fn count(f: &Fq, v: &ExplicitVariety, budget: u128) -> Result<u64> {
    let cells = make_cells(&v.ambient);
    let needed: u128 = cells.iter().map(|c| cell_size(f.q() as u128, c)).sum();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let tasks = split_cells(f.q() as usize, cells);
    Ok(tasks.par_iter().map(|cell| count_cell(f, v, cell)).sum())
}

/// Number of points of projective space of the given dimension, in exact
/// arithmetic: `1 + q + … + q^n`.
pub fn projective_space_points(q: u64, n: u32) -> u64 {
    (0..=n).map(|i| q.pow(i)).sum()
}

/// Outcome of one counting verification, with every count that entered it.
#[derive(Debug, Clone)]
pub struct CountVerdict {
    pub pass: bool,
    pub counts: Vec<(String, u64)>,
    pub detail: String,
}

/// Checks `|X| = |U| + sum |Z_i|` exactly for one declared decomposition.
pub fn verify_cut_and_paste(
    f: &Fq,
    total: &ExplicitVariety,
    open: &ExplicitVariety,
    closed: &[&ExplicitVariety],
    budget: u128,
) -> Result<CountVerdict> {
    let ct = count(f, total, budget)?;
    let co = count(f, open, budget)?;
    let mut counts = vec![
        (total.name.clone(), ct),
        (open.name.clone(), co),
    ];
    let mut sum = co;
    for z in closed {
        let cz = count(f, z, budget)?;
        counts.push((z.name.clone(), cz));
        sum += cz;
    }
    let pass = ct == sum;
    Ok(CountVerdict {
        pass,
        detail: format!(
            "|{}| = {ct} vs open-plus-closed sum {sum} at q = {}",
            total.name,
            f.q()
        ),
        counts,
    })
}

/// Checks the blow-up counting identity
/// `|Bl| = |base| + |center| * (|P^{codim-1}| - 1)` exactly.
pub fn verify_blowup(
    f: &Fq,
    base: &ExplicitVariety,
    center: &ExplicitVariety,
    blowup: &ExplicitVariety,
    codim: u32,
    budget: u128,
) -> Result<CountVerdict> {
    let cb = count(f, base, budget)?;
    let cz = count(f, center, budget)?;
    let cbl = count(f, blowup, budget)?;
    let fiber = projective_space_points(f.q(), codim - 1) - 1;
    let expected = cb + cz * fiber;
    let pass = cbl == expected;
    Ok(CountVerdict {
        pass,
        detail: format!(
            "|{}| = {cbl} vs {cb} + {cz}*{fiber} = {expected} at q = {}",
            blowup.name,
            f.q()
        ),
        counts: vec![
            (base.name.clone(), cb),
            (center.name.clone(), cz),
            (blowup.name.clone(), cbl),
        ],
    })
}

// ---------------------------------------------------------------------------
// measures over the class registry
// ---------------------------------------------------------------------------

/// Explicit models attached to registered classes, keyed by class.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    models: BTreeMap<ClassId, ExplicitVariety>,
}

impl ModelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: ClassId, v: ExplicitVariety) {
        self.models.insert(class, v);
    }

    pub fn get(&self, class: ClassId) -> Option<&ExplicitVariety> {
        self.models.get(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.models.keys().copied()
    }

    /// Linear extension of counting: `sum coeff * |model|`. Every class in
    /// the support must carry a model.
    pub fn measure(
        &self,
        u: &Universe,
        f: &Fq,
        x: &GroupElement,
        budget: u128,
    ) -> Result<BigInt> {
        let mut total = BigInt::zero();
        for (b, k) in x.iter() {
            let class = ClassId(b.0);
            let model = self.models.get(&class).ok_or_else(|| {
                Error::MissingDeclaration(format!(
                    "class `{}` has no explicit model",
                    u.label(class)
                ))
            })?;
            total += k * BigInt::from(count(f, model, budget)?);
        }
        Ok(total)
    }

    /// Measures one cut-and-paste record; zero iff the counts balance.
    pub fn measure_record(
        &self,
        u: &Universe,
        f: &Fq,
        rec: &CutAndPaste,
        budget: u128,
    ) -> Result<BigInt> {
        let mut e = GroupElement::generator(rec.total.basis());
        e.add_term(rec.open.basis(), BigInt::from(-1));
        for &z in &rec.closed {
            e.add_term(z.basis(), BigInt::from(-1));
        }
        self.measure(u, f, &e, budget)
    }
}

// ---------------------------------------------------------------------------
// the standard model library
// ---------------------------------------------------------------------------

pub fn model_projective_space(n: usize) -> ExplicitVariety {
    ExplicitVariety::new(&format!("P{n}"), Ambient::Projective(n), vec![], vec![])
        .expect("no equations to validate")
}

pub fn model_affine_space(n: usize) -> ExplicitVariety {
    ExplicitVariety::new(&format!("A{n}"), Ambient::Affine(n), vec![], vec![])
        .expect("no equations to validate")
}

/// The split quadric threefold `{x0*x1 + x2*x3 = x4^2}` in projective
/// four-space; its count matches projective three-space at every q.
pub fn model_split_quadric3() -> ExplicitVariety {
    let eq = Poly::parse("x0*x1 + x2*x3 - x4^2", 5).expect("fixed text parses");
    ExplicitVariety::new("Q3", Ambient::Projective(4), vec![eq], vec![]).expect("homogeneous")
}

/// The quadric cone `{x0*x1 = x2^2}` in projective three-space (vertex at
/// `(0:0:0:1)`); `q^2 + q + 1` points.
pub fn model_quadric_cone() -> ExplicitVariety {
    let eq = Poly::parse("x0*x1 - x2^2", 4).expect("fixed text parses");
    ExplicitVariety::new("QH", Ambient::Projective(3), vec![eq], vec![]).expect("homogeneous")
}

/// The blow-up of the plane at a point, as the incidence locus
/// `{x0*y1 = x1*y0}` in the product of the plane and a line.
pub fn model_blowup_plane_point() -> ExplicitVariety {
    let eq = Poly::parse("x0*x4 - x1*x3", 5).expect("fixed text parses");
    ExplicitVariety::new("BlP2", Ambient::ProjProduct(vec![2, 1]), vec![eq], vec![])
        .expect("multihomogeneous")
}

// ---------------------------------------------------------------------------
// model files
// ---------------------------------------------------------------------------

/// Parses a plain-text model file: blocks started by `model <name>`, an
/// `ambient` line (`affine N`, `projective N`, or `product N1 N2 …`), then
/// `equation <poly>` and `avoid <poly>` lines. `#` starts a comment.
pub fn parse_models(text: &str) -> Result<Vec<ExplicitVariety>> {
    let err = |line_no: usize, reason: String| Error::Parse {
        context: format!("models file, line {}", line_no + 1),
        reason,
    };
    struct Partial {
        name: String,
        ambient: Option<Ambient>,
        equations: Vec<(usize, String)>,
        avoid: Vec<(usize, String)>,
        line: usize,
    }
    let mut blocks: Vec<Partial> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (line, ""),
        };
        match head {
            "model" => {
                if rest.is_empty() {
                    return Err(err(line_no, "model name missing".to_string()));
                }
                blocks.push(Partial {
                    name: rest.to_string(),
                    ambient: None,
                    equations: Vec::new(),
                    avoid: Vec::new(),
                    line: line_no,
                });
            }
            "ambient" | "equation" | "avoid" => {
                let Some(block) = blocks.last_mut() else {
                    return Err(err(line_no, format!("`{head}` before any `model`")));
                };
                match head {
                    "ambient" => {
                        let mut parts = rest.split_whitespace();
                        let kind = parts.next().unwrap_or("");
                        let dims: Vec<usize> = parts
                            .map(|t| t.parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| {
                                err(line_no, format!("bad ambient dimensions in `{rest}`"))
                            })?;
                        let ambient = match (kind, dims.as_slice()) {
                            ("affine", [n]) => Ambient::Affine(*n),
                            ("projective", [n]) => Ambient::Projective(*n),
                            ("product", ns) if !ns.is_empty() => {
                                Ambient::ProjProduct(ns.to_vec())
                            }
                            _ => {
                                return Err(err(
                                    line_no,
                                    format!("unrecognized ambient `{rest}`"),
                                ))
                            }
                        };
                        if block.ambient.replace(ambient).is_some() {
                            return Err(err(line_no, "second `ambient` line".to_string()));
                        }
                    }
                    "equation" => block.equations.push((line_no, rest.to_string())),
                    _ => block.avoid.push((line_no, rest.to_string())),
                }
            }
            other => {
                return Err(err(line_no, format!("unrecognized directive `{other}`")));
            }
        }
    }
    let mut out = Vec::new();
    for block in blocks {
        let ambient = block.ambient.ok_or_else(|| {
            err(block.line, format!("model `{}` has no ambient", block.name))
        })?;
        let nv = ambient.nvars();
        let parse_all = |src: &[(usize, String)]| -> Result<Vec<Poly>> {
            src.iter()
                .map(|(line_no, s)| {
                    Poly::parse(s, nv).map_err(|e| err(*line_no, e.to_string()))
                })
                .collect()
        };
        let equations = parse_all(&block.equations)?;
        let avoid = parse_all(&block.avoid)?;
        out.push(ExplicitVariety::new(&block.name, ambient, equations, avoid)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_hold_exhaustively() {
        for q in [2u64, 3, 4, 5, 7, 8, 9] {
            let f = Fq::new(q).unwrap();
            let n = f.q() as usize;
            for a in 0..n as u8 {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.mul(a, 0), 0);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1, "q={q} a={a}");
                }
                for b in 0..n as u8 {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..n as u8 {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c)),
                            "distributivity at q={q}"
                        );
                    }
                }
            }
            // characteristic: p-fold sum of 1 vanishes
            let p = f.characteristic() as usize;
            let mut s = 0u8;
            for _ in 0..p {
                s = f.add(s, 1);
            }
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn non_prime_powers_are_rejected() {
        for q in [0u64, 1, 6, 10, 12] {
            assert!(Fq::new(q).is_err(), "q={q}");
        }
    }

    #[test]
    fn polynomial_parsing_and_evaluation() {
        let f = Fq::new(3).unwrap();
        let p = Poly::parse("x0*x1 + x2*x3 - x4^2", 5).unwrap();
        assert_eq!(p.eval(&f, &[1, 1, 0, 0, 1]), 0); // 1 + 0 - 1
        assert_eq!(p.eval(&f, &[1, 1, 0, 0, 0]), 1);
        let c = Poly::parse("2*x0 + 7", 1).unwrap();
        assert_eq!(c.eval(&f, &[2]), (4 + 7) % 3);
        let lead = Poly::parse("-x0^2 + 3*x1", 2).unwrap();
        assert_eq!(lead.eval(&f, &[1, 1]), 2); // -1 + 0
        // like terms combine and cancel
        let z = Poly::parse("x0 - x0", 1).unwrap();
        assert_eq!(z, Poly::constant(0, 1));
    }

    #[test]
    fn polynomial_parser_rejects_malformed_input() {
        assert!(Poly::parse("x9", 2).is_err());
        assert!(Poly::parse("x0^", 1).is_err());
        assert!(Poly::parse("y0", 1).is_err());
        assert!(Poly::parse("", 1).is_err());
        assert!(Poly::parse("x0 x1", 2).is_err());
    }

    #[test]
    fn projective_and_affine_counts() {
        let f2 = Fq::new(2).unwrap();
        let f3 = Fq::new(3).unwrap();
        let p3 = model_projective_space(3);
        assert_eq!(count(&f2, &p3, DEFAULT_BUDGET).unwrap(), 15);
        assert_eq!(count(&f3, &p3, DEFAULT_BUDGET).unwrap(), 40);
        assert_eq!(
            count(&f3, &model_affine_space(3), DEFAULT_BUDGET).unwrap(),
            27
        );
        assert_eq!(
            count(&f2, &model_projective_space(0), DEFAULT_BUDGET).unwrap(),
            1
        );
        // prime-power field: |P^2(F_4)| = 21
        let f4 = Fq::new(4).unwrap();
        assert_eq!(
            count(&f4, &model_projective_space(2), DEFAULT_BUDGET).unwrap(),
            21
        );
    }

    #[test]
    fn quadric_counts_match_projective_space() {
        let q3 = model_split_quadric3();
        for q in [2u64, 3, 5] {
            let f = Fq::new(q).unwrap();
            assert_eq!(
                count(&f, &q3, DEFAULT_BUDGET).unwrap(),
                projective_space_points(q, 3),
                "split quadric at q={q}"
            );
        }
        let cone = model_quadric_cone();
        for q in [2u64, 3, 5] {
            let f = Fq::new(q).unwrap();
            assert_eq!(count(&f, &cone, DEFAULT_BUDGET).unwrap(), q * q + q + 1);
        }
    }

    #[test]
    fn blow_up_counts_and_verdict() {
        let bl = model_blowup_plane_point();
        let base = model_projective_space(2);
        let pt = ExplicitVariety::new("pt", Ambient::Projective(0), vec![], vec![]).unwrap();
        for (q, expected) in [(2u64, 9u64), (3, 16)] {
            let f = Fq::new(q).unwrap();
            assert_eq!(count(&f, &bl, DEFAULT_BUDGET).unwrap(), expected);
            let v = verify_blowup(&f, &base, &pt, &bl, 2, DEFAULT_BUDGET).unwrap();
            assert!(v.pass, "{}", v.detail);
        }
        // empty center leaves the count unchanged
        let empty = ExplicitVariety::new(
            "none",
            Ambient::Projective(2),
            vec![Poly::constant(1, 3)],
            vec![],
        )
        .unwrap();
        let f = Fq::new(3).unwrap();
        let v = verify_blowup(&f, &base, &empty, &base, 2, DEFAULT_BUDGET).unwrap();
        assert!(v.pass, "{}", v.detail);
    }

    #[test]
    fn cut_and_paste_verdicts() {
        let f = Fq::new(3).unwrap();
        let p3 = model_projective_space(3);
        let chart = ExplicitVariety::new(
            "chart",
            Ambient::Projective(3),
            vec![],
            vec![Poly::parse("x0", 4).unwrap()],
        )
        .unwrap();
        let p2 = model_projective_space(2);
        let v = verify_cut_and_paste(&f, &p3, &chart, &[&p2], DEFAULT_BUDGET).unwrap();
        assert!(v.pass, "{}", v.detail);
        assert_eq!(v.counts, vec![
            ("P3".to_string(), 40),
            ("chart".to_string(), 27),
            ("P2".to_string(), 13),
        ]);
        // a mismatched decomposition fails with its counts, not an error
        let bad = verify_cut_and_paste(&f, &p3, &chart, &[&p3], DEFAULT_BUDGET).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn product_counts_multiply() {
        for q in [2u64, 3] {
            let f = Fq::new(q).unwrap();
            let p1xp1 =
                ExplicitVariety::new("P1xP1", Ambient::ProjProduct(vec![1, 1]), vec![], vec![])
                    .unwrap();
            assert_eq!(count(&f, &p1xp1, DEFAULT_BUDGET).unwrap(), (q + 1) * (q + 1));
            let p2xp1 =
                ExplicitVariety::new("P2xP1", Ambient::ProjProduct(vec![2, 1]), vec![], vec![])
                    .unwrap();
            assert_eq!(
                count(&f, &p2xp1, DEFAULT_BUDGET).unwrap(),
                (q * q + q + 1) * (q + 1)
            );
        }
    }

    #[test]
    fn homogeneity_is_validated_per_block() {
        let bad = Poly::parse("x0*x2 + x1", 4).unwrap();
        assert!(ExplicitVariety::new(
            "bad",
            Ambient::ProjProduct(vec![1, 1]),
            vec![bad],
            vec![]
        )
        .is_err());
        let affine_ok = Poly::parse("x0^2 + x1", 2).unwrap();
        assert!(ExplicitVariety::new("ok", Ambient::Affine(2), vec![affine_ok], vec![]).is_ok());
    }

    #[test]
    fn budget_is_enforced_before_enumeration() {
        let f = Fq::new(3).unwrap();
        let p3 = model_projective_space(3);
        assert!(matches!(
            count(&f, &p3, 10),
            Err(Error::BudgetExceeded { needed: 40, budget: 10 })
        ));
    }

    #[test]
    fn parallel_and_serial_enumeration_agree() {
        let q3 = model_split_quadric3();
        let f = Fq::new(5).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| count(&f, &q3, DEFAULT_BUDGET).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| count(&f, &q3, DEFAULT_BUDGET).unwrap());
        assert_eq!(serial, parallel);
        assert_eq!(serial, projective_space_points(5, 3));
    }

    #[test]
    fn measures_extend_counts_linearly() {
        use crate::universe::{ClassFlags, ClassSpec, Universe};
        let mut u = Universe::new();
        let p3 = u.projective_space(3);
        let q3 = u
            .register(
                "Q3",
                ClassSpec {
                    dim: 3,
                    flags: ClassFlags {
                        smooth: true,
                        projective: true,
                        irreducible: true,
                        geometrically_reduced: true,
                        separably_rationally_connected: true,
                        ..ClassFlags::default()
                    },
                    ..ClassSpec::default()
                },
            )
            .unwrap();
        let mut models = ModelSet::new();
        models.insert(p3, model_projective_space(3));
        models.insert(q3, model_split_quadric3());
        let f = Fq::new(2).unwrap();
        let mut x = GroupElement::generator(p3.basis());
        x.add_term(q3.basis(), BigInt::from(-1));
        assert_eq!(
            models.measure(&u, &f, &x, DEFAULT_BUDGET).unwrap(),
            BigInt::zero()
        );
        // records measure to zero as well: [P3] = [A3] + [P2]
        let a3 = u.lookup("A3").unwrap();
        let p2 = u.lookup("P2").unwrap();
        models.insert(a3, model_affine_space(3));
        models.insert(p2, model_projective_space(2));
        let rec = u
            .records()
            .iter()
            .find(|r| r.total == p3)
            .cloned()
            .unwrap();
        assert_eq!(
            models.measure_record(&u, &f, &rec, DEFAULT_BUDGET).unwrap(),
            BigInt::zero()
        );
        // missing model is an error, not a zero
        let mystery = u.register("mystery", ClassSpec::default()).unwrap();
        let y = GroupElement::generator(mystery.basis());
        assert!(matches!(
            models.measure(&u, &f, &y, DEFAULT_BUDGET),
            Err(Error::MissingDeclaration(_))
        ));
    }

    #[test]
    fn model_files_round_trip() {
        let text = "\
# golden models
model Q3
ambient projective 4
equation x0*x1 + x2*x3 - x4^2

model chart   # open chart of the plane
ambient projective 2
avoid x0
";
        let models = parse_models(text).unwrap();
        assert_eq!(models.len(), 2);
        assert_eq!(models[0], model_split_quadric3());
        let f = Fq::new(3).unwrap();
        assert_eq!(count(&f, &models[1], DEFAULT_BUDGET).unwrap(), 9);
        // diagnostics carry line numbers
        let bad = parse_models("model M\nambient projective 1\nequation x0 + x1^2\n");
        assert!(bad.is_err());
        let no_ambient = parse_models("model M\nequation x0\n");
        assert!(matches!(no_ambient, Err(Error::Parse { .. })));
        let stray = parse_models("equation x0\n");
        assert!(matches!(stray, Err(Error::Parse { .. })));
    }
}
