//! Declarative registry files: JSON documents listing classes, torsor
//! curves, identifications, explicit counting models, words, links,
//! families, and fragment specifications. Sections are order-independent;
//! references forward in the file are resolved by a fixpoint pass, so a
//! word may compose words declared later and a link may stabilize a link
//! declared later.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_bigint::BigInt;
use serde::Deserialize;

use crate::bircalc::{strong_rational_witness, Atom, BirWord, Orientation};
use crate::grothendieck::{full_fragment, saturate, TruncatedK0};
use crate::links::{
    elliptic_link, g2_link, k3_link, make_link, stabilize, LLink, LinkFamily, LinkParams,
    WitnessL1,
};
use crate::pointcount::{Ambient, ExplicitVariety, ModelSet, Poly};
use crate::realize::CharacterVector;
use crate::universe::{
    ClassFlags, ClassId, ClassSpec, GaloisGroup, GaloisSet, TorsorClass, Universe,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// file schema
// ---------------------------------------------------------------------------

fn default_true() -> bool {
    true
}

fn default_forward() -> String {
    "forward".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRoot {
    #[serde(default)]
    galois_group: Option<FileGalois>,
    #[serde(default)]
    ppav_labels: Vec<String>,
    #[serde(default)]
    classes: Vec<FileClass>,
    #[serde(default)]
    torsors: Vec<FileTorsor>,
    #[serde(default)]
    identifications: Vec<FileIdentification>,
    #[serde(default)]
    models: Vec<FileModel>,
    #[serde(default)]
    words: Vec<FileWord>,
    #[serde(default)]
    links: Vec<FileLink>,
    #[serde(default)]
    families: Vec<FileFamily>,
    #[serde(default)]
    fragments: Vec<FileFragment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGalois {
    degree: usize,
    elements: Vec<Vec<usize>>,
}

/// Flags default to a smooth projective irreducible geometrically reduced
/// class; the two positive-structure flags default off.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFlags {
    #[serde(default = "default_true")]
    smooth: bool,
    #[serde(default = "default_true")]
    projective: bool,
    #[serde(default = "default_true")]
    irreducible: bool,
    #[serde(default = "default_true")]
    geometrically_reduced: bool,
    #[serde(default)]
    k_trivial: bool,
    #[serde(default)]
    separably_rationally_connected: bool,
}

impl Default for FileFlags {
    fn default() -> Self {
        Self {
            smooth: true,
            projective: true,
            irreducible: true,
            geometrically_reduced: true,
            k_trivial: false,
            separably_rationally_connected: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAction {
    size: usize,
    action: Vec<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileClass {
    label: String,
    dim: u32,
    #[serde(default)]
    flags: FileFlags,
    #[serde(default)]
    picard_rank: Option<u32>,
    #[serde(default)]
    degree_invariant: Option<i64>,
    #[serde(default)]
    galois: Option<FileAction>,
    #[serde(default)]
    ns_character: Option<Vec<i64>>,
    #[serde(default)]
    ruled_over: Option<String>,
    #[serde(default)]
    jacobian: Option<Vec<String>>,
    #[serde(default)]
    components: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTorsor {
    label: String,
    base: String,
    #[serde(default = "default_true")]
    j_not_1728: bool,
    ambient: Vec<u64>,
    element: Vec<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileIdentification {
    Birational {
        left: ClassRef,
        right: ClassRef,
    },
    Distinct {
        left: ClassRef,
        right: ClassRef,
        reason: String,
    },
    AffineChart {
        class: ClassRef,
        strata: Vec<ClassRef>,
    },
    Record {
        total: ClassRef,
        open: ClassRef,
        #[serde(default)]
        closed: Vec<ClassRef>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileModel {
    name: String,
    #[serde(default)]
    class: Option<ClassRef>,
    ambient: String,
    #[serde(default)]
    equations: Vec<String>,
    #[serde(default)]
    avoid: Vec<String>,
}

/// A class reference: a registered label, a built-in space name (`pt`,
/// `P<n>`, `A<n>`), or a product of references.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ClassRef {
    Label(String),
    Product { product: Vec<ClassRef> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileWord {
    name: String,
    #[serde(default)]
    source: Option<ClassRef>,
    #[serde(default)]
    target: Option<ClassRef>,
    #[serde(default)]
    letters: Option<Vec<FileLetter>>,
    #[serde(default)]
    compose: Option<Vec<String>>,
    #[serde(default)]
    invert: Option<String>,
    #[serde(default)]
    identity: Option<ClassRef>,
    #[serde(default)]
    link_word: Option<String>,
    #[serde(default)]
    rational_witness: Option<FileRationalWitness>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRationalWitness {
    class: ClassRef,
    divisor: ClassRef,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLetter {
    #[serde(default = "default_forward")]
    orientation: String,
    #[serde(default)]
    blow_up: Option<FileBlowUp>,
    #[serde(default)]
    open_restrict: Option<FileOpenRestrict>,
    #[serde(default)]
    declared_iso: Option<FileDeclaredIso>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBlowUp {
    base: ClassRef,
    center: ClassRef,
    codim: u32,
    #[serde(default)]
    exceptional: Option<ClassRef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOpenRestrict {
    ambient: ClassRef,
    complement: Vec<ClassRef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDeclaredIso {
    source: ClassRef,
    target: ClassRef,
    #[serde(default)]
    pseudo: bool,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)] // transient parse value, one per file entry
enum FileLink {
    Elliptic {
        name: String,
        torsor: String,
    },
    K3 {
        name: String,
        left: ClassRef,
        right: ClassRef,
    },
    G2 {
        name: String,
    },
    Stabilize {
        name: String,
        base: String,
        cofactor: ClassRef,
    },
    Custom {
        name: String,
        left: ClassRef,
        right: ClassRef,
        center_left: ClassRef,
        center_right: ClassRef,
        m: u32,
        m_prime: u32,
        #[serde(default)]
        exc_left: Option<ClassRef>,
        #[serde(default)]
        exc_right: Option<ClassRef>,
        witness_l1: FileWitnessL1,
        #[serde(default)]
        witness_l2: Option<String>,
    },
}

impl FileLink {
    fn name(&self) -> &str {
        match self {
            FileLink::Elliptic { name, .. }
            | FileLink::K3 { name, .. }
            | FileLink::G2 { name }
            | FileLink::Stabilize { name, .. }
            | FileLink::Custom { name, .. } => name,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FileWitnessL1 {
    SameClass,
    K0Identity,
    Counts {
        left_model: String,
        right_model: String,
        fields: Vec<u64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFamily {
    name: String,
    links: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFragment {
    name: String,
    level: u32,
    #[serde(default)]
    seed: Vec<ClassRef>,
    #[serde(default)]
    words: Vec<String>,
    #[serde(default)]
    full: bool,
}

// ---------------------------------------------------------------------------
// loaded result
// ---------------------------------------------------------------------------

/// A fragment request as declared in the file, resolved to class ids but
/// not yet saturated (saturation happens when the fragment is built, so
/// it sees every class the session has registered by then).
#[derive(Debug, Clone)]
pub struct FragmentSpec {
    pub level: u32,
    pub seed: Vec<ClassId>,
    pub words: Vec<String>,
    pub full: bool,
}

/// Everything a registry file declares, validated and frozen.
#[derive(Debug)]
pub struct LoadedUniverse {
    pub universe: Universe,
    pub words: BTreeMap<String, BirWord>,
    pub links: BTreeMap<String, LLink>,
    pub families: BTreeMap<String, LinkFamily>,
    /// Models keyed by the class they model (for measuring relators).
    pub models: ModelSet,
    /// Models keyed by their own name (for direct counting).
    pub named_models: BTreeMap<String, ExplicitVariety>,
    pub fragments: BTreeMap<String, FragmentSpec>,
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

fn parse_err(context: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        reason: reason.into(),
    }
}

/// Resolves a plain label: registered classes first, then the built-in
/// space names `pt`, `P<n>`, `A<n>`.
fn resolve_label(u: &mut Universe, label: &str) -> Result<ClassId> {
    if let Some(id) = u.lookup(label) {
        return Ok(id);
    }
    if label == "pt" {
        return Ok(u.point());
    }
    if let Some(rest) = label.strip_prefix('P') {
        if let Ok(n) = rest.parse::<u32>() {
            return Ok(u.projective_space(n));
        }
    }
    if let Some(rest) = label.strip_prefix('A') {
        if let Ok(n) = rest.parse::<u32>() {
            return Ok(u.affine_space(n));
        }
    }
    Err(Error::unknown("class", label))
}

fn resolve_ref(u: &mut Universe, r: &ClassRef) -> Result<ClassId> {
    match r {
        ClassRef::Label(l) => resolve_label(u, l),
        ClassRef::Product { product } => {
            let factors: Vec<ClassId> = product
                .iter()
                .map(|f| resolve_ref(u, f))
                .collect::<Result<_>>()?;
            u.product_many(&factors)
        }
    }
}

fn parse_ambient(text: &str) -> Result<Ambient> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let nums = |ps: &[&str]| -> Result<Vec<usize>> {
        ps.iter()
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| parse_err(format!("ambient `{text}`"), "expected a number"))
            })
            .collect()
    };
    match parts.as_slice() {
        ["affine", n] => Ok(Ambient::Affine(nums(&[n])?[0])),
        ["projective", n] => Ok(Ambient::Projective(nums(&[n])?[0])),
        ["product", rest @ ..] if !rest.is_empty() => Ok(Ambient::ProjProduct(nums(rest)?)),
        _ => Err(parse_err(
            format!("ambient `{text}`"),
            "expected `affine N`, `projective N`, or `product N1 N2 ...`",
        )),
    }
}

fn parse_orientation(text: &str, word: &str) -> Result<Orientation> {
    match text {
        "forward" => Ok(Orientation::Forward),
        "inverse" => Ok(Orientation::Inverse),
        other => Err(parse_err(
            format!("word `{word}`"),
            format!("orientation `{other}` is neither `forward` nor `inverse`"),
        )),
    }
}

/// Loads a registry file from a JSON string.
pub fn load_str(text: &str) -> Result<LoadedUniverse> {
    let root: FileRoot = serde_json::from_str(text)
        .map_err(|e| parse_err("registry file", e.to_string()))?;
    let mut u = Universe::new();

    if let Some(g) = &root.galois_group {
        let group = GaloisGroup::new(g.degree, g.elements.clone())?;
        u.set_galois_group(group)?;
    }
    for label in &root.ppav_labels {
        u.declare_ppav_label(label);
    }

    // Classes: register in dependency order so a class may refer to one
    // declared later in the file.
    register_classes(&mut u, &root.classes)?;

    // Character declarations are validated against the ambient group now
    // that every class exists.
    for c in &root.classes {
        if let Some(values) = &c.ns_character {
            let values: Vec<BigInt> = values.iter().map(|&v| BigInt::from(v)).collect();
            CharacterVector::new(u.galois_group().clone(), values).map_err(|e| {
                parse_err(format!("classes `{}`", c.label), e.to_string())
            })?;
        }
    }

    for t in &root.torsors {
        let torsor = TorsorClass::new(&t.base, t.j_not_1728, t.ambient.clone(), t.element.clone())?;
        u.torsor_curve(&t.label, torsor)?;
    }

    for (i, ident) in root.identifications.iter().enumerate() {
        apply_identification(&mut u, ident)
            .map_err(|e| parse_err(format!("identifications[{i}]"), e.to_string()))?;
    }

    // Models parse without touching the registry, so links may cite them
    // as counting witnesses; binding a model to its class waits until the
    // links have registered every class they bring along.
    let mut named_models: BTreeMap<String, ExplicitVariety> = BTreeMap::new();
    for m in &root.models {
        let ambient = parse_ambient(&m.ambient)?;
        let nvars = ambient.nvars();
        let equations: Vec<Poly> = m
            .equations
            .iter()
            .map(|e| Poly::parse(e, nvars))
            .collect::<Result<_>>()?;
        let avoid: Vec<Poly> = m
            .avoid
            .iter()
            .map(|e| Poly::parse(e, nvars))
            .collect::<Result<_>>()?;
        let v = ExplicitVariety::new(&m.name, ambient, equations, avoid)?;
        if named_models.insert(m.name.clone(), v).is_some() {
            return Err(parse_err("models", format!("duplicate model `{}`", m.name)));
        }
    }

    let (words, links) = build_words_and_links(&mut u, &root, &named_models)?;

    let mut models = ModelSet::new();
    for m in &root.models {
        if let Some(class) = &m.class {
            let id = resolve_ref(&mut u, class)?;
            models.insert(id, named_models[&m.name].clone());
        }
    }

    let mut families = BTreeMap::new();
    for f in &root.families {
        let members: Vec<LLink> = f
            .links
            .iter()
            .map(|n| {
                links
                    .get(n)
                    .cloned()
                    .ok_or_else(|| Error::unknown("link", n))
            })
            .collect::<Result<_>>()?;
        let family = LinkFamily::new(&u, members)?;
        if families.insert(f.name.clone(), family).is_some() {
            return Err(parse_err(
                "families",
                format!("duplicate family `{}`", f.name),
            ));
        }
    }

    let mut fragments = BTreeMap::new();
    for fr in &root.fragments {
        let seed: Vec<ClassId> = fr
            .seed
            .iter()
            .map(|r| resolve_ref(&mut u, r))
            .collect::<Result<_>>()?;
        for w in &fr.words {
            if !words.contains_key(w) {
                return Err(Error::unknown("word", w));
            }
        }
        let spec = FragmentSpec {
            level: fr.level,
            seed,
            words: fr.words.clone(),
            full: fr.full,
        };
        if fragments.insert(fr.name.clone(), spec).is_some() {
            return Err(parse_err(
                "fragments",
                format!("duplicate fragment `{}`", fr.name),
            ));
        }
    }

    Ok(LoadedUniverse {
        universe: u,
        words,
        links,
        families,
        models,
        named_models,
        fragments,
    })
}

/// Builds the truncation a fragment specification describes, saturating
/// against the current registry state (so it sees classes registered
/// after the file was loaded).
pub fn build_fragment(
    u: &mut Universe,
    spec: &FragmentSpec,
    words: &BTreeMap<String, BirWord>,
) -> Result<TruncatedK0> {
    let (fragment, relations) = if spec.full {
        full_fragment(u, spec.level)?
    } else {
        let refs: Vec<&BirWord> = spec
            .words
            .iter()
            .map(|n| words.get(n).ok_or_else(|| Error::unknown("word", n)))
            .collect::<Result<_>>()?;
        saturate(u, spec.level, &spec.seed, &refs)?
    };
    TruncatedK0::build(u, spec.level, fragment, relations)
}

/// Loads a registry file from disk.
pub fn load_path(path: &Path) -> Result<LoadedUniverse> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    load_str(&text)
}

fn register_classes(u: &mut Universe, classes: &[FileClass]) -> Result<()> {
    let in_section: BTreeSet<&str> = classes.iter().map(|c| c.label.as_str()).collect();
    let mut done: BTreeSet<&str> = BTreeSet::new();
    let mut remaining: Vec<&FileClass> = classes.iter().collect();
    while !remaining.is_empty() {
        let mut progressed = false;
        let mut next = Vec::new();
        for c in remaining {
            let deps: Vec<&str> = c
                .ruled_over
                .iter()
                .map(String::as_str)
                .chain(c.components.iter().flatten().map(String::as_str))
                .collect();
            let ready = deps
                .iter()
                .all(|d| !in_section.contains(d) || done.contains(d));
            if !ready {
                next.push(c);
                continue;
            }
            register_class(u, c)?;
            done.insert(&c.label);
            progressed = true;
        }
        if !progressed {
            let stuck: Vec<&str> = next.iter().map(|c| c.label.as_str()).collect();
            return Err(parse_err(
                "classes",
                format!("circular references between {}", stuck.join(", ")),
            ));
        }
        remaining = next;
    }
    Ok(())
}

fn register_class(u: &mut Universe, c: &FileClass) -> Result<()> {
    let ruled_over = c
        .ruled_over
        .as_ref()
        .map(|l| resolve_label(u, l))
        .transpose()?;
    let components = c
        .components
        .as_ref()
        .map(|cs| cs.iter().map(|l| resolve_label(u, l)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let galois = c
        .galois
        .as_ref()
        .map(|a| GaloisSet {
            size: a.size,
            action: a.action.clone(),
        });
    let spec = ClassSpec {
        dim: c.dim,
        flags: ClassFlags {
            smooth: c.flags.smooth,
            projective: c.flags.projective,
            irreducible: c.flags.irreducible,
            geometrically_reduced: c.flags.geometrically_reduced,
            k_trivial: c.flags.k_trivial,
            separably_rationally_connected: c.flags.separably_rationally_connected,
        },
        picard_rank: c.picard_rank,
        degree_invariant: c.degree_invariant,
        galois,
        ns_character: c.ns_character.clone(),
        ruled_over,
        jacobian: c.jacobian.clone(),
        torsor: None,
        components,
    };
    u.register(&c.label, spec)?;
    Ok(())
}

fn apply_identification(u: &mut Universe, ident: &FileIdentification) -> Result<()> {
    match ident {
        FileIdentification::Birational { left, right } => {
            let l = resolve_ref(u, left)?;
            let r = resolve_ref(u, right)?;
            u.declare_birational(l, r)
        }
        FileIdentification::Distinct {
            left,
            right,
            reason,
        } => {
            let l = resolve_ref(u, left)?;
            let r = resolve_ref(u, right)?;
            u.declare_distinct(l, r, reason)
        }
        FileIdentification::AffineChart { class, strata } => {
            let c = resolve_ref(u, class)?;
            let s: Vec<ClassId> = strata
                .iter()
                .map(|r| resolve_ref(u, r))
                .collect::<Result<_>>()?;
            u.declare_affine_chart(c, s)
        }
        FileIdentification::Record {
            total,
            open,
            closed,
        } => {
            let t = resolve_ref(u, total)?;
            let o = resolve_ref(u, open)?;
            let cl: Vec<ClassId> = closed
                .iter()
                .map(|r| resolve_ref(u, r))
                .collect::<Result<_>>()?;
            u.add_record(t, o, cl)
        }
    }
}

/// One fixpoint over the word and link sections together: each pass
/// builds every entry whose references are already available. Entries
/// that never become buildable name a genuinely missing or circular
/// reference.
fn build_words_and_links(
    u: &mut Universe,
    root: &FileRoot,
    named_models: &BTreeMap<String, ExplicitVariety>,
) -> Result<(BTreeMap<String, BirWord>, BTreeMap<String, LLink>)> {
    let word_names: BTreeSet<&str> = root.words.iter().map(|w| w.name.as_str()).collect();
    if word_names.len() != root.words.len() {
        return Err(parse_err("words", "duplicate word name"));
    }
    let link_names: BTreeSet<&str> = root.links.iter().map(|l| l.name()).collect();
    if link_names.len() != root.links.len() {
        return Err(parse_err("links", "duplicate link name"));
    }
    let mut words: BTreeMap<String, BirWord> = BTreeMap::new();
    let mut links: BTreeMap<String, LLink> = BTreeMap::new();
    let mut pending_words: Vec<&FileWord> = root.words.iter().collect();
    let mut pending_links: Vec<&FileLink> = root.links.iter().collect();
    loop {
        let mut progressed = false;
        let mut next_words = Vec::new();
        for w in pending_words {
            match build_word(u, w, &words, &links, &word_names, &link_names)? {
                Some(word) => {
                    words.insert(w.name.clone(), word);
                    progressed = true;
                }
                None => next_words.push(w),
            }
        }
        pending_words = next_words;
        let mut next_links = Vec::new();
        for l in pending_links {
            match build_link(u, l, &words, &links, &word_names, &link_names, named_models)? {
                Some(link) => {
                    links.insert(l.name().to_string(), link);
                    progressed = true;
                }
                None => next_links.push(l),
            }
        }
        pending_links = next_links;
        if pending_words.is_empty() && pending_links.is_empty() {
            return Ok((words, links));
        }
        if !progressed {
            let stuck: Vec<&str> = pending_words
                .iter()
                .map(|w| w.name.as_str())
                .chain(pending_links.iter().map(|l| l.name()))
                .collect();
            return Err(parse_err(
                "words/links",
                format!("circular references between {}", stuck.join(", ")),
            ));
        }
    }
}

/// `Ok(None)` means a referenced word or link is declared but not built
/// yet; the caller retries on a later pass.
fn build_word(
    u: &mut Universe,
    w: &FileWord,
    words: &BTreeMap<String, BirWord>,
    links: &BTreeMap<String, LLink>,
    word_names: &BTreeSet<&str>,
    link_names: &BTreeSet<&str>,
) -> Result<Option<BirWord>> {
    let variants = [
        w.letters.is_some(),
        w.compose.is_some(),
        w.invert.is_some(),
        w.identity.is_some(),
        w.link_word.is_some(),
        w.rational_witness.is_some(),
    ];
    if variants.iter().filter(|&&v| v).count() != 1 {
        return Err(parse_err(
            format!("word `{}`", w.name),
            "exactly one of letters, compose, invert, identity, link_word, rational_witness",
        ));
    }
    if let Some(letters) = &w.letters {
        let (source, target) = match (&w.source, &w.target) {
            (Some(s), Some(t)) => (resolve_ref(u, s)?, resolve_ref(u, t)?),
            _ => {
                return Err(parse_err(
                    format!("word `{}`", w.name),
                    "letter words need source and target",
                ))
            }
        };
        let mut built = Vec::new();
        for letter in letters {
            built.push(build_letter(u, &w.name, letter)?);
        }
        return Ok(Some(BirWord::new(u, source, target, built)?));
    }
    if let Some(parts) = &w.compose {
        if parts.len() < 2 {
            return Err(parse_err(
                format!("word `{}`", w.name),
                "compose lists at least two words",
            ));
        }
        for p in parts {
            if !word_names.contains(p.as_str()) {
                return Err(Error::unknown("word", p));
            }
            if !words.contains_key(p) {
                return Ok(None);
            }
        }
        let mut acc = words[&parts[0]].clone();
        for p in &parts[1..] {
            acc = BirWord::compose(u, &acc, &words[p])?;
        }
        return Ok(Some(acc));
    }
    if let Some(p) = &w.invert {
        if !word_names.contains(p.as_str()) {
            return Err(Error::unknown("word", p));
        }
        return Ok(words.get(p).map(BirWord::invert));
    }
    if let Some(r) = &w.identity {
        let x = resolve_ref(u, r)?;
        return Ok(Some(BirWord::identity(x)));
    }
    if let Some(p) = &w.link_word {
        if !link_names.contains(p.as_str()) {
            return Err(Error::unknown("link", p));
        }
        return Ok(links.get(p).map(|l| l.word.clone()));
    }
    let rw = w.rational_witness.as_ref().expect("one variant is set");
    let class = resolve_ref(u, &rw.class)?;
    let divisor = resolve_ref(u, &rw.divisor)?;
    Ok(Some(strong_rational_witness(u, class, divisor)?))
}

fn build_letter(u: &mut Universe, word: &str, letter: &FileLetter) -> Result<(Atom, Orientation)> {
    let orientation = parse_orientation(&letter.orientation, word)?;
    let kinds = [
        letter.blow_up.is_some(),
        letter.open_restrict.is_some(),
        letter.declared_iso.is_some(),
    ];
    if kinds.iter().filter(|&&v| v).count() != 1 {
        return Err(parse_err(
            format!("word `{word}`"),
            "each letter is exactly one of blow_up, open_restrict, declared_iso",
        ));
    }
    let atom = if let Some(b) = &letter.blow_up {
        let base = resolve_ref(u, &b.base)?;
        let center = resolve_ref(u, &b.center)?;
        let exceptional = b
            .exceptional
            .as_ref()
            .map(|r| resolve_ref(u, r))
            .transpose()?;
        Atom::blow_up(u, base, center, b.codim, exceptional)?
    } else if let Some(o) = &letter.open_restrict {
        let ambient = resolve_ref(u, &o.ambient)?;
        let complement: Vec<ClassId> = o
            .complement
            .iter()
            .map(|r| resolve_ref(u, r))
            .collect::<Result<_>>()?;
        Atom::open_restrict(u, ambient, complement)?
    } else {
        let d = letter.declared_iso.as_ref().expect("one kind is set");
        let source = resolve_ref(u, &d.source)?;
        let target = resolve_ref(u, &d.target)?;
        Atom::declared_iso(u, source, target, d.pseudo)?
    };
    Ok((atom, orientation))
}

fn build_link(
    u: &mut Universe,
    l: &FileLink,
    words: &BTreeMap<String, BirWord>,
    links: &BTreeMap<String, LLink>,
    word_names: &BTreeSet<&str>,
    link_names: &BTreeSet<&str>,
    named_models: &BTreeMap<String, ExplicitVariety>,
) -> Result<Option<LLink>> {
    match l {
        FileLink::Elliptic { name: _, torsor } => {
            let class = u.require(torsor)?;
            let t = u
                .effective_torsor(class)
                .ok_or_else(|| Error::MissingDeclaration(format!(
                    "`{torsor}` carries no torsor structure"
                )))?;
            Ok(Some(elliptic_link(u, t)?))
        }
        FileLink::K3 { name: _, left, right } => {
            let s = resolve_ref(u, left)?;
            let t = resolve_ref(u, right)?;
            Ok(Some(k3_link(u, s, t)?))
        }
        FileLink::G2 { name: _ } => Ok(Some(g2_link(u)?)),
        FileLink::Stabilize {
            name: _,
            base,
            cofactor,
        } => {
            if !link_names.contains(base.as_str()) {
                return Err(Error::unknown("link", base));
            }
            match links.get(base) {
                Some(b) => {
                    let b = b.clone();
                    let w = resolve_ref(u, cofactor)?;
                    Ok(Some(stabilize(u, &b, w)?))
                }
                None => Ok(None),
            }
        }
        FileLink::Custom {
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
        } => {
            if let Some(wname) = witness_l2 {
                if !word_names.contains(wname.as_str()) {
                    return Err(Error::unknown("word", wname));
                }
                if !words.contains_key(wname) {
                    return Ok(None);
                }
            }
            let witness_l1 = match witness_l1 {
                FileWitnessL1::SameClass => WitnessL1::SameClass,
                FileWitnessL1::K0Identity => WitnessL1::K0Identity,
                FileWitnessL1::Counts {
                    left_model,
                    right_model,
                    fields,
                } => {
                    let lm = named_models
                        .get(left_model)
                        .ok_or_else(|| Error::unknown("model", left_model))?;
                    let rm = named_models
                        .get(right_model)
                        .ok_or_else(|| Error::unknown("model", right_model))?;
                    WitnessL1::Counts {
                        left_model: Box::new(lm.clone()),
                        right_model: Box::new(rm.clone()),
                        fields: fields.clone(),
                    }
                }
            };
            let params = LinkParams {
                name: name.clone(),
                left: resolve_ref(u, left)?,
                right: resolve_ref(u, right)?,
                center_left: resolve_ref(u, center_left)?,
                center_right: resolve_ref(u, center_right)?,
                m: *m,
                m_prime: *m_prime,
                exc_left: exc_left.as_ref().map(|r| resolve_ref(u, r)).transpose()?,
                exc_right: exc_right.as_ref().map(|r| resolve_ref(u, r)).transpose()?,
                witness_l1,
                witness_l2: witness_l2.as_ref().map(|w| words[w].clone()),
            };
            Ok(Some(make_link(u, params)?))
        }
    }
}
