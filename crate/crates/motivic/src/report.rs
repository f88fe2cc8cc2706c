//! Deterministic verification reports. `verify_all` runs every
//! cross-check a loaded registry supports — point-count measures of
//! cut-and-paste records, stability of link invariants, family
//! coordinates, realization comparisons on words, fragment closure — and
//! collects the outcomes in a stable order, so the rendered report is
//! byte-identical across runs and worker counts.

use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::abgroup::IntMatrix;
use crate::bircalc::{c, tilde_c};
use crate::grothendieck::pi_well_defined;
use crate::links::{c_of_link, cremona_hom, nontrivial, Nontriviality};
use crate::loader::{build_fragment, LoadedUniverse};
use crate::pointcount::Fq;
use crate::realize::{check_jacobian, check_picnb};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub section: String,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub universe: String,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerifyReport {
    fn push(&mut self, section: &str, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        if !ok {
            self.passed = false;
        }
        self.checks.push(CheckOutcome {
            section: section.to_string(),
            name: name.into(),
            status,
            detail: detail.into(),
        });
    }
}

/// The fields every record is measured over when its support is modeled.
const MEASURE_FIELDS: [u64; 3] = [2, 3, 5];

/// Runs every supported cross-check over the loaded registry. Check
/// failures and check errors both become failing outcomes; the function
/// itself never errors.
pub fn verify_all(loaded: &mut LoadedUniverse, universe_name: &str, budget: u128) -> VerifyReport {
    let mut report = VerifyReport {
        universe: universe_name.to_string(),
        checks: Vec::new(),
        passed: true,
    };

    // Named models enumerate over the smallest field: a parse-and-count
    // smoke check that also exercises the parallel counting path.
    for (name, model) in &loaded.named_models {
        match Fq::new(2).and_then(|f| crate::pointcount::count(&f, model, budget)) {
            Ok(n) => report.push("model", name, true, format!("{n} points over F_2")),
            Err(e) => report.push("model", name, false, e.to_string()),
        }
    }

    // Cut-and-paste records whose support is fully modeled must measure
    // zero over every field.
    let records: Vec<_> = loaded.universe.records().to_vec();
    for (i, rec) in records.iter().enumerate() {
        let supported = std::iter::once(rec.total)
            .chain(std::iter::once(rec.open))
            .chain(rec.closed.iter().copied())
            .all(|cl| loaded.models.get(cl).is_some());
        if !supported {
            continue;
        }
        let name = format!("{i}:{}", loaded.universe.label(rec.total));
        let mut detail = String::new();
        let mut ok = true;
        for q in MEASURE_FIELDS {
            let outcome = Fq::new(q)
                .and_then(|f| loaded.models.measure_record(&loaded.universe, &f, rec, budget));
            match outcome {
                Ok(v) if v.is_zero() => {
                    let _ = write!(detail, "q={q}: 0  ");
                }
                Ok(v) => {
                    ok = false;
                    let _ = write!(detail, "q={q}: {v}  ");
                }
                Err(e) => {
                    ok = false;
                    let _ = write!(detail, "q={q}: {e}  ");
                }
            }
        }
        report.push("record", name, ok, detail.trim_end());
    }

    // Links: the invariant recorded at construction must still be the
    // invariant now, and the witness word must still vanish.
    for (name, link) in &loaded.links {
        let u = &loaded.universe;
        let now = c_of_link(u, link);
        let stable = now == *link.c_at_construction();
        let verdict = match nontrivial(u, link) {
            Nontriviality::Yes(rule) => format!("nontrivial: Yes(Rule {rule})"),
            Nontriviality::No => "nontrivial: No".to_string(),
            Nontriviality::Unknown => "nontrivial: Unknown".to_string(),
        };
        report.push(
            "link",
            format!("{name}/invariant"),
            stable,
            format!("c = {}; {verdict}", u.display_element(&now)),
        );
        let witness_c = c(u, &link.witness_l2);
        report.push(
            "link",
            format!("{name}/witness"),
            witness_c.is_zero(),
            format!("witness invariant {}", u.display_element(&witness_c)),
        );
    }

    // Families: the generator words must map to the standard basis.
    for (name, family) in &loaded.families {
        let u = &loaded.universe;
        let words: Vec<_> = family.links().iter().map(|l| &l.word).collect();
        match cremona_hom(u, family, &words) {
            Ok(m) => {
                let ok = m == IntMatrix::identity(family.len());
                report.push(
                    "family",
                    name,
                    ok,
                    format!("{} generators against the standard basis", family.len()),
                );
            }
            Err(e) => report.push("family", name, false, e.to_string()),
        }
    }

    // Words: realization comparisons, where the declarations exist.
    for (name, w) in &loaded.words {
        let u = &loaded.universe;
        match check_picnb(u, w) {
            Ok(v) => report.push("word", format!("{name}/lattice"), v.pass, v.detail),
            Err(Error::MissingDeclaration(_)) if !w.is_strict_endo() => {}
            Err(e) => report.push("word", format!("{name}/lattice"), false, e.to_string()),
        }
        if w.dim(u) == 3 {
            match check_jacobian(u, w) {
                Ok(v) => report.push("word", format!("{name}/jacobian"), v.pass, v.detail),
                Err(Error::MissingDeclaration(_)) if !w.is_strict_endo() => {}
                Err(e) => report.push("word", format!("{name}/jacobian"), false, e.to_string()),
            }
        }
    }

    // Fragments: the truncation builds, the listed words' strata lie in
    // it, and the top-dimension projection respects every relation.
    let fragment_specs: Vec<(String, crate::loader::FragmentSpec)> = loaded
        .fragments
        .iter()
        .map(|(n, s)| (n.clone(), s.clone()))
        .collect();
    for (name, spec) in fragment_specs {
        let built = build_fragment(&mut loaded.universe, &spec, &loaded.words);
        match built {
            Ok(t) => {
                let u = &loaded.universe;
                let well = pi_well_defined(u, &t);
                let mut ok = well;
                let mut detail = String::new();
                match t.shape() {
                    Ok(s) => {
                        let _ = write!(detail, "shape {}", render_shape(&s));
                    }
                    Err(e) => {
                        ok = false;
                        let _ = write!(detail, "{e}");
                    }
                }
                for wname in &spec.words {
                    let w = &loaded.words[wname];
                    if t.vectorize(&tilde_c(w)).is_err() {
                        ok = false;
                        let _ = write!(detail, "; strata of `{wname}` escape the fragment");
                    }
                }
                if !well {
                    let _ = write!(detail, "; projection not well defined");
                }
                report.push("fragment", name, ok, detail);
            }
            Err(e) => report.push("fragment", name, false, e.to_string()),
        }
    }

    report
}

fn render_shape(s: &crate::abgroup::QuotientShape) -> String {
    let mut parts = Vec::new();
    if s.free_rank > 0 {
        parts.push(format!("Z^{}", s.free_rank));
    }
    for d in &s.torsion {
        parts.push(format!("Z/{d}"));
    }
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

/// Human-readable rendering: one line per check, then a summary line.
pub fn render_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verification of `{}`", r.universe);
    for ck in &r.checks {
        let tag = match ck.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
        };
        let _ = writeln!(out, "  [{tag}] {}/{} — {}", ck.section, ck.name, ck.detail);
    }
    let _ = writeln!(
        out,
        "{}: {} checks",
        if r.passed { "pass" } else { "FAIL" },
        r.checks.len()
    );
    out
}

/// Machine-readable rendering; stable field and entry order.
pub fn render_json(r: &VerifyReport) -> String {
    serde_json::to_string_pretty(r).expect("report serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loader::load_str;
    use crate::pointcount::DEFAULT_BUDGET;

    const SMALL: &str = r#"{
        "torsors": [
            {"label": "C", "base": "E", "ambient": [5], "element": [1]}
        ],
        "links": [
            {"name": "elliptic", "kind": "elliptic", "torsor": "C"}
        ],
        "words": [
            {"name": "psi", "link_word": "elliptic"}
        ],
        "fragments": [
            {"name": "curves", "level": 2, "seed": ["C"], "words": ["psi"]}
        ],
        "models": [
            {"name": "P3", "class": "P3", "ambient": "projective 3"},
            {"name": "A3", "class": "A3", "ambient": "affine 3"},
            {"name": "Q3split", "class": "Q3", "ambient": "projective 4",
             "equations": ["x0*x1 + x2*x3 - x4^2"]},
            {"name": "QHcone", "class": "QH", "ambient": "projective 3",
             "equations": ["x0*x1 - x2^2"]}
        ]
    }"#;

    #[test]
    fn verification_passes_and_round_trips() {
        let mut loaded = load_str(SMALL).unwrap();
        let report = verify_all(&mut loaded, "small", DEFAULT_BUDGET);
        assert!(report.passed, "{}", render_text(&report));
        // the modeled chart record was actually measured
        assert!(report.checks.iter().any(|c| c.section == "record"));
        assert!(report.checks.iter().any(|c| c.section == "link"));
        assert!(report.checks.iter().any(|c| c.section == "fragment"));
        // JSON round-trips and repeated runs render identically
        let js = render_json(&report);
        let back: VerifyReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, report);
        let mut loaded2 = load_str(SMALL).unwrap();
        let report2 = verify_all(&mut loaded2, "small", DEFAULT_BUDGET);
        assert_eq!(render_json(&report2), js);
    }

    #[test]
    fn budget_failures_flag_the_report() {
        let mut loaded = load_str(SMALL).unwrap();
        let report = verify_all(&mut loaded, "small", 3);
        assert!(!report.passed);
        assert!(report
            .checks
            .iter()
            .any(|c| c.status == Status::Fail && c.detail.contains("budget")));
    }
}
