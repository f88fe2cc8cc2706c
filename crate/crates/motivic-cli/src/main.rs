//! `motivic` — load a declarative registry file, evaluate invariants of
//! birational words, check links and families, build class-group
//! truncations, count points of explicit models, and run the full
//! verification suite.
//!
//! Exit codes: 0 when every requested verdict passes, 1 when a verdict
//! fails, 2 on usage, parse, or lookup errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use motivic::abgroup::GroupElement;
use motivic::bircalc::{c, tilde_c};
use motivic::links::{c_of_link, nontrivial, Nontriviality};
use motivic::loader::{build_fragment, load_path, LoadedUniverse};
use motivic::pointcount::{count, Fq, DEFAULT_BUDGET};
use motivic::report::{render_json, render_text, verify_all};
use motivic::universe::ClassId;

#[derive(Parser)]
#[command(
    name = "motivic",
    version,
    about = "Symbolic calculator for motivic invariants of birational maps"
)]
struct Cli {
    /// Registry file declaring classes, words, links, models, fragments.
    #[arg(short, long, global = true, value_name = "FILE")]
    universe: Option<PathBuf>,

    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for point enumeration (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Point-enumeration budget; overrides the MOTIVIC_BUDGET variable.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<u128>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the balanced invariant of a named word.
    CEval { word: String },
    /// Evaluate the raw strata sum of a named word.
    TildeCEval { word: String },
    /// Inspect a named link.
    Link {
        #[command(subcommand)]
        cmd: LinkCmd,
    },
    /// Coordinates of words over a link family.
    Cremona {
        #[command(subcommand)]
        cmd: CremonaCmd,
    },
    /// Class-group truncations.
    K0 {
        #[command(subcommand)]
        cmd: K0Cmd,
    },
    /// Whether two classes differ by a d-fold affine-line multiple inside
    /// a fragment.
    LEquiv {
        x: String,
        y: String,
        d: u32,
        fragment: String,
    },
    /// Count the F_q points of a named model.
    Count { model: String, q: u64 },
    /// Verification suites.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
}

#[derive(Subcommand)]
enum LinkCmd {
    /// Re-check a link's invariant and witness, and report nontriviality.
    Check { name: String },
}

#[derive(Subcommand)]
enum CremonaCmd {
    /// Rows of coordinates, one per listed word.
    Eval {
        family: String,
        #[arg(required = true)]
        words: Vec<String>,
    },
}

#[derive(Subcommand)]
enum K0Cmd {
    /// Build a declared fragment and report its presentation.
    Report { fragment: String },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Run every supported cross-check over the loaded registry.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn budget(cli: &Cli) -> Result<u128, String> {
    if let Some(b) = cli.budget {
        return Ok(b);
    }
    match std::env::var("MOTIVIC_BUDGET") {
        Ok(text) => text
            .parse::<u128>()
            .map_err(|_| format!("MOTIVIC_BUDGET `{text}` is not a number")),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn load(cli: &Cli) -> Result<(LoadedUniverse, String), String> {
    let path = cli
        .universe
        .as_ref()
        .ok_or("a registry file is required (--universe FILE)")?;
    let loaded = load_path(path).map_err(|e| e.to_string())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok((loaded, name))
}

/// Terms of a group element as a label -> coefficient map, for JSON.
fn terms_json(loaded: &LoadedUniverse, e: &GroupElement) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (b, k) in e.iter() {
        let label = loaded.universe.label(ClassId(b.0)).to_string();
        map.insert(label, serde_json::Value::String(k.to_string()));
    }
    serde_json::Value::Object(map)
}

/// Runs the subcommand; `Ok(true)` means every verdict passed.
fn run(cli: &Cli) -> Result<bool, String> {
    let budget = budget(cli)?;
    match &cli.command {
        Command::CEval { word } => {
            let (loaded, _) = load(cli)?;
            let w = loaded
                .words
                .get(word)
                .ok_or_else(|| format!("unknown word `{word}`"))?;
            let value = c(&loaded.universe, w);
            emit_element(cli, &loaded, word, &value);
            Ok(true)
        }
        Command::TildeCEval { word } => {
            let (loaded, _) = load(cli)?;
            let w = loaded
                .words
                .get(word)
                .ok_or_else(|| format!("unknown word `{word}`"))?;
            let value = tilde_c(w);
            emit_element(cli, &loaded, word, &value);
            Ok(true)
        }
        Command::Link {
            cmd: LinkCmd::Check { name },
        } => {
            let (loaded, _) = load(cli)?;
            let link = loaded
                .links
                .get(name)
                .ok_or_else(|| format!("unknown link `{name}`"))?;
            let u = &loaded.universe;
            let now = c_of_link(u, link);
            let stable = now == *link.c_at_construction();
            let witness_zero = c(u, &link.witness_l2).is_zero();
            let verdict = match nontrivial(u, link) {
                Nontriviality::Yes(rule) => format!("Yes(Rule {rule})"),
                Nontriviality::No => "No".to_string(),
                Nontriviality::Unknown => "Unknown".to_string(),
            };
            if cli.json {
                let out = serde_json::json!({
                    "link": name,
                    "nontrivial": verdict,
                    "c": u.display_element(&now),
                    "terms": terms_json(&loaded, &now),
                    "stable": stable,
                    "witness_zero": witness_zero,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                println!("nontrivial: {verdict}; c = {}", u.display_element(&now));
            }
            Ok(stable && witness_zero)
        }
        Command::Cremona {
            cmd: CremonaCmd::Eval { family, words },
        } => {
            let (loaded, _) = load(cli)?;
            let fam = loaded
                .families
                .get(family)
                .ok_or_else(|| format!("unknown family `{family}`"))?;
            let refs: Vec<_> = words
                .iter()
                .map(|n| {
                    loaded
                        .words
                        .get(n)
                        .ok_or_else(|| format!("unknown word `{n}`"))
                })
                .collect::<Result<_, _>>()?;
            let m = motivic::links::cremona_hom(&loaded.universe, fam, &refs)
                .map_err(|e| e.to_string())?;
            if cli.json {
                let rows: Vec<Vec<String>> = (0..m.rows())
                    .map(|r| (0..m.cols()).map(|c| m[(r, c)].to_string()).collect())
                    .collect();
                let out = serde_json::json!({
                    "family": family,
                    "words": words,
                    "matrix": rows,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                for r in 0..m.rows() {
                    let row: Vec<String> =
                        (0..m.cols()).map(|c| m[(r, c)].to_string()).collect();
                    println!("{}", row.join(" "));
                }
            }
            Ok(true)
        }
        Command::K0 {
            cmd: K0Cmd::Report { fragment },
        } => {
            let (mut loaded, _) = load(cli)?;
            let spec = loaded
                .fragments
                .get(fragment)
                .cloned()
                .ok_or_else(|| format!("unknown fragment `{fragment}`"))?;
            let t = build_fragment(&mut loaded.universe, &spec, &loaded.words)
                .map_err(|e| e.to_string())?;
            let shape = t.shape().map_err(|e| e.to_string())?;
            let mut parts = Vec::new();
            if shape.free_rank > 0 {
                parts.push(format!("Z^{}", shape.free_rank));
            }
            for d in &shape.torsion {
                parts.push(format!("Z/{d}"));
            }
            let rendered = if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            };
            if cli.json {
                let out = serde_json::json!({
                    "fragment": fragment,
                    "level": spec.level,
                    "generators": t.generators().len(),
                    "relations": t.relations().len(),
                    "free_rank": shape.free_rank,
                    "torsion": shape.torsion.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                    "shape": rendered,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                println!(
                    "generators {}, relations {}, shape {}",
                    t.generators().len(),
                    t.relations().len(),
                    rendered
                );
            }
            Ok(true)
        }
        Command::LEquiv { x, y, d, fragment } => {
            let (mut loaded, _) = load(cli)?;
            let spec = loaded
                .fragments
                .get(fragment)
                .cloned()
                .ok_or_else(|| format!("unknown fragment `{fragment}`"))?;
            let cx = loaded
                .universe
                .lookup(x)
                .ok_or_else(|| format!("unknown class `{x}`"))?;
            let cy = loaded
                .universe
                .lookup(y)
                .ok_or_else(|| format!("unknown class `{y}`"))?;
            let t = build_fragment(&mut loaded.universe, &spec, &loaded.words)
                .map_err(|e| e.to_string())?;
            let eq = motivic::grothendieck::l_equivalence(&loaded.universe, cx, cy, *d, &t)
                .map_err(|e| e.to_string())?;
            if cli.json {
                let out = serde_json::json!({
                    "x": x, "y": y, "d": d, "fragment": fragment, "equivalent": eq,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                println!("{eq}");
            }
            Ok(eq)
        }
        Command::Count { model, q } => {
            let (loaded, _) = load(cli)?;
            let v = loaded
                .named_models
                .get(model)
                .ok_or_else(|| format!("unknown model `{model}`"))?;
            let f = Fq::new(*q).map_err(|e| e.to_string())?;
            let n = count(&f, v, budget).map_err(|e| e.to_string())?;
            if cli.json {
                let out = serde_json::json!({ "model": model, "q": q, "points": n });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                println!("{n}");
            }
            Ok(true)
        }
        Command::Verify { cmd: VerifyCmd::All } => {
            let (mut loaded, name) = load(cli)?;
            let report = verify_all(&mut loaded, &name, budget);
            if cli.json {
                println!("{}", render_json(&report));
            } else {
                print!("{}", render_text(&report));
            }
            Ok(report.passed)
        }
    }
}

fn emit_element(cli: &Cli, loaded: &LoadedUniverse, word: &str, value: &GroupElement) {
    if cli.json {
        let out = serde_json::json!({
            "word": word,
            "value": loaded.universe.display_element(value),
            "terms": terms_json(loaded, value),
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    } else {
        println!("{}", loaded.universe.display_element(value));
    }
}
