//! Spec ingestion and the `garcat` command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bisections::{format_tuple, BasicOpen};
use crate::category::{Category, CategorySpec, GraphSpec};
use crate::fullgroup::{
    format_normal_form, generators, oracle_verdict, solve_word, step_budget_from_env, Catalogue, Word,
};
use crate::garside::{normal_form, verify_garside_axioms, GarsideFamily};
use crate::zappa_szep::{Automaton, AutomatonSpec, ZsCategory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_FAILED: i32 = 4;
pub const EXIT_DISAGREE: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid spec: {0}")]
    Spec(String),
}

/// Base object: a subset of vertices with exclusion lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSpec {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub exclusions: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub factors: Vec<GraphSpec>,
    #[serde(default)]
    pub automaton: Option<AutomatonSpec>,
    #[serde(default)]
    pub base: Option<BaseSpec>,
}

/// A compiled spec: the category with its action, and the base object.
pub struct Loaded {
    pub zc: ZsCategory,
    pub base: Vec<BasicOpen>,
}

const O2: &str = include_str!("../specs/o2.json");
const O2XO2: &str = include_str!("../specs/o2xo2.json");
const GRIGORCHUK: &str = include_str!("../specs/grigorchuk.json");

/// The bundled specs by file stem.
pub fn bundled_spec(name: &str) -> Option<&'static str> {
    match name {
        "o2" => Some(O2),
        "o2xo2" => Some(O2XO2),
        "grigorchuk" => Some(GRIGORCHUK),
        _ => None,
    }
}

pub const BUNDLED: [&str; 3] = ["o2", "o2xo2", "grigorchuk"];

pub fn load_spec(text: &str) -> Result<Loaded, CliError> {
    let doc: SpecDocument = serde_json::from_str(text)?;
    let cat = Category::from_spec(&CategorySpec { factors: doc.factors.clone() }).map_err(|e| CliError::Spec(e.to_string()))?;
    let automaton = match &doc.automaton {
        Some(a) => Some(Automaton::from_spec(a, &cat).map_err(|e| CliError::Spec(e.to_string()))?),
        None => None,
    };
    let base = match &doc.base {
        None => cat.objects().iter().map(|v| BasicOpen::full(cat.identity(v))).collect(),
        Some(b) => {
            if b.vertices.is_empty() {
                return Err(CliError::Spec("empty base".into()));
            }
            let names: BTreeMap<String, Vec<u32>> = cat.objects().into_iter().map(|v| (cat.object_name(&v), v)).collect();
            for k in b.exclusions.keys() {
                if !b.vertices.contains(k) {
                    return Err(CliError::Spec(format!("exclusions for {k}, which is not a base vertex")));
                }
            }
            let mut out = Vec::new();
            for name in &b.vertices {
                let v = names.get(name).ok_or_else(|| CliError::Spec(format!("unknown vertex {name}")))?;
                let mut excl = Vec::new();
                for s in b.exclusions.get(name).into_iter().flatten() {
                    let m = cat.parse(s).map_err(|e| CliError::Spec(e.to_string()))?;
                    if m.target() != v {
                        return Err(CliError::Spec(format!("exclusion {s} does not start at {name}")));
                    }
                    excl.push(m);
                }
                let u = BasicOpen::at_vertex(&cat, v, excl);
                if u.is_empty() {
                    return Err(CliError::Spec(format!("base entry at {name} is empty")));
                }
                out.push(u);
            }
            out
        }
    };
    Ok(Loaded { zc: ZsCategory::new(cat, automaton), base })
}

/// Reads a spec path; a bare bundled name such as `o2` also works.
pub fn read_spec(path: &PathBuf) -> Result<Loaded, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => match path.to_str().and_then(|p| bundled_spec(p.trim_end_matches(".json"))) {
            Some(t) if !path.exists() => t.to_string(),
            _ => return Err(CliError::Io { path: path.display().to_string(), source: e }),
        },
    };
    load_spec(&text)
}

#[derive(Debug, Parser)]
#[command(name = "garcat", version, about = "Normal forms and word problems for full groups of k-graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check degree hypotheses, the Garside axioms and the lifting conditions.
    Check {
        spec: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long)]
        json: bool,
    },
    /// Print the greedy normal form of a morphism.
    Nf {
        spec: PathBuf,
        morphism: String,
        #[arg(long)]
        json: bool,
    },
    /// Decide triviality of full-group words, one per line.
    Word {
        spec: PathBuf,
        /// Word file; omit together with --random to generate words.
        words: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        verbose: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        /// Generate this many random closed words instead of reading a file.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long)]
        json: bool,
    },
    /// List the generator catalogue.
    Gens {
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: u32,
        #[arg(long)]
        json: bool,
    },
}

/// Runs the CLI and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let res = match cli.command {
        Command::Check { spec, max_degree, json } => cmd_check(&spec, max_degree, json, out),
        Command::Nf { spec, morphism, json } => cmd_nf(&spec, &morphism, json, out),
        Command::Word { spec, words, oracle, verbose, seed, depth, random, max_len, json } => {
            cmd_word(&spec, words.as_ref(), WordOptions { oracle, verbose, seed, depth, random, max_len, json }, out)
        }
        Command::Gens { spec, depth, json } => cmd_gens(&spec, depth, json, out),
    };
    match res {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "garcat: {msg}");
            EXIT_PARSE
        }
    }
}

fn emit(out: &mut dyn Write, s: impl std::fmt::Display) -> Result<(), String> {
    writeln!(out, "{s}").map_err(|e| e.to_string())
}

fn cmd_check(spec: &PathBuf, max_degree: u32, json: bool, out: &mut dyn Write) -> Result<i32, String> {
    let loaded = read_spec(spec).map_err(|e| e.to_string())?;
    let zc = &loaded.zc;
    let cat = zc.ground();
    let mut rows: Vec<(String, bool, Option<String>)> = Vec::new();

    let hyp = cat.check_degree_hypotheses();
    let bad_loops: Vec<String> = hyp
        .rows
        .iter()
        .filter(|r| r.loops < 2)
        .map(|r| format!("vertex {} colour {} has {} loop(s)", r.vertex, r.colour, r.loops))
        .collect();
    rows.push(("≥2 condition: two loops per vertex and colour".into(), bad_loops.is_empty(), bad_loops.first().cloned()));
    let bad_src: Vec<String> = hyp
        .rows
        .iter()
        .filter(|r| r.outgoing == 0)
        .map(|r| format!("vertex {} colour {} is a source", r.vertex, r.colour))
        .collect();
    rows.push(("no sources".into(), bad_src.is_empty(), bad_src.first().cloned()));

    let report = verify_garside_axioms(cat, &GarsideFamily::standard(), &vec![max_degree; cat.rank()]);
    for c in &report.checks {
        rows.push((format!("Garside axiom: {}", c.name), c.passed, c.counterexample.clone()));
    }
    let lift = zc.lift_garside(max_degree.max(1));
    let mut ok = rows.iter().all(|r| r.1) && lift.passed();
    for (name, passed, why) in lift.checks {
        rows.push((format!("lift: {name}"), passed, why));
    }
    if zc.automaton().is_some() {
        let rc = zc.check_right_cancellative(max_degree.min(3));
        rows.push(("lift: right cancellation up to units".into(), rc, None));
        ok &= rc;
    }

    if json {
        let checks: Vec<_> = rows.iter().map(|(n, p, w)| json!({"check": n, "passed": p, "detail": w})).collect();
        emit(out, serde_json::to_string_pretty(&json!({"command": "check", "max_degree": max_degree, "passed": ok, "checks": checks})).unwrap())?;
    } else {
        for (name, passed, why) in &rows {
            let mut line = format!("{:<58} {}", name, if *passed { "pass" } else { "FAIL" });
            if let Some(w) = why {
                line.push_str(&format!("  ({w})"));
            }
            emit(out, line)?;
        }
        emit(out, if ok { "result: pass" } else { "result: FAIL" })?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_nf(spec: &PathBuf, morphism: &str, json: bool, out: &mut dyn Write) -> Result<i32, String> {
    let loaded = read_spec(spec).map_err(|e| e.to_string())?;
    let cat = loaded.zc.ground();
    let a = if morphism.trim().is_empty() {
        let objs = cat.objects();
        if objs.len() != 1 {
            return Err("the empty morphism needs a vertex (@name)".into());
        }
        cat.identity(&objs[0])
    } else {
        cat.parse(morphism).map_err(|e| e.to_string())?
    };
    let nf = normal_form(cat, &a);
    let factors: Vec<String> = nf.factors.iter().map(|f| cat.format(f)).collect();
    if json {
        emit(out, serde_json::to_string_pretty(&json!({"command": "nf", "morphism": cat.format(&a), "factors": factors, "norm": nf.norm()})).unwrap())?;
    } else {
        for (i, f) in factors.iter().enumerate() {
            emit(out, format!("{}: {f}", i + 1))?;
        }
        emit(out, format!("norm: {}", nf.norm()))?;
    }
    Ok(EXIT_OK)
}

struct WordOptions {
    oracle: bool,
    verbose: bool,
    seed: u64,
    depth: u32,
    random: Option<usize>,
    max_len: usize,
    json: bool,
}

fn cmd_word(spec: &PathBuf, file: Option<&PathBuf>, opt: WordOptions, out: &mut dyn Write) -> Result<i32, String> {
    let loaded = read_spec(spec).map_err(|e| e.to_string())?;
    let zc = &loaded.zc;
    let cat: Catalogue = generators(zc, &loaded.base, opt.depth).map_err(|e| e.to_string())?;
    let words: Vec<Word> = match (file, opt.random) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let mut ws = Vec::new();
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("");
                ws.push(cat.parse_word(line).map_err(|e| format!("line {}: {e}", n + 1))?);
            }
            ws
        }
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
            (0..n).map(|_| cat.random_word(&mut rng, opt.max_len)).collect()
        }
        _ => return Err("give either a word file or --random N".into()),
    };
    let budget = step_budget_from_env();
    let mut disagree = false;
    let mut results = Vec::new();
    if !opt.json {
        emit(out, format!("# seed {} depth {} generators {}", opt.seed, opt.depth, cat.generators.len()))?;
    }
    for w in &words {
        let sol = solve_word(zc, &cat, w, budget).map_err(|e| e.to_string())?;
        let table = if opt.oracle { Some(oracle_verdict(zc, &cat, w).map_err(|e| e.to_string())?) } else { None };
        let agree = table.map(|t| t == sol.verdict);
        if agree == Some(false) {
            disagree = true;
        }
        if opt.json {
            let mut r = json!({"word": cat.format_word(w), "verdict": sol.verdict.to_string(), "steps": sol.steps});
            if let Some(t) = table {
                r["oracle"] = json!(t.to_string());
                r["agree"] = json!(agree == Some(true));
            }
            if opt.verbose {
                r["alpha"] = json!(format_normal_form(zc, &sol.alpha));
                r["beta"] = json!(format_normal_form(zc, &sol.beta));
            }
            results.push(r);
        } else {
            let mut line = sol.verdict.to_string();
            if let Some(t) = table {
                line = format!("{line:<11} {t:<11} {}", if agree == Some(true) { "AGREE" } else { "DISAGREE" });
            }
            if opt.random.is_some() {
                line = format!("{line}  {}", cat.format_word(w));
            }
            emit(out, line)?;
            if opt.verbose {
                emit(out, format!("  alpha: {}", format_normal_form(zc, &sol.alpha)))?;
                emit(out, format!("  beta:  {}", format_normal_form(zc, &sol.beta)))?;
                emit(out, format!("  steps: {}", sol.steps))?;
            }
        }
    }
    if opt.json {
        emit(out, serde_json::to_string_pretty(&json!({"command": "word", "seed": opt.seed, "depth": opt.depth, "results": results, "disagreements": disagree})).unwrap())?;
    }
    Ok(if disagree { EXIT_DISAGREE } else { EXIT_OK })
}

fn cmd_gens(spec: &PathBuf, depth: u32, json: bool, out: &mut dyn Write) -> Result<i32, String> {
    let loaded = read_spec(spec).map_err(|e| e.to_string())?;
    let zc = &loaded.zc;
    let cat = generators(zc, &loaded.base, depth).map_err(|e| e.to_string())?;
    if json {
        let gens: Vec<_> = cat
            .generators
            .iter()
            .map(|g| json!({"name": g.name, "description": g.description, "tuple": format_tuple(zc, &g.morphism)}))
            .collect();
        emit(out, serde_json::to_string_pretty(&json!({"command": "gens", "depth": depth, "objects": cat.objects.len(), "generators": gens})).unwrap())?;
    } else {
        for g in &cat.generators {
            emit(out, format!("{:<15} {}  {}", g.name, g.description, format_tuple(zc, &g.morphism)))?;
        }
    }
    Ok(EXIT_OK)
}
