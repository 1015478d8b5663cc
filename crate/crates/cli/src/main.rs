use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use subsat_core::comorphism::{gamma_mod, translate_theory, Bound};
use subsat_core::finder::{enumerate_assignments_capped, find_assignment_capped, DEFAULT_SEARCH_CAP};
use subsat_core::parser::parse_theory_bytes;
use subsat_core::semantics::{eval_sentence, FiniteStructure, DEFAULT_ENUMERATION_LIMIT};
use subsat_core::tableau::{
    extract_candidate_structure, open_branch_leaves, saturate_bounded, saturate_ground, BranchStatus, Limits,
    Tableau, TableauStatus,
};
use subsat_core::{Error, FoFormula, TheoryPresentation, Valuation};

mod dimacs;

const VERDICT: &str = "goal is not provable from the axioms (sound calculi cannot prove it)";
const NO_CONCLUSION: &str =
    "no counterexample within the bound; this says nothing about whether the goal is provable";

#[derive(Parser)]
#[command(name = "subsat", version, about = "Bounded model finding, refutation and tableaux for first-order theories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Search {
    /// Largest domain size to try; sizes 1..=N are scanned in order.
    #[arg(long, default_value_t = 3)]
    bound: usize,
    /// Refuse translations with more propositional variables than this.
    #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
    max_vars: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a finite model of the axioms (the goal is ignored).
    FindModel {
        file: PathBuf,
        #[command(flatten)]
        search: Search,
        /// Print every model at the first bound that has one.
        #[arg(long)]
        all: bool,
    },
    /// Search for a finite model of the axioms and the negated goal.
    Refute {
        file: PathBuf,
        #[command(flatten)]
        search: Search,
    },
    /// Run a semantic tableau on the axioms.
    Tableau {
        file: PathBuf,
        /// Node budget for runs with quantifiers.
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        /// Instantiations allowed per universal formula on a branch.
        #[arg(long, default_value_t = 8)]
        max_instances: usize,
        #[arg(long)]
        json: bool,
    },
    /// Print the propositional translation at a fixed bound.
    Translate {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        bound: usize,
        /// Also write the translation as DIMACS CNF.
        #[arg(long)]
        dimacs: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the axioms and goal in a model file.
    Eval {
        file: PathBuf,
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::VariableCap { .. } | Error::TranslationTooLarge(_) | Error::EnumerationLimit { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

struct Outcome {
    code: u8,
    stdout: String,
    /// Printed to stderr after stdout.
    note: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            if let Some(note) = out.note {
                eprintln!("{note}");
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::FindModel { file, search, all } => find_model(&file, &search, all),
        Command::Refute { file, search } => refute(&file, &search),
        Command::Tableau { file, max_steps, max_instances, json } => tableau(&file, max_steps, max_instances, json),
        Command::Translate { file, bound, dimacs, json } => translate(&file, bound, dimacs.as_deref(), json),
        Command::Eval { file, model, json } => eval(&file, &model, json),
    }
}

fn load(path: &Path) -> Result<TheoryPresentation, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_theory_bytes(&bytes).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn bound(n: usize) -> Result<Bound, Failure> {
    Bound::new(n).map_err(|_| usage("--bound must be at least 1"))
}

fn enumeration_limit() -> Result<u64, Failure> {
    match std::env::var("SUBSAT_ENUM_LIMIT") {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!("SUBSAT_ENUM_LIMIT must be a positive integer, got `{s}`"))),
        },
        Err(_) => Ok(DEFAULT_ENUMERATION_LIMIT),
    }
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

struct Found {
    bound: usize,
    valuations: Vec<Valuation>,
    structures: Vec<FiniteStructure>,
    exhausted: bool,
}

/// Scans bounds `1..=max` and stops at the first with a model.
fn scan(theory: &TheoryPresentation, search: &Search, all: bool, tried: &mut Vec<usize>) -> Result<Option<Found>, Failure> {
    let limit = enumeration_limit()?;
    for n in 1..=search.bound {
        let b = bound(n)?;
        let prop = translate_theory(theory, b)?;
        let (valuations, exhausted) = if all {
            let e = enumerate_assignments_capped(&prop, usize::try_from(limit).unwrap_or(usize::MAX), search.max_vars)?;
            (e.valuations, e.exhausted)
        } else {
            (find_assignment_capped(&prop, search.max_vars)?.into_iter().collect(), true)
        };
        tried.push(n);
        if valuations.is_empty() {
            continue;
        }
        let structures = valuations
            .iter()
            .map(|v| gamma_mod(v, theory.signature(), b))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Some(Found { bound: n, valuations, structures, exhausted }));
    }
    Ok(None)
}

fn find_model(file: &Path, search: &Search, all: bool) -> Result<Outcome, Failure> {
    let theory = load(file)?.without_goal();
    bound(search.bound)?;
    let mut tried = Vec::new();
    let found = scan(&theory, search, all, &mut tried)?;
    let mut out = String::new();
    let (code, note) = match &found {
        Some(f) => {
            for m in &f.structures {
                debug_assert!(theory.axioms().iter().all(|a| eval_sentence(m, a) == Ok(true)));
            }
            if f.exhausted {
                (0, None)
            } else {
                (3, Some(format!("stopped after {} models (SUBSAT_ENUM_LIMIT)", f.valuations.len())))
            }
        }
        None => (1, None),
    };
    if search.json {
        let result = match &found {
            Some(_) => "model-found",
            None => "no-model",
        };
        let mut v = json!({ "schema": 1, "command": "find-model", "result": result });
        match &found {
            Some(f) => {
                v["bound"] = json!(f.bound);
                v["models"] = Value::Array(
                    f.valuations
                        .iter()
                        .zip(&f.structures)
                        .map(|(val, m)| json!({ "structure": m.to_json(), "valuation": val.to_json() }))
                        .collect(),
                );
                v["complete"] = json!(f.exhausted);
            }
            None => v["bound"] = json!(search.bound),
        }
        v["unsatisfiable_at"] = json!(tried.iter().filter(|&&n| found.as_ref().is_none_or(|f| f.bound != n)).collect::<Vec<_>>());
        out = to_json_text(&v);
    } else {
        for &n in &tried {
            if found.as_ref().is_some_and(|f| f.bound == n) {
                let f = found.as_ref().unwrap();
                let count = f.structures.len();
                writeln!(out, "bound {n}: {} found", if count == 1 { "model".to_string() } else { format!("{count} models") }).unwrap();
                for (i, m) in f.structures.iter().enumerate() {
                    if count > 1 {
                        writeln!(out, "model {}:", i + 1).unwrap();
                    }
                    out.push_str(&indent(&m.to_string()));
                }
            } else {
                writeln!(out, "bound {n}: theory is unsatisfiable at this size").unwrap();
            }
        }
        if found.is_none() {
            writeln!(out, "no model up to bound {}", search.bound).unwrap();
        }
    }
    Ok(Outcome { code, stdout: out, note })
}

fn verdict_lines(theory: &TheoryPresentation, goal: &FoFormula, m: &FiniteStructure) -> Result<Vec<(String, bool, String)>, Failure> {
    let mut rows = Vec::new();
    for (i, a) in theory.axioms().iter().enumerate() {
        rows.push((format!("axiom {}", i + 1), eval_sentence(m, a)?, a.to_string()));
    }
    rows.push(("goal".to_string(), eval_sentence(m, goal)?, goal.to_string()));
    Ok(rows)
}

fn mark(b: bool) -> &'static str {
    if b {
        "⊤"
    } else {
        "⊥"
    }
}

fn refute(file: &Path, search: &Search) -> Result<Outcome, Failure> {
    let theory = load(file)?;
    let goal = theory.goal().cloned().ok_or_else(|| usage("refute needs a `goal:` in the theory file"))?;
    bound(search.bound)?;
    let target = theory.refutation_theory().expect("goal is present");
    let mut tried = Vec::new();
    let found = scan(&target, search, false, &mut tried)?;
    let mut out = String::new();
    let Some(f) = found else {
        if search.json {
            let v = json!({
                "schema": 1,
                "command": "refute",
                "result": "no-counterexample",
                "bound": search.bound,
                "note": NO_CONCLUSION,
            });
            out = to_json_text(&v);
        } else {
            writeln!(out, "no counterexample up to bound {}", search.bound).unwrap();
            writeln!(out, "note: {NO_CONCLUSION}").unwrap();
        }
        return Ok(Outcome { code: 1, stdout: out, note: None });
    };
    let m = &f.structures[0];
    let rows = verdict_lines(&theory, &goal, m)?;
    let verified = rows.iter().all(|(name, holds, _)| *holds == (name != "goal"));
    if !verified {
        return Err(Failure { code: 2, message: "internal error: counterexample failed re-verification".into() });
    }
    if search.json {
        let report: Vec<Value> = rows
            .iter()
            .map(|(name, holds, text)| json!({ "sentence": name, "formula": text, "value": holds }))
            .collect();
        let v = json!({
            "schema": 1,
            "command": "refute",
            "result": "counterexample",
            "bound": f.bound,
            "structure": m.to_json(),
            "valuation": f.valuations[0].to_json(),
            "report": report,
            "verdict": VERDICT,
        });
        out = to_json_text(&v);
    } else {
        writeln!(out, "counterexample at bound {}:", f.bound).unwrap();
        out.push_str(&indent(&m.to_string()));
        for (name, holds, text) in &rows {
            writeln!(out, "{name}: {}  {text}", mark(*holds)).unwrap();
        }
        writeln!(out, "verdict: {VERDICT}").unwrap();
    }
    Ok(Outcome { code: 0, stdout: out, note: None })
}

fn tableau(file: &Path, max_steps: usize, max_instances: usize, json: bool) -> Result<Outcome, Failure> {
    let theory = load(file)?;
    let root = theory.axioms().iter().map(FoFormula::normalize).collect();
    let ground = theory.axioms().iter().all(|a| a.is_ground() && a.is_quantifier_free());
    let t: Tableau = if ground {
        saturate_ground(root)?
    } else {
        let limits = Limits { max_nodes: max_steps, max_instantiations_per_universal: max_instances };
        saturate_bounded(root, limits).map_err(|e| match e {
            Error::InvalidLimit(m) => usage(m),
            other => other.into(),
        })?
        .0
    };
    let status = t.status();
    let code = if t.has_open_branch() {
        0
    } else if status == TableauStatus::AllClosed {
        1
    } else {
        3
    };
    let open = open_branch_leaves(&t, false)?;
    let mut models = Vec::new();
    if ground {
        for leaf in &open {
            models.push(extract_candidate_structure(leaf, theory.signature()).map(|c| c.structure));
        }
    }
    let out = if json {
        let mut v = json!({ "schema": 1, "command": "tableau", "mode": if ground { "ground" } else { "bounded" } });
        let dump = t.to_json();
        for key in ["status", "nodes", "edges", "branches"] {
            v[key] = dump[key].clone();
        }
        v["models"] = Value::Array(
            models
                .iter()
                .map(|m| match m {
                    Ok(m) => m.to_json(),
                    Err(e) => json!({ "error": e.to_string() }),
                })
                .collect(),
        );
        to_json_text(&v)
    } else {
        let mut out = String::new();
        writeln!(out, "mode: {}", if ground { "ground" } else { "bounded" }).unwrap();
        writeln!(out, "status: {}", status.tag()).unwrap();
        writeln!(out, "nodes: {}", t.nodes().len()).unwrap();
        let mut open_index = 0;
        for (i, leaf) in t.leaves().into_iter().enumerate() {
            let s = t.branch_status(leaf).map_or("unexpanded", BranchStatus::tag);
            writeln!(out, "branch {}: {s}", i + 1).unwrap();
            if t.branch_status(leaf) == Some(BranchStatus::Saturated) {
                for f in t.nodes()[leaf].label.formulas().expect("open leaf") {
                    writeln!(out, "  {f}").unwrap();
                }
                if let Some(m) = models.get(open_index) {
                    match m {
                        Ok(m) => {
                            writeln!(out, "  model:").unwrap();
                            out.push_str(&indent(&indent(&m.to_string())));
                        }
                        Err(e) => writeln!(out, "  no model: {e}").unwrap(),
                    }
                }
                open_index += 1;
            }
        }
        out
    };
    Ok(Outcome { code, stdout: out, note: None })
}

fn translate(file: &Path, n: usize, dimacs: Option<&Path>, json: bool) -> Result<Outcome, Failure> {
    let theory = load(file)?.without_goal();
    let prop = translate_theory(&theory, bound(n)?)?;
    if let Some(path) = dimacs {
        std::fs::write(path, dimacs::encode(&prop)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let out = if json {
        let sig = prop.signature();
        let v = json!({
            "schema": 1,
            "command": "translate",
            "bound": n,
            "variables": sig.vars().iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "axioms": prop.translated().iter().map(|f| f.display(sig).to_string()).collect::<Vec<_>>(),
            "background": prop
                .background()
                .iter()
                .map(|b| json!({ "kind": b.kind.tag(), "formula": b.formula.display(sig).to_string() }))
                .collect::<Vec<_>>(),
        });
        to_json_text(&v)
    } else {
        prop.dump()
    };
    Ok(Outcome { code: 0, stdout: out, note: None })
}

fn eval(file: &Path, model: &Path, json: bool) -> Result<Outcome, Failure> {
    let theory = load(file)?;
    let text = std::fs::read_to_string(model).map_err(|e| usage(format!("{}: {e}", model.display())))?;
    let m = FiniteStructure::from_json(&text, theory.signature()).map_err(|e| usage(format!("{}: {e}", model.display())))?;
    let mut rows = Vec::new();
    for (i, a) in theory.axioms().iter().enumerate() {
        rows.push((format!("axiom {}", i + 1), eval_sentence(&m, a)?, a.to_string()));
    }
    if let Some(g) = theory.goal() {
        rows.push(("goal".to_string(), eval_sentence(&m, g)?, g.to_string()));
    }
    let all_hold = rows.iter().filter(|(name, ..)| name != "goal").all(|(_, holds, _)| *holds);
    let out = if json {
        let v = json!({
            "schema": 1,
            "command": "eval",
            "axioms_hold": all_hold,
            "report": rows
                .iter()
                .map(|(name, holds, text)| json!({ "sentence": name, "formula": text, "value": holds }))
                .collect::<Vec<_>>(),
        });
        to_json_text(&v)
    } else {
        rows.iter().map(|(name, holds, text)| format!("{name}: {}  {text}\n", mark(*holds))).collect()
    };
    Ok(Outcome { code: if all_hold { 0 } else { 1 }, stdout: out, note: None })
}
