use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use subsat_core::comorphism::{translate_theory, Bound};
use subsat_core::finder::find_assignment_capped;
use subsat_core::parser::parse_theory;
use subsat_core::sample;
use subsat_core::TheoryPresentation;

fn subsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subsat")).args(args).output().expect("binary runs")
}

fn theory_file(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("theories").join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn find_model_for_single_atom() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.thy", "sig { functions: a/0; predicates: P/1; } axioms { P(a); }");
    let out = subsat(&["find-model", &f, "--bound", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("a = c1"), "{text}");
    assert!(text.contains("P = {(c1)}"), "{text}");
}

#[test]
fn find_model_reports_unsatisfiable() {
    let out = subsat(&["find-model", &theory_file("clash.thy"), "--bound", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("no model up to bound 3"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.thy", "sig { predicates: P/1; } axioms { P(x); }");
    for cmd in ["find-model", "refute", "tableau", "translate"] {
        let out = subsat(&[cmd, &f]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("1:35"), "{cmd}");
    }
    let missing = subsat(&["find-model", "/nonexistent/theory.thy"]);
    assert_eq!(missing.status.code(), Some(2));
    let zero = subsat(&["find-model", &theory_file("some_p.thy"), "--bound", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn refute_requires_goal() {
    let out = subsat(&["refute", &theory_file("clash.thy")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refute_prints_verdict_and_report() {
    let out = subsat(&["refute", &theory_file("some_p.thy"), "--bound", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("counterexample at bound 2"));
    assert!(text.contains("axiom 1: ⊤"));
    assert!(text.contains("goal: ⊥"));
    assert!(text.contains("verdict: goal is not provable from the axioms (sound calculi cannot prove it)"));
}

#[test]
fn refute_reports_found_at_every_larger_bound() {
    for n in 2..=4 {
        let out = subsat(&["refute", &theory_file("some_p.thy"), "--bound", &n.to_string()]);
        assert_eq!(out.status.code(), Some(0), "bound {n}");
    }
    let out = subsat(&["refute", &theory_file("some_p.thy"), "--bound", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tableau_exit_codes() {
    let closed = subsat(&["tableau", &theory_file("ground_clash.thy")]);
    assert_eq!(closed.status.code(), Some(1));
    let open = subsat(&["tableau", &theory_file("ground_choice.thy")]);
    assert_eq!(open.status.code(), Some(0));
    let text = stdout(&open);
    assert_eq!(text.matches("open-saturated").count(), 3, "{text}");
    let tiny = subsat(&["tableau", &theory_file("strict_order.thy"), "--max-steps", "3"]);
    assert_eq!(tiny.status.code(), Some(3));
    let zero = subsat(&["tableau", &theory_file("strict_order.thy"), "--max-steps", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn tableau_json_dump() {
    let out = subsat(&["tableau", &theory_file("ground_choice.thy"), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["status"], "open-saturated");
    assert_eq!(v["edges"][0]["rule"], "OR");
    assert_eq!(v["models"].as_array().unwrap().len(), 2);
}

#[test]
fn translate_empty_theory_is_background_only() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "empty.thy", "sig { } axioms { }");
    let out = subsat(&["translate", &f, "--bound", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "# variables: 1\n# var 1 [[c1=c1]]\nunique-names: [[c1=c1]]\n");
}

#[test]
fn translate_single_atom_at_two() {
    let out = subsat(&["translate", &theory_file("some_p.thy"), "--bound", "2"]);
    let text = stdout(&out);
    assert!(
        text.contains("axiom 1: ~(~([[P(c1)]]) | ~([[c1=a]])) | ~(~([[P(c2)]]) | ~([[c2=a]]))"),
        "{text}"
    );
}

#[test]
fn eval_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let file = theory_file("dominance.thy");
    let found = subsat(&["find-model", &file, "--bound", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&found.stdout).unwrap();
    let mut structure = v["models"][0]["structure"].clone();
    let good = write(dir.path(), "good.json", &structure.to_string());
    let out = subsat(&["eval", &file, &good]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!stdout(&out).lines().filter(|l| l.starts_with("axiom")).any(|l| l.contains('⊥')));

    structure["relations"]["P"] = serde_json::json!([]);
    let bad = write(dir.path(), "bad.json", &structure.to_string());
    let out = subsat(&["eval", &file, &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("axiom 2: ⊥"));

    let size = structure["size"].as_u64().unwrap();
    structure["functions"]["a"] = serde_json::json!({ "()": format!("c{}", size + 1) });
    let wrong = write(dir.path(), "wrong.json", &structure.to_string());
    assert_eq!(subsat(&["eval", &file, &wrong]).status.code(), Some(2));
}

#[test]
fn enumeration_limit_truncates() {
    let file = theory_file("ground_choice.thy");
    let all = subsat(&["find-model", &file, "--bound", "1", "--all"]);
    assert_eq!(all.status.code(), Some(0));
    assert!(stdout(&all).contains("3 models found"));
    let limited = Command::new(env!("CARGO_BIN_EXE_subsat"))
        .args(["find-model", &file, "--bound", "1", "--all"])
        .env("SUBSAT_ENUM_LIMIT", "2")
        .output()
        .unwrap();
    assert_eq!(limited.status.code(), Some(3));
    assert!(stdout(&limited).contains("2 models found"));
    let invalid = Command::new(env!("CARGO_BIN_EXE_subsat"))
        .args(["find-model", &file, "--all"])
        .env("SUBSAT_ENUM_LIMIT", "lots")
        .output()
        .unwrap();
    assert_eq!(invalid.status.code(), Some(2));
}

#[test]
fn variable_cap_exits_3() {
    let out = subsat(&["refute", &theory_file("strict_order.thy"), "--bound", "3", "--max-vars", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

fn dimacs_satisfiable(path: &Path) -> bool {
    let mut solver = varisat::Solver::new();
    solver.add_dimacs_cnf(std::fs::File::open(path).unwrap()).unwrap();
    solver.solve().unwrap()
}

fn check_dimacs(theory: &TheoryPresentation, text: &str, dir: &Path, n: usize) {
    let file = write(dir, "t.thy", text);
    let cnf: PathBuf = dir.join("t.cnf");
    let out = subsat(&["translate", &file, "--bound", &n.to_string(), "--dimacs", &cnf.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    let prop = translate_theory(theory, Bound::new(n).unwrap()).unwrap();
    let expected = find_assignment_capped(&prop, 64).unwrap().is_some();
    assert_eq!(dimacs_satisfiable(&cnf), expected, "{text} at {n}");
}

#[test]
fn dimacs_agrees_with_finder() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["some_p.thy", "all_p.thy", "clash.thy", "ground_mixed.thy", "successor.thy", "dominance.thy"] {
        let text = std::fs::read_to_string(theory_file(name)).unwrap();
        let theory = parse_theory(&text).unwrap().without_goal();
        for n in 1..=2 {
            check_dimacs(&theory, &text, dir.path(), n);
        }
        if let Some(refutation) = parse_theory(&text).unwrap().refutation_theory() {
            let body: Vec<String> = refutation.axioms().iter().map(|a| format!("  {a};")).collect();
            let sig = refutation.signature();
            let syms = |m: &std::collections::BTreeMap<String, usize>| {
                m.iter().map(|(k, v)| format!("{k}/{v}")).collect::<Vec<_>>().join(", ")
            };
            let mut header = String::from("sig { ");
            if !sig.functions().is_empty() {
                header += &format!("functions: {}; ", syms(sig.functions()));
            }
            if !sig.predicates().is_empty() {
                header += &format!("predicates: {}; ", syms(sig.predicates()));
            }
            header += "}";
            let text = format!("{header}\naxioms {{\n{}\n}}\n", body.join("\n"));
            check_dimacs(&refutation, &text, dir.path(), 2);
        }
    }
    let sig = sample::family_signature();
    let mut rng = sample::rng(9);
    for _ in 0..40 {
        let axioms: Vec<_> = (0..2).map(|_| sample::random_sentence(&mut rng, &sig, 3)).collect();
        let theory = TheoryPresentation::new(sig.clone(), axioms, None).unwrap();
        let body: Vec<String> = theory.axioms().iter().map(|a| format!("  {a};")).collect();
        let text = format!("sig {{ functions: a/0, b/0, f/1; predicates: P/1, Q/1, R/2; }}\naxioms {{\n{}\n}}\n", body.join("\n"));
        check_dimacs(&theory, &text, dir.path(), 1);
    }
}
