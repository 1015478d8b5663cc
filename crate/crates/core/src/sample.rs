//! Seeded random generators for property tests and benchmarks.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::comorphism::PropTheory;
use crate::prop::{AtomLabel, PropFormula, PropSignature};
use crate::semantics::{tuples, Element, FiniteStructure};
use crate::syntax::{FoFormula, FoSignature, SignatureMorphism, Term};

pub use rand::SeedableRng;
pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two constants, one unary function, two unary and one binary predicate.
pub fn family_signature() -> FoSignature {
    FoSignature::from_symbols([("a", 0), ("b", 0), ("f", 1)], [("P", 1), ("Q", 1), ("R", 2)])
        .expect("valid signature")
}

/// Same family without function symbols of positive arity.
pub fn relational_signature() -> FoSignature {
    FoSignature::from_symbols([("a", 0), ("b", 0)], [("P", 1), ("Q", 1), ("R", 2)]).expect("valid signature")
}

fn random_term(rng: &mut SampleRng, sig: &FoSignature, scope: &[String], depth: usize) -> Term {
    let constants: Vec<&String> = sig.functions().iter().filter(|(_, &a)| a == 0).map(|(k, _)| k).collect();
    let compound: Vec<(&String, usize)> =
        sig.functions().iter().filter(|(_, &a)| a > 0).map(|(k, &a)| (k, a)).collect();
    if depth > 0 && !compound.is_empty() && rng.gen_bool(0.25) {
        let (name, arity) = compound[rng.gen_range(0..compound.len())];
        let args = (0..arity).map(|_| random_term(rng, sig, scope, depth - 1)).collect();
        return Term::app(name.clone(), args);
    }
    let choices = scope.len() + constants.len();
    if choices == 0 {
        let (name, arity) = compound[0];
        return Term::app(name.clone(), (0..arity).map(|_| random_term(rng, sig, scope, 0)).collect());
    }
    let i = rng.gen_range(0..choices);
    if i < scope.len() {
        Term::var(scope[i].clone())
    } else {
        Term::constant(constants[i - scope.len()].clone())
    }
}

fn random_atomic(rng: &mut SampleRng, sig: &FoSignature, scope: &[String], equality: bool) -> FoFormula {
    let preds: Vec<(&String, usize)> = sig.predicates().iter().map(|(k, &a)| (k, a)).collect();
    if preds.is_empty() || (equality && rng.gen_bool(0.2)) {
        return FoFormula::eq(random_term(rng, sig, scope, 1), random_term(rng, sig, scope, 1));
    }
    let (name, arity) = preds[rng.gen_range(0..preds.len())];
    FoFormula::atom(name.clone(), (0..arity).map(|_| random_term(rng, sig, scope, 1)).collect())
}

fn random_body(rng: &mut SampleRng, sig: &FoSignature, scope: &mut Vec<String>, depth: usize, equality: bool) -> FoFormula {
    if depth == 0 || rng.gen_bool(0.2) {
        return random_atomic(rng, sig, scope, equality);
    }
    match rng.gen_range(0..8) {
        0 => FoFormula::not(random_body(rng, sig, scope, depth - 1, equality)),
        1 => FoFormula::or(random_body(rng, sig, scope, depth - 1, equality), random_body(rng, sig, scope, depth - 1, equality)),
        2 => FoFormula::and(random_body(rng, sig, scope, depth - 1, equality), random_body(rng, sig, scope, depth - 1, equality)),
        3 => FoFormula::implies(random_body(rng, sig, scope, depth - 1, equality), random_body(rng, sig, scope, depth - 1, equality)),
        4 => FoFormula::iff(random_body(rng, sig, scope, depth - 1, equality), random_body(rng, sig, scope, depth - 1, equality)),
        k => {
            let x = format!("x{}", scope.len());
            scope.push(x.clone());
            let body = random_body(rng, sig, scope, depth - 1, equality);
            scope.pop();
            if k == 5 {
                FoFormula::forall(x, body)
            } else {
                FoFormula::exists(x, body)
            }
        }
    }
}

/// A sentence of connective depth at most `depth`, using all connectives.
pub fn random_sentence(rng: &mut SampleRng, sig: &FoSignature, depth: usize) -> FoFormula {
    random_body(rng, sig, &mut Vec::new(), depth, true)
}

/// Like [`random_sentence`] but without equality atoms.
pub fn random_sentence_without_equality(rng: &mut SampleRng, sig: &FoSignature, depth: usize) -> FoFormula {
    random_body(rng, sig, &mut Vec::new(), depth, false)
}

/// A formula that may have free variables among `free`.
pub fn random_formula(rng: &mut SampleRng, sig: &FoSignature, free: &[&str], depth: usize) -> FoFormula {
    let mut scope: Vec<String> = free.iter().map(|s| s.to_string()).collect();
    random_body(rng, sig, &mut scope, depth, true)
}

/// A ground quantifier-free formula over the given atoms, in the core basis
/// plus conjunction.
pub fn random_ground(rng: &mut SampleRng, atoms: &[FoFormula], depth: usize) -> FoFormula {
    if depth == 0 || rng.gen_bool(0.25) {
        return atoms[rng.gen_range(0..atoms.len())].clone();
    }
    match rng.gen_range(0..3) {
        0 => FoFormula::not(random_ground(rng, atoms, depth - 1)),
        1 => FoFormula::or(random_ground(rng, atoms, depth - 1), random_ground(rng, atoms, depth - 1)),
        _ => FoFormula::and(random_ground(rng, atoms, depth - 1), random_ground(rng, atoms, depth - 1)),
    }
}

/// A uniformly random structure of the given size.
pub fn random_structure(rng: &mut SampleRng, sig: &FoSignature, size: usize) -> FiniteStructure {
    let functions = sig
        .functions()
        .iter()
        .map(|(name, &arity)| {
            let table: BTreeMap<Vec<Element>, Element> =
                tuples(size, arity).map(|args| (args, rng.gen_range(0..size))).collect();
            (name.clone(), table)
        })
        .collect();
    let relations = sig
        .predicates()
        .iter()
        .map(|(name, &arity)| {
            let set: BTreeSet<Vec<Element>> = tuples(size, arity).filter(|_| rng.gen_bool(0.5)).collect();
            (name.clone(), set)
        })
        .collect();
    FiniteStructure::from_tables(sig, size, functions, relations).expect("total tables")
}

pub fn random_prop(rng: &mut SampleRng, vars: usize, depth: usize) -> PropFormula {
    if depth == 0 || rng.gen_bool(0.3) {
        let v = PropFormula::var(rng.gen_range(0..vars));
        return if rng.gen_bool(0.5) { PropFormula::not(v) } else { v };
    }
    match rng.gen_range(0..3) {
        0 => PropFormula::not(random_prop(rng, vars, depth - 1)),
        1 => PropFormula::or(random_prop(rng, vars, depth - 1), random_prop(rng, vars, depth - 1)),
        _ => PropFormula::and(random_prop(rng, vars, depth - 1), random_prop(rng, vars, depth - 1)),
    }
}

/// `k` variables labelled `p1(c1) .. pk(c1)`.
pub fn prop_signature(k: usize) -> Arc<PropSignature> {
    let labels = (1..=k).map(|i| AtomLabel::pred(format!("p{i}"), vec![1])).collect();
    Arc::new(PropSignature::new(labels).expect("distinct labels"))
}

/// A theory of `axioms` random formulas with no background axioms.
pub fn random_prop_theory(rng: &mut SampleRng, vars: usize, axioms: usize, depth: usize) -> PropTheory {
    let formulas = (0..axioms).map(|_| random_prop(rng, vars, depth)).collect();
    PropTheory::new(prop_signature(vars), formulas, vec![]).expect("variables in range")
}

/// A bijective renaming of `sig`: per arity, either a permutation of the
/// symbols or a shuffle onto fresh names.
pub fn random_renaming(rng: &mut SampleRng, sig: &FoSignature) -> SignatureMorphism {
    fn shuffle_by_arity(rng: &mut SampleRng, symbols: &BTreeMap<String, usize>, prefix: &str) -> BTreeMap<String, String> {
        let mut by_arity: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
        for (name, &arity) in symbols {
            by_arity.entry(arity).or_default().push(name);
        }
        let mut map = BTreeMap::new();
        for (arity, names) in by_arity {
            let mut targets: Vec<String> = if rng.gen_bool(0.5) {
                names.iter().map(|n| n.to_string()).collect()
            } else {
                (0..names.len()).map(|i| format!("{prefix}{arity}_{i}")).collect()
            };
            targets.shuffle(rng);
            map.extend(names.into_iter().cloned().zip(targets));
        }
        map
    }
    let functions = shuffle_by_arity(rng, sig.functions(), "g");
    let predicates = shuffle_by_arity(rng, sig.predicates(), "S");
    let target = FoSignature::from_symbols(
        functions.iter().map(|(k, v)| (v.clone(), sig.functions()[k])),
        predicates.iter().map(|(k, v)| (v.clone(), sig.predicates()[k])),
    )
    .expect("fresh names");
    SignatureMorphism::new(sig.clone(), target, functions, predicates).expect("arity preserving")
}
