use std::collections::BTreeSet;

use proptest::prelude::*;
use subsat_core::comorphism::{
    check_satisfaction_condition, gamma_mod, gamma_sen, gamma_sign_morphism, translate_theory, valuation_of, Bound,
};
use subsat_core::finder::{build_truth_table, enumerate_assignments, find_assignment};
use subsat_core::parser::parse_formula;
use subsat_core::prop::{eval_prop, PropFormula, Valuation};
use subsat_core::sample::{self, SampleRng};
use subsat_core::semantics::{all_structures, eval_sentence, DEFAULT_ENUMERATION_LIMIT};
use subsat_core::syntax::{FoFormula, SignatureMorphism, TheoryPresentation};
use subsat_core::tableau::{apply_rule, saturate_bounded, saturate_ground, Branch, Limits, NodeLabel, RuleId, Step, Tableau};

fn ground_atoms() -> Vec<FoFormula> {
    let sig = sample::relational_signature();
    ["P(a)", "Q(a)", "P(b)", "R(a,b)"].iter().map(|t| parse_formula(t, &sig).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let sig = sample::family_signature();
        let mut rng = sample::rng(seed);
        let f = sample::random_formula(&mut rng, &sig, &["y", "z"], 5);
        let again = parse_formula(&f.to_string(), &sig).unwrap();
        prop_assert_eq!(again, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalize_is_core_idempotent_and_truth_preserving(seed in any::<u64>()) {
        let sig = sample::family_signature();
        let mut rng = sample::rng(seed);
        let f = sample::random_sentence(&mut rng, &sig, 4);
        let g = f.normalize();
        prop_assert!(g.is_core());
        prop_assert_eq!(g.normalize(), g.clone());
        for size in 1..=3 {
            let m = sample::random_structure(&mut rng, &sig, size);
            prop_assert_eq!(eval_sentence(&m, &f).unwrap(), eval_sentence(&m, &g).unwrap());
        }
    }
}

#[test]
fn tableau_rules_are_sound_on_small_structures() {
    let atoms = ground_atoms();
    let sig = sample::relational_signature();
    let structures: Vec<_> =
        (1..=2).flat_map(|n| all_structures(&sig, n, DEFAULT_ENUMERATION_LIMIT).unwrap()).collect();
    let mut rng = sample::rng(41);
    let mut checked = 0;
    for _ in 0..60 {
        let root: BTreeSet<FoFormula> = (0..3).map(|_| sample::random_ground(&mut rng, &atoms, 3)).collect();
        let t = saturate_ground(root).unwrap();
        for node in t.nodes() {
            let Some(parent) = node.label.formulas() else { continue };
            if node.children.is_empty() || matches!(t.nodes()[node.children[0]].label, NodeLabel::Closed) {
                continue;
            }
            for m in &structures {
                if !parent.iter().all(|f| eval_sentence(m, f).unwrap()) {
                    continue;
                }
                let some_child_holds = node.children.iter().any(|&c| {
                    t.nodes()[c].label.formulas().unwrap().iter().all(|f| eval_sentence(m, f).unwrap())
                });
                assert!(some_child_holds);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000, "{checked}");
}

#[test]
fn translation_along_composite_is_composite_of_translations() {
    let sig = sample::family_signature();
    let mut rng = sample::rng(7);
    for _ in 0..200 {
        let s1 = sample::random_renaming(&mut rng, &sig);
        let s2 = sample::random_renaming(&mut rng, s1.target());
        let f = sample::random_sentence(&mut rng, &sig, 4);
        let both = s1.then(&s2).unwrap();
        assert_eq!(both.translate(&f).unwrap(), s2.translate(&s1.translate(&f).unwrap()).unwrap());
        let id = SignatureMorphism::identity(&sig);
        assert_eq!(id.translate(&f).unwrap(), f);
        assert_eq!(s1.inverse().unwrap().translate(&s1.translate(&f).unwrap()).unwrap(), f);
    }
}

#[test]
fn sentence_translation_is_natural() {
    let sig = sample::family_signature();
    let mut rng = sample::rng(11);
    for i in 0..100 {
        let n = Bound::new(1 + i % 2).unwrap();
        let sigma = sample::random_renaming(&mut rng, &sig);
        let f = sample::random_sentence(&mut rng, &sig, 3).normalize();
        let renamed_first = gamma_sen(&sigma.translate(&f).unwrap(), sigma.target(), n).unwrap();
        let map = gamma_sign_morphism(&sigma, n).unwrap();
        let translated_first = gamma_sen(&f, &sig, n).unwrap().map_vars(&|v| map[v]);
        assert_eq!(renamed_first, translated_first, "{f}");
    }
}

#[test]
fn translation_keeps_negation_and_conjunction() {
    let sig = sample::family_signature();
    let mut rng = sample::rng(5);
    let n = Bound::new(2).unwrap();
    for _ in 0..100 {
        let a = sample::random_sentence(&mut rng, &sig, 3);
        let b = sample::random_sentence(&mut rng, &sig, 3);
        let m = sample::random_structure(&mut rng, &sig, 2);
        let v = valuation_of(&m, &sig).unwrap();
        let tr = |f: &FoFormula| eval_prop(&v, &gamma_sen(&f.normalize(), &sig, n).unwrap()).unwrap();
        assert_eq!(tr(&FoFormula::not(a.clone())), !tr(&a));
        assert_eq!(tr(&FoFormula::and(a.clone(), b.clone())), tr(&a) && tr(&b));
    }
}

#[test]
fn models_and_valuations_correspond() {
    let sig = sample::family_signature();
    let mut rng = sample::rng(3);
    for size in 1..=3 {
        let n = Bound::new(size).unwrap();
        for _ in 0..50 {
            let m = sample::random_structure(&mut rng, &sig, size);
            let v = valuation_of(&m, &sig).unwrap();
            assert_eq!(gamma_mod(&v, &sig, n).unwrap(), m);
            assert_eq!(valuation_of(&gamma_mod(&v, &sig, n).unwrap(), &sig).unwrap(), v);
            let f = sample::random_sentence(&mut rng, &sig, 4);
            assert!(check_satisfaction_condition(&f, &sig, n, &v).unwrap());
        }
    }
}

#[test]
fn model_reading_rejects_background_violations() {
    let sig = sample::family_signature();
    let n = Bound::new(2).unwrap();
    let m = sample::random_structure(&mut sample::rng(43), &sig, 2);
    let v = valuation_of(&m, &sig).unwrap();
    for i in 0..v.values().len() {
        let mut values = v.values().to_vec();
        values[i] = !values[i];
        let label = v.signature().label(i).unwrap().clone();
        let flipped = Valuation::new(v.signature().clone(), values).unwrap();
        let kind = matches!(label, subsat_core::AtomLabel::Pred { .. });
        assert_eq!(gamma_mod(&flipped, &sig, n).is_ok(), kind, "{label}");
    }
}

#[test]
fn finder_matches_structure_enumeration() {
    let sig = sample::relational_signature();
    let mut rng = sample::rng(21);
    for _ in 0..30 {
        let axioms: Vec<FoFormula> = (0..2).map(|_| sample::random_sentence(&mut rng, &sig, 3)).collect();
        let theory = TheoryPresentation::new(sig.clone(), axioms, None).unwrap();
        let n = Bound::new(1).unwrap();
        let oracle: Vec<_> = all_structures(&sig, 1, DEFAULT_ENUMERATION_LIMIT)
            .unwrap()
            .filter(|m| theory.axioms().iter().all(|a| eval_sentence(m, a).unwrap()))
            .collect();
        let found = find_assignment(&translate_theory(&theory, n).unwrap()).unwrap();
        assert_eq!(found.is_some(), !oracle.is_empty());
        if let Some(v) = found {
            assert!(oracle.contains(&gamma_mod(&v, &sig, n).unwrap()));
        }
    }
}

fn naive_models(theory: &subsat_core::PropTheory) -> Vec<Vec<bool>> {
    let k = theory.signature().len();
    (0..1usize << k)
        .map(|r| (0..k).map(|i| (r >> (k - 1 - i)) & 1 == 1).collect::<Vec<bool>>())
        .filter(|row| {
            let v = Valuation::new(theory.signature().clone(), row.clone()).unwrap();
            theory.formulas().all(|f| eval_prop(&v, f).unwrap())
        })
        .collect()
}

#[test]
fn enumeration_agrees_with_naive_filter() {
    let mut rng = sample::rng(13);
    for k in 1..=8 {
        let t = sample::random_prop_theory(&mut rng, k, 3, 4);
        let e = enumerate_assignments(&t, 1 << 12).unwrap();
        assert!(e.exhausted);
        let got: Vec<Vec<bool>> = e.valuations.iter().map(|v| v.values().to_vec()).collect();
        assert_eq!(got, naive_models(&t));
        assert_eq!(find_assignment(&t).unwrap().map(|v| v.values().to_vec()), got.first().cloned());
    }
}

#[test]
fn truth_table_columns_are_evaluations() {
    let mut rng = sample::rng(17);
    let vars: Vec<usize> = (0..6).collect();
    let fs: Vec<PropFormula> = (0..3).map(|_| sample::random_prop(&mut rng, 6, 4)).collect();
    let t = build_truth_table(&vars, &fs).unwrap();
    for (r, out) in t.rows().iter().enumerate() {
        let row = t.input_row(r);
        let expected: Vec<bool> = fs.iter().map(|f| f.eval_with(&row).unwrap()).collect();
        assert_eq!(out, &expected);
    }
}

#[test]
fn truth_table_composition_matches_direct_table() {
    let mut rng = sample::rng(19);
    for _ in 0..30 {
        let g1: Vec<PropFormula> = (0..3).map(|_| sample::random_prop(&mut rng, 4, 3)).collect();
        let g2: Vec<PropFormula> = (0..2).map(|_| sample::random_prop(&mut rng, 3, 3)).collect();
        let t1 = build_truth_table(&[0, 1, 2, 3], &g1).unwrap();
        let t2 = build_truth_table(&[0, 1, 2], &g2).unwrap();
        let composed = t1.compose(&t2).unwrap();
        let direct = build_truth_table(&[0, 1, 2, 3], composed.outputs()).unwrap();
        assert_eq!(composed, direct);
    }
}

fn random_root(rng: &mut SampleRng) -> BTreeSet<FoFormula> {
    let atoms = ground_atoms();
    (0..3).map(|_| sample::random_ground(rng, &atoms, 3)).collect()
}

#[test]
fn branch_composition_is_associative_with_identities() {
    let mut rng = sample::rng(23);
    let mut checked = 0;
    for _ in 0..100 {
        let t = saturate_ground(random_root(&mut rng)).unwrap();
        for leaf in t.leaves() {
            let b = t.branch(leaf);
            if b.len() < 4 {
                continue;
            }
            let (i, j, k) = (0, b.len() / 3, 2 * b.len() / 3);
            let (x, y, z) = (b.segment(i, j), b.segment(j, k), b.segment(k, b.len() - 1));
            let left = x.then(&y).unwrap().then(&z).unwrap();
            let right = x.then(&y.then(&z).unwrap()).unwrap();
            assert_eq!(left, right);
            assert_eq!(left, b);
            assert_eq!(Branch::identity(x.first().clone()).then(&x).unwrap(), x);
            assert_eq!(x.then(&Branch::identity(x.last().clone())).unwrap(), x);
            assert!(y.then(&x).is_err() || y.last() == x.first());
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn renaming_commutes_with_tableau_construction() {
    let sig = sample::relational_signature();
    let mut rng = sample::rng(29);
    for _ in 0..100 {
        let root = random_root(&mut rng);
        let sigma = sample::random_renaming(&mut rng, &sig);
        let t = saturate_ground(root.clone()).unwrap();
        let renamed_root: BTreeSet<FoFormula> = root.iter().map(|f| sigma.translate(f).unwrap()).collect();
        let script: Vec<Step> = t
            .script()
            .into_iter()
            .map(|s| Step { node: s.node, rule: s.rule, principal: sigma.translate(&s.principal).unwrap() })
            .collect();
        let replayed = Tableau::replay(renamed_root, &script).unwrap();
        assert_eq!(replayed, t.rename(&sigma).unwrap());
        assert_eq!(replayed.status(), t.status());
    }
}

#[test]
fn tableau_runs_are_deterministic() {
    let sig = sample::relational_signature();
    let mut rng = sample::rng(31);
    for _ in 0..50 {
        let root: BTreeSet<FoFormula> =
            (0..2).map(|_| sample::random_sentence_without_equality(&mut rng, &sig, 3).normalize()).collect();
        let limits = Limits { max_nodes: 400, max_instantiations_per_universal: 4 };
        let (a, sa) = saturate_bounded(root.clone(), limits).unwrap();
        let (b, sb) = saturate_bounded(root, limits).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.to_json(), b.to_json());
    }
}

#[test]
fn bounded_tableau_closed_means_unsatisfiable_at_small_sizes() {
    let sig = sample::relational_signature();
    let mut rng = sample::rng(37);
    for _ in 0..60 {
        let axioms: Vec<FoFormula> =
            (0..2).map(|_| sample::random_sentence_without_equality(&mut rng, &sig, 3).normalize()).collect();
        let root: BTreeSet<FoFormula> = axioms.iter().cloned().collect();
        let limits = Limits { max_nodes: 2000, max_instantiations_per_universal: 4 };
        let (_, status) = saturate_bounded(root, limits).unwrap();
        if status == subsat_core::tableau::TableauStatus::AllClosed {
            for size in 1..=2 {
                for m in all_structures(&sig, size, DEFAULT_ENUMERATION_LIMIT).unwrap() {
                    assert!(!axioms.iter().all(|a| eval_sentence(&m, a).unwrap()));
                }
            }
        }
    }
}

#[test]
fn apply_rule_rejects_wrong_shapes() {
    let sig = sample::relational_signature();
    let p = parse_formula("P(a)", &sig).unwrap();
    let set: BTreeSet<FoFormula> = [p.clone()].into();
    for rule in [RuleId::And, RuleId::Or, RuleId::Neg1, RuleId::Dm1, RuleId::Dm2, RuleId::False] {
        assert!(apply_rule(&set, &rule, &p).is_err(), "{rule}");
    }
}
