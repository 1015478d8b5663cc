//! Bounded translation of first-order theories into propositional ones.
//!
//! A sentence is translated in three stages for a bound `n`:
//!
//! 1. [`tr_quantifiers`] expands each `exists x . A` into the disjunction of
//!    `A[x := ci]` for `i = 1..n`, leaving a ground quantifier-free sentence
//!    over the signature extended with `c1..cn`.
//! 2. [`tr_interpret`] guesses, for every remaining non-domain term, which
//!    `ci` it denotes and records that guess with flattened defining
//!    equations `ci = f(cj, ...)`.
//! 3. [`tr_prop`] replaces every atom over `c1..cn` with its labelled
//!    propositional variable.
//!
//! Background axioms (unique names, totality and functionality of function
//! atoms) restrict valuations to those that describe a structure over
//! exactly `n` distinct elements, which [`gamma_mod`] reads back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prop::{eval_prop, AtomLabel, PropFormula, PropSignature, Valuation};
use crate::semantics::{eval_sentence, tuples, Element, FiniteStructure};
use crate::syntax::{domain_constant_index, is_reserved_name, FoFormula, FoSignature, SignatureMorphism, Term, TheoryPresentation};

/// Upper bound on the number of disjuncts a single interpretation step may emit.
pub const MAX_INTERPRETATIONS: u128 = 1 << 20;

/// Upper bound on the node count of a single interpretation step's output.
pub const MAX_TRANSLATION_NODES: u128 = 1 << 24;

/// Number of injected domain constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(usize);

impl Bound {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLimit("bound must be at least 1".into()));
        }
        Ok(Bound(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_reserved(sig: &FoSignature) -> Result<()> {
    match sig.functions().keys().chain(sig.predicates().keys()).find(|s| is_reserved_name(s)) {
        Some(name) => Err(Error::ReservedName(name.clone())),
        None => Ok(()),
    }
}

/// Propositional signature for `sig` at bound `n`: predicate atoms, then
/// equalities `ci=cj`, then function atoms `c=f(...)`, each in
/// lexicographic order.
pub fn gamma_sign(sig: &FoSignature, n: Bound) -> Result<PropSignature> {
    check_reserved(sig)?;
    let n = n.get();
    let mut vars = Vec::new();
    for (name, &arity) in sig.predicates() {
        for args in tuples(n, arity) {
            vars.push(AtomLabel::pred(name.clone(), args.iter().map(|e| e + 1).collect()));
        }
    }
    for i in 1..=n {
        for j in 1..=n {
            vars.push(AtomLabel::Eq(i, j));
        }
    }
    for (name, &arity) in sig.functions() {
        for args in tuples(n, arity) {
            for value in 1..=n {
                vars.push(AtomLabel::func(name.clone(), args.iter().map(|e| e + 1).collect(), value));
            }
        }
    }
    debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
    PropSignature::new(vars)
}

/// Quantifier expansion over `c1..cn` under the variable map `v`.
pub fn tr_quantifiers(f: &FoFormula, n: Bound, v: &BTreeMap<String, usize>) -> Result<FoFormula> {
    let mut env: Vec<(String, usize)> = v.iter().map(|(k, &i)| (k.clone(), i)).collect();
    expand(f, n.get(), &mut env)
}

fn expand(f: &FoFormula, n: usize, env: &mut Vec<(String, usize)>) -> Result<FoFormula> {
    use FoFormula as F;
    Ok(match f {
        F::Atom(p, args) => F::Atom(p.clone(), args.iter().map(|t| expand_term(t, env)).collect::<Result<_>>()?),
        F::Eq(l, r) => F::Eq(expand_term(l, env)?, expand_term(r, env)?),
        F::Not(a) => F::not(expand(a, n, env)?),
        F::Or(a, b) => F::or(expand(a, n, env)?, expand(b, n, env)?),
        F::Exists(x, a) => {
            let mut disjuncts = Vec::with_capacity(n);
            for i in 1..=n {
                env.push((x.clone(), i));
                let d = expand(a, n, env);
                env.pop();
                disjuncts.push(d?);
            }
            F::disjunction(disjuncts).expect("bound is positive")
        }
        other => return Err(Error::Unnormalized(other.to_string())),
    })
}

fn expand_term(t: &Term, env: &[(String, usize)]) -> Result<Term> {
    match t {
        Term::Var(x) => env
            .iter()
            .rev()
            .find(|(name, _)| name == x)
            .map(|&(_, i)| Term::domain(i))
            .ok_or_else(|| Error::UnboundVariable(x.clone())),
        Term::App(f, args) => Ok(Term::App(f.clone(), args.iter().map(|a| expand_term(a, env)).collect::<Result<_>>()?)),
    }
}

fn domain_index(t: &Term, n: usize) -> Option<usize> {
    match t {
        Term::App(name, args) if args.is_empty() => domain_constant_index(name).filter(|&i| i <= n),
        _ => None,
    }
}

/// Terms of `f` other than `c1..cn`, in order of first occurrence in a
/// left-to-right pre-order walk. This order is invariant under symbol
/// renaming.
pub fn interpreted_terms(f: &FoFormula, n: Bound) -> Vec<Term> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    f.for_each_term(&mut |t| {
        if domain_index(t, n.get()).is_none() && seen.insert(t.clone()) {
            out.push(t.clone());
        }
    });
    out
}

/// Term interpretation: the disjunction over every map `g` from the
/// non-domain terms of `f` to `c1..cn` of the body with terms replaced by
/// their images, conjoined with the flattened defining equations
/// `g(t) = h(g(s1),...,g(sm))`. Maps are enumerated odometer-style with the
/// first term most significant.
pub fn tr_interpret(f: &FoFormula, n: Bound) -> Result<FoFormula> {
    if !f.is_ground() || !f.is_quantifier_free() {
        return Err(Error::NotGround(f.to_string()));
    }
    let n_val = n.get();
    let terms = interpreted_terms(f, n);
    if terms.is_empty() {
        return Ok(f.clone());
    }
    let combos = (n_val as u128).checked_pow(terms.len() as u32);
    let per_disjunct = (f.size() + 4 * terms.len()) as u128;
    if combos.is_none_or(|c| c > MAX_INTERPRETATIONS || c * per_disjunct > MAX_TRANSLATION_NODES) {
        return Err(Error::TranslationTooLarge(format!(
            "{} terms at bound {n_val} need {n_val}^{} disjuncts",
            terms.len(),
            terms.len()
        )));
    }
    let position: BTreeMap<&Term, usize> = terms.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut g = vec![1usize; terms.len()];
    let mut disjuncts = Vec::new();
    loop {
        let image = |t: &Term| -> Term {
            match position.get(t) {
                Some(&i) => Term::domain(g[i]),
                None => t.clone(),
            }
        };
        let body = replace_terms(f, &image);
        let equations: Vec<FoFormula> = terms
            .iter()
            .map(|t| {
                let Term::App(h, args) = t else { unreachable!("ground terms are applications") };
                FoFormula::Eq(image(t), Term::App(h.clone(), args.iter().map(image).collect()))
            })
            .collect();
        let defs = FoFormula::conjunction(equations).expect("terms are nonempty");
        disjuncts.push(FoFormula::and(body, defs));

        let mut i = g.len();
        loop {
            if i == 0 {
                return Ok(balanced_disjunction(disjuncts));
            }
            i -= 1;
            if g[i] < n_val {
                g[i] += 1;
                break;
            }
            g[i] = 1;
        }
    }
}

/// Disjunction of `items` in order, nested as a balanced tree so the depth
/// stays logarithmic. Up to three items this is the right-nested form.
fn balanced_disjunction(mut items: Vec<FoFormula>) -> FoFormula {
    if items.len() == 1 {
        return items.pop().expect("nonempty");
    }
    let right = items.split_off(items.len() / 2);
    FoFormula::or(balanced_disjunction(items), balanced_disjunction(right))
}

fn replace_terms(f: &FoFormula, image: &impl Fn(&Term) -> Term) -> FoFormula {
    use FoFormula as F;
    match f {
        F::Atom(p, args) => F::Atom(p.clone(), args.iter().map(image).collect()),
        F::Eq(l, r) => F::Eq(image(l), image(r)),
        F::Not(a) => F::not(replace_terms(a, image)),
        F::Or(a, b) => F::or(replace_terms(a, image), replace_terms(b, image)),
        F::And(a, b) => F::and(replace_terms(a, image), replace_terms(b, image)),
        F::Implies(a, b) => F::implies(replace_terms(a, image), replace_terms(b, image)),
        F::Iff(a, b) => F::iff(replace_terms(a, image), replace_terms(b, image)),
        F::Exists(..) | F::Forall(..) => f.clone(),
    }
}

/// The label of a ground atom whose only terms are domain constants (or a
/// single flattened function application on one side of an equality).
pub fn atom_label(atom: &FoFormula, n: Bound) -> Result<AtomLabel> {
    let n = n.get();
    let missing = || Error::MissingVariable(atom.to_string());
    let flat_args = |args: &[Term]| args.iter().map(|t| domain_index(t, n)).collect::<Option<Vec<_>>>();
    match atom {
        FoFormula::Atom(p, args) => Ok(AtomLabel::pred(p.clone(), flat_args(args).ok_or_else(missing)?)),
        FoFormula::Eq(l, r) => match (domain_index(l, n), domain_index(r, n)) {
            (Some(i), Some(j)) => Ok(AtomLabel::Eq(i, j)),
            (Some(i), None) | (None, Some(i)) => {
                let other = if domain_index(l, n).is_some() { r } else { l };
                match other {
                    Term::App(func, args) => Ok(AtomLabel::func(func.clone(), flat_args(args).ok_or_else(missing)?, i)),
                    Term::Var(_) => Err(missing()),
                }
            }
            (None, None) => Err(missing()),
        },
        _ => Err(missing()),
    }
}

/// Replaces atoms by their labelled variables; `~`, `|` and `&` map
/// homomorphically.
pub fn tr_prop(f: &FoFormula, sig: &PropSignature, n: Bound) -> Result<PropFormula> {
    use FoFormula as F;
    Ok(match f {
        F::Atom(..) | F::Eq(..) => {
            let label = atom_label(f, n)?;
            PropFormula::var(sig.index_of(&label).ok_or_else(|| Error::MissingVariable(label.to_string()))?)
        }
        F::Not(a) => PropFormula::not(tr_prop(a, sig, n)?),
        F::Or(a, b) => PropFormula::or(tr_prop(a, sig, n)?, tr_prop(b, sig, n)?),
        F::And(a, b) => PropFormula::and(tr_prop(a, sig, n)?, tr_prop(b, sig, n)?),
        other => return Err(Error::NotGround(other.to_string())),
    })
}

/// Full sentence translation against a precomputed propositional signature.
pub fn gamma_sen_with(f: &FoFormula, sig: &FoSignature, prop_sig: &PropSignature, n: Bound) -> Result<PropFormula> {
    sig.check_formula(f)?;
    if let Some(x) = f.free_vars().into_iter().next() {
        return Err(Error::FreeVariable(x));
    }
    let ground = tr_quantifiers(f, n, &BTreeMap::new())?;
    let interpreted = tr_interpret(&ground, n)?;
    tr_prop(&interpreted, prop_sig, n)
}

/// `tr_prop(tr_interpret(tr_quantifiers(f)))` for a normalized sentence.
pub fn gamma_sen(f: &FoFormula, sig: &FoSignature, n: Bound) -> Result<PropFormula> {
    gamma_sen_with(f, sig, &gamma_sign(sig, n)?, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BackgroundKind {
    UniqueNames,
    Totality,
    Functionality,
}

impl BackgroundKind {
    pub fn tag(self) -> &'static str {
        match self {
            BackgroundKind::UniqueNames => "unique-names",
            BackgroundKind::Totality => "totality",
            BackgroundKind::Functionality => "functionality",
        }
    }
}

impl fmt::Display for BackgroundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackgroundAxiom {
    pub kind: BackgroundKind,
    pub formula: PropFormula,
}

fn var_of(sig: &PropSignature, label: &AtomLabel) -> PropFormula {
    PropFormula::var(sig.index_of(label).expect("label comes from gamma_sign"))
}

/// Background axioms against a precomputed `gamma_sign(sig, n)`.
pub fn background_axioms_with(sig: &FoSignature, prop_sig: &PropSignature, n: Bound) -> Vec<BackgroundAxiom> {
    let n = n.get();
    let mut out = Vec::new();
    let mut push = |kind, formula| out.push(BackgroundAxiom { kind, formula });
    for i in 1..=n {
        push(BackgroundKind::UniqueNames, var_of(prop_sig, &AtomLabel::Eq(i, i)));
    }
    for i in 1..=n {
        for j in (1..=n).filter(|&j| j != i) {
            push(BackgroundKind::UniqueNames, PropFormula::not(var_of(prop_sig, &AtomLabel::Eq(i, j))));
        }
    }
    for (name, &arity) in sig.functions() {
        for args in tuples(n, arity) {
            let args: Vec<usize> = args.iter().map(|e| e + 1).collect();
            let atoms: Vec<PropFormula> = (1..=n)
                .map(|c| var_of(prop_sig, &AtomLabel::func(name.clone(), args.clone(), c)))
                .collect();
            push(BackgroundKind::Totality, PropFormula::or_all(atoms.clone()).expect("bound is positive"));
            for c in 0..n {
                for d in c + 1..n {
                    push(BackgroundKind::Functionality, PropFormula::not(PropFormula::and(atoms[c].clone(), atoms[d].clone())));
                }
            }
        }
    }
    out
}

/// Unique-names, totality and functionality constraints, in that order.
pub fn background_axioms(sig: &FoSignature, n: Bound) -> Result<Vec<BackgroundAxiom>> {
    Ok(background_axioms_with(sig, &gamma_sign(sig, n)?, n))
}

/// A translated theory: the image of every axiom plus background axioms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropTheory {
    signature: Arc<PropSignature>,
    translated: Vec<PropFormula>,
    background: Vec<BackgroundAxiom>,
}

impl PropTheory {
    /// Builds a theory after checking that every formula is in scope.
    pub fn new(signature: Arc<PropSignature>, translated: Vec<PropFormula>, background: Vec<BackgroundAxiom>) -> Result<Self> {
        for f in translated.iter().chain(background.iter().map(|b| &b.formula)) {
            if f.max_var() >= signature.len() {
                return Err(Error::VariableOutOfScope(format!("#{}", f.max_var())));
            }
        }
        Ok(Self { signature, translated, background })
    }

    pub fn signature(&self) -> &Arc<PropSignature> {
        &self.signature
    }

    pub fn translated(&self) -> &[PropFormula] {
        &self.translated
    }

    pub fn background(&self) -> &[BackgroundAxiom] {
        &self.background
    }

    /// Translated axioms followed by background axioms.
    pub fn formulas(&self) -> impl Iterator<Item = &PropFormula> {
        self.translated.iter().chain(self.background.iter().map(|b| &b.formula))
    }

    /// Text dump: one tagged formula per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# variables: {}\n", self.signature.len()));
        for (i, label) in self.signature.vars().iter().enumerate() {
            out.push_str(&format!("# var {} [[{label}]]\n", i + 1));
        }
        for (i, f) in self.translated.iter().enumerate() {
            out.push_str(&format!("axiom {}: {}\n", i + 1, f.display(&self.signature)));
        }
        for b in &self.background {
            out.push_str(&format!("{}: {}\n", b.kind, b.formula.display(&self.signature)));
        }
        out
    }
}

/// Translates every axiom (normalized first) and adds the background axioms.
pub fn translate_theory(theory: &TheoryPresentation, n: Bound) -> Result<PropTheory> {
    let sig = theory.signature();
    let prop_sig = gamma_sign(sig, n)?;
    let translated = theory
        .axioms()
        .iter()
        .map(|a| gamma_sen_with(&a.normalize(), sig, &prop_sig, n))
        .collect::<Result<Vec<_>>>()?;
    let background = background_axioms_with(sig, &prop_sig, n);
    PropTheory::new(Arc::new(prop_sig), translated, background)
}

fn check_background(v: &Valuation, sig: &FoSignature, n: usize) -> Result<()> {
    let get = |label: &AtomLabel| {
        v.get(label).ok_or_else(|| Error::MissingVariable(label.to_string()))
    };
    let violation = |kind: BackgroundKind, label: &AtomLabel| Error::BackgroundViolation {
        kind: kind.tag().to_string(),
        label: label.to_string(),
    };
    for i in 1..=n {
        for j in 1..=n {
            let label = AtomLabel::Eq(i, j);
            if get(&label)? != (i == j) {
                return Err(violation(BackgroundKind::UniqueNames, &label));
            }
        }
    }
    for (name, &arity) in sig.functions() {
        for args in tuples(n, arity) {
            let args: Vec<usize> = args.iter().map(|e| e + 1).collect();
            let mut found = None;
            for c in 1..=n {
                let label = AtomLabel::func(name.clone(), args.clone(), c);
                if get(&label)? {
                    if found.is_some() {
                        return Err(violation(BackgroundKind::Functionality, &label));
                    }
                    found = Some(c);
                }
            }
            if found.is_none() {
                return Err(violation(BackgroundKind::Totality, &AtomLabel::func(name.clone(), args, 1)));
            }
        }
    }
    Ok(())
}

/// Reads a structure over `{c1..cn}` off a valuation that satisfies the
/// background axioms.
pub fn gamma_mod(v: &Valuation, sig: &FoSignature, n: Bound) -> Result<FiniteStructure> {
    let expected = gamma_sign(sig, n)?;
    if **v.signature() != expected {
        return Err(Error::Structure("valuation is not over the translated signature".into()));
    }
    let n = n.get();
    check_background(v, sig, n)?;
    let mut functions = BTreeMap::new();
    for (name, &arity) in sig.functions() {
        let mut table = BTreeMap::new();
        for args in tuples(n, arity) {
            let labels: Vec<usize> = args.iter().map(|e| e + 1).collect();
            let value = (1..=n)
                .find(|&c| v.get(&AtomLabel::func(name.clone(), labels.clone(), c)) == Some(true))
                .expect("totality was checked");
            table.insert(args, value - 1);
        }
        functions.insert(name.clone(), table);
    }
    let mut relations = BTreeMap::new();
    for (name, &arity) in sig.predicates() {
        let set = tuples(n, arity)
            .filter(|args| v.get(&AtomLabel::pred(name.clone(), args.iter().map(|e| e + 1).collect())) == Some(true))
            .collect();
        relations.insert(name.clone(), set);
    }
    FiniteStructure::from_tables(sig, n, functions, relations)
}

/// The valuation describing `m`: the inverse direction of [`gamma_mod`].
pub fn valuation_of(m: &FiniteStructure, sig: &FoSignature) -> Result<Valuation> {
    let n = Bound::new(m.size())?;
    if !m.matches_signature(sig) {
        return Err(Error::Structure("structure does not interpret exactly the signature".into()));
    }
    let prop_sig = Arc::new(gamma_sign(sig, n)?);
    let values = prop_sig
        .vars()
        .iter()
        .map(|label| {
            let el = |args: &[usize]| args.iter().map(|a| a - 1).collect::<Vec<Element>>();
            match label {
                AtomLabel::Pred { name, args } => m.relation(name).expect("signature matches").contains(m.size(), &el(args)),
                AtomLabel::Eq(i, j) => i == j,
                AtomLabel::Func { func, args, value } => {
                    m.function(func).expect("signature matches").apply(m.size(), &el(args)) + 1 == *value
                }
            }
        })
        .collect();
    Valuation::new(prop_sig, values)
}

/// Whether `v` satisfies the translation of `alpha` exactly when the
/// structure read off `v` satisfies `alpha`.
pub fn check_satisfaction_condition(alpha: &FoFormula, sig: &FoSignature, n: Bound, v: &Valuation) -> Result<bool> {
    SatisfactionCheck::with_signature(alpha, sig, v.signature(), n)?.holds(v)
}

/// [`check_satisfaction_condition`] with the translation done once, for
/// checking one sentence against many valuations.
#[derive(Clone, Debug)]
pub struct SatisfactionCheck {
    alpha: FoFormula,
    sig: FoSignature,
    n: Bound,
    translated: PropFormula,
}

impl SatisfactionCheck {
    pub fn new(alpha: &FoFormula, sig: &FoSignature, n: Bound) -> Result<Self> {
        Self::with_signature(alpha, sig, &gamma_sign(sig, n)?, n)
    }

    fn with_signature(alpha: &FoFormula, sig: &FoSignature, prop_sig: &PropSignature, n: Bound) -> Result<Self> {
        let translated = gamma_sen_with(&alpha.normalize(), sig, prop_sig, n)?;
        Ok(Self { alpha: alpha.clone(), sig: sig.clone(), n, translated })
    }

    pub fn translated(&self) -> &PropFormula {
        &self.translated
    }

    pub fn holds(&self, v: &Valuation) -> Result<bool> {
        let m = gamma_mod(v, &self.sig, self.n)?;
        Ok(eval_prop(v, &self.translated)? == eval_sentence(&m, &self.alpha)?)
    }
}

/// `gamma_sign(sigma)`: maps each variable of the source translation to the
/// variable of the renamed atom in the target translation.
pub fn gamma_sign_morphism(sigma: &SignatureMorphism, n: Bound) -> Result<Vec<usize>> {
    let source = gamma_sign(sigma.source(), n)?;
    let target = gamma_sign(sigma.target(), n)?;
    source
        .vars()
        .iter()
        .map(|label| {
            let renamed = label
                .rename(|f| sigma.map_function(f).map(str::to_string), |p| sigma.map_predicate(p).map(str::to_string))
                .ok_or_else(|| Error::Morphism(format!("no image for {label}")))?;
            target.index_of(&renamed).ok_or_else(|| Error::MissingVariable(renamed.to_string()))
        })
        .collect()
}
