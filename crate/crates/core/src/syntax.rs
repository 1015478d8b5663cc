//! First-order syntax: signatures, terms, formulas, theory presentations and
//! signature morphisms.
//!
//! Formulas keep the surface connectives produced by the parser (`&`, `->`,
//! `<->`, `forall`). [`FoFormula::normalize`] rewrites them into the core
//! basis `{atom, =, ~, |, exists}` used by the translation pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Identifiers follow `[A-Za-z_][A-Za-z0-9_]*`; quantifier keywords are excluded.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "forall" && name != "exists"
}

/// Returns `Some(k)` when `name` is the domain constant `ck` (k >= 1).
pub fn domain_constant_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('c')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Names of the form `c1`, `c2`, ... are injected by the bounded translation
/// and cannot be declared by users.
pub fn is_reserved_name(name: &str) -> bool {
    domain_constant_index(name).is_some()
}

pub fn domain_constant_name(index: usize) -> String {
    format!("c{index}")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FoSignature {
    functions: BTreeMap<String, usize>,
    predicates: BTreeMap<String, usize>,
}

impl FoSignature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols<F, P, S1, S2>(functions: F, predicates: P) -> Result<Self>
    where
        F: IntoIterator<Item = (S1, usize)>,
        P: IntoIterator<Item = (S2, usize)>,
        S1: Into<String>,
        S2: Into<String>,
    {
        let mut sig = Self::new();
        for (name, arity) in functions {
            sig.add_function(name, arity)?;
        }
        for (name, arity) in predicates {
            sig.add_predicate(name, arity)?;
        }
        Ok(sig)
    }

    pub fn add_function(&mut self, name: impl Into<String>, arity: usize) -> Result<()> {
        let name = name.into();
        self.check_new_name(&name)?;
        if is_reserved_name(&name) {
            return Err(Error::ReservedName(name));
        }
        self.functions.insert(name, arity);
        Ok(())
    }

    pub fn add_predicate(&mut self, name: impl Into<String>, arity: usize) -> Result<()> {
        let name = name.into();
        self.check_new_name(&name)?;
        if arity == 0 {
            return Err(Error::ArityMismatch { symbol: name, expected: 1, found: 0 });
        }
        self.predicates.insert(name, arity);
        Ok(())
    }

    fn check_new_name(&self, name: &str) -> Result<()> {
        if !is_identifier(name) {
            return Err(Error::InvalidIdentifier(name.to_string()));
        }
        if self.functions.contains_key(name) || self.predicates.contains_key(name) {
            return Err(Error::DuplicateSymbol(name.to_string()));
        }
        Ok(())
    }

    /// Adds `c1..cn` as constants, bypassing the reserved-name check.
    pub fn with_domain_constants(&self, n: usize) -> Result<Self> {
        let mut sig = self.clone();
        for i in 1..=n {
            let name = domain_constant_name(i);
            sig.check_new_name(&name)?;
            sig.functions.insert(name, 0);
        }
        Ok(sig)
    }

    /// Adds a constant without the reserved-name check. Used for fresh
    /// constants introduced by tableau expansion.
    pub(crate) fn insert_constant_unchecked(&mut self, name: &str) {
        self.functions.entry(name.to_string()).or_insert(0);
    }

    pub fn functions(&self) -> &BTreeMap<String, usize> {
        &self.functions
    }

    pub fn predicates(&self) -> &BTreeMap<String, usize> {
        &self.predicates
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }

    pub fn predicate_arity(&self, name: &str) -> Option<usize> {
        self.predicates.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name) || self.predicates.contains_key(name)
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty() && self.predicates.is_empty()
    }

    /// Union of two signatures; fails if a name is used with two meanings.
    pub fn merge(&self, other: &FoSignature) -> Result<FoSignature> {
        let mut out = self.clone();
        for (name, &arity) in &other.functions {
            match (out.functions.get(name), out.predicates.contains_key(name)) {
                (Some(&a), _) if a == arity => {}
                (None, false) => {
                    out.functions.insert(name.clone(), arity);
                }
                _ => return Err(Error::DuplicateSymbol(name.clone())),
            }
        }
        for (name, &arity) in &other.predicates {
            match (out.predicates.get(name), out.functions.contains_key(name)) {
                (Some(&a), _) if a == arity => {}
                (None, false) => {
                    out.predicates.insert(name.clone(), arity);
                }
                _ => return Err(Error::DuplicateSymbol(name.clone())),
            }
        }
        Ok(out)
    }

    /// Checks that every symbol of `formula` is declared with a matching arity.
    pub fn check_formula(&self, formula: &FoFormula) -> Result<()> {
        let mut result = Ok(());
        formula.visit(&mut |node| {
            if result.is_err() {
                return;
            }
            result = match node {
                FoFormula::Atom(p, args) => match self.predicate_arity(p) {
                    Some(k) if k == args.len() => args.iter().try_for_each(|t| self.check_term(t)),
                    Some(k) => Err(Error::ArityMismatch { symbol: p.clone(), expected: k, found: args.len() }),
                    None => Err(Error::UnknownSymbol(p.clone())),
                },
                FoFormula::Eq(l, r) => self.check_term(l).and_then(|_| self.check_term(r)),
                _ => Ok(()),
            };
        });
        result
    }

    pub fn check_term(&self, term: &Term) -> Result<()> {
        match term {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => match self.function_arity(f) {
                Some(k) if k == args.len() => args.iter().try_for_each(|t| self.check_term(t)),
                Some(k) => Err(Error::ArityMismatch { symbol: f.clone(), expected: k, found: args.len() }),
                None => Err(Error::UnknownSymbol(f.clone())),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    /// Function application; constants are zero-argument applications.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    pub fn domain(index: usize) -> Term {
        Term::constant(domain_constant_name(index))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn substitute(&self, var: &str, by: &Term) -> Term {
        match self {
            Term::Var(x) if x == var => by.clone(),
            Term::Var(_) => self.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|t| t.substitute(var, by)).collect()),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    /// Pre-order walk over this term and its subterms.
    pub fn for_each_subterm<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        if let Term::App(_, args) = self {
            args.iter().for_each(|t| t.for_each_subterm(f));
        }
    }

    pub fn rename_symbols(&self, map: &impl Fn(&str) -> Option<String>) -> Result<Term> {
        match self {
            Term::Var(_) => Ok(self.clone()),
            Term::App(f, args) => {
                let g = map(f).ok_or_else(|| Error::UnknownSymbol(f.clone()))?;
                let args = args.iter().map(|t| t.rename_symbols(map)).collect::<Result<_>>()?;
                Ok(Term::App(g, args))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => f.write_str(x),
            Term::App(name, args) if args.is_empty() => f.write_str(name),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FoFormula {
    Atom(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<FoFormula>),
    Or(Box<FoFormula>, Box<FoFormula>),
    Exists(String, Box<FoFormula>),
    // Surface connectives, removed by `normalize`.
    And(Box<FoFormula>, Box<FoFormula>),
    Implies(Box<FoFormula>, Box<FoFormula>),
    Iff(Box<FoFormula>, Box<FoFormula>),
    Forall(String, Box<FoFormula>),
}

impl FoFormula {
    pub fn atom(pred: impl Into<String>, args: Vec<Term>) -> Self {
        FoFormula::Atom(pred.into(), args)
    }

    pub fn eq(l: Term, r: Term) -> Self {
        FoFormula::Eq(l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: FoFormula) -> Self {
        FoFormula::Not(Box::new(f))
    }

    pub fn or(l: FoFormula, r: FoFormula) -> Self {
        FoFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn and(l: FoFormula, r: FoFormula) -> Self {
        FoFormula::And(Box::new(l), Box::new(r))
    }

    pub fn implies(l: FoFormula, r: FoFormula) -> Self {
        FoFormula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: FoFormula, r: FoFormula) -> Self {
        FoFormula::Iff(Box::new(l), Box::new(r))
    }

    pub fn exists(var: impl Into<String>, body: FoFormula) -> Self {
        FoFormula::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<String>, body: FoFormula) -> Self {
        FoFormula::Forall(var.into(), Box::new(body))
    }

    /// Right-nested disjunction; `None` for an empty list.
    pub fn disjunction(items: Vec<FoFormula>) -> Option<FoFormula> {
        items.into_iter().rev().reduce(|acc, f| FoFormula::or(f, acc))
    }

    /// Right-nested conjunction; `None` for an empty list.
    pub fn conjunction(items: Vec<FoFormula>) -> Option<FoFormula> {
        items.into_iter().rev().reduce(|acc, f| FoFormula::and(f, acc))
    }

    /// Pre-order walk over all subformulas.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a FoFormula)) {
        f(self);
        match self {
            FoFormula::Atom(..) | FoFormula::Eq(..) => {}
            FoFormula::Not(a) | FoFormula::Exists(_, a) | FoFormula::Forall(_, a) => a.visit(f),
            FoFormula::Or(a, b) | FoFormula::And(a, b) | FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Pre-order walk over every term occurrence (including subterms), left to right.
    pub fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        self.visit(&mut |node| match node {
            FoFormula::Atom(_, args) => args.iter().for_each(|t| t.for_each_subterm(f)),
            FoFormula::Eq(l, r) => {
                l.for_each_subterm(f);
                r.for_each_subterm(f);
            }
            _ => {}
        });
    }

    pub fn is_core(&self) -> bool {
        let mut core = true;
        self.visit(&mut |node| {
            if matches!(
                node,
                FoFormula::And(..) | FoFormula::Implies(..) | FoFormula::Iff(..) | FoFormula::Forall(..)
            ) {
                core = false;
            }
        });
        core
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let add_term = |t: &Term, bound: &Vec<String>, out: &mut BTreeSet<String>| {
            let mut vars = BTreeSet::new();
            t.collect_vars(&mut vars);
            out.extend(vars.into_iter().filter(|v| !bound.contains(v)));
        };
        match self {
            FoFormula::Atom(_, args) => args.iter().for_each(|t| add_term(t, bound, out)),
            FoFormula::Eq(l, r) => {
                add_term(l, bound, out);
                add_term(r, bound, out);
            }
            FoFormula::Not(a) => a.collect_free(bound, out),
            FoFormula::Or(a, b) | FoFormula::And(a, b) | FoFormula::Implies(a, b) | FoFormula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            FoFormula::Exists(x, a) | FoFormula::Forall(x, a) => {
                bound.push(x.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// No variables anywhere, bound or free.
    pub fn is_ground(&self) -> bool {
        let mut ground = true;
        self.visit(&mut |node| match node {
            FoFormula::Atom(_, args) => ground &= args.iter().all(Term::is_ground),
            FoFormula::Eq(l, r) => ground &= l.is_ground() && r.is_ground(),
            FoFormula::Exists(..) | FoFormula::Forall(..) => ground = false,
            _ => {}
        });
        ground
    }

    pub fn is_quantifier_free(&self) -> bool {
        let mut qf = true;
        self.visit(&mut |node| {
            if matches!(node, FoFormula::Exists(..) | FoFormula::Forall(..)) {
                qf = false;
            }
        });
        qf
    }

    /// Distinct atomic subformulas whose terms are all ground.
    pub fn ground_atoms(&self) -> BTreeSet<FoFormula> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| match node {
            FoFormula::Atom(_, args) if args.iter().all(Term::is_ground) => {
                out.insert(node.clone());
            }
            FoFormula::Eq(l, r) if l.is_ground() && r.is_ground() => {
                out.insert(node.clone());
            }
            _ => {}
        });
        out
    }

    /// Rewrites into the core basis: `A & B` to `~(~A | ~B)`, `A -> B` to
    /// `~A | B`, `A <-> B` to the normalized conjunction of both implications
    /// and `forall x. A` to `~exists x. ~A`. Nothing else is rewritten.
    pub fn normalize(&self) -> FoFormula {
        use FoFormula as F;
        match self {
            F::Atom(..) | F::Eq(..) => self.clone(),
            F::Not(a) => F::not(a.normalize()),
            F::Or(a, b) => F::or(a.normalize(), b.normalize()),
            F::Exists(x, a) => F::exists(x.clone(), a.normalize()),
            F::And(a, b) => core_and(a.normalize(), b.normalize()),
            F::Implies(a, b) => F::or(F::not(a.normalize()), b.normalize()),
            F::Iff(a, b) => {
                let (a, b) = (a.normalize(), b.normalize());
                let forward = F::or(F::not(a.clone()), b.clone());
                let backward = F::or(F::not(b), a);
                core_and(forward, backward)
            }
            F::Forall(x, a) => F::not(F::exists(x.clone(), F::not(a.normalize()))),
        }
    }

    /// Capture-avoiding only for ground replacements, which is all the
    /// tableau and the bounded translation need.
    pub fn substitute(&self, var: &str, by: &Term) -> FoFormula {
        use FoFormula as F;
        match self {
            F::Atom(p, args) => F::Atom(p.clone(), args.iter().map(|t| t.substitute(var, by)).collect()),
            F::Eq(l, r) => F::Eq(l.substitute(var, by), r.substitute(var, by)),
            F::Not(a) => F::not(a.substitute(var, by)),
            F::Or(a, b) => F::or(a.substitute(var, by), b.substitute(var, by)),
            F::And(a, b) => F::and(a.substitute(var, by), b.substitute(var, by)),
            F::Implies(a, b) => F::implies(a.substitute(var, by), b.substitute(var, by)),
            F::Iff(a, b) => F::iff(a.substitute(var, by), b.substitute(var, by)),
            F::Exists(x, _) | F::Forall(x, _) if x == var => self.clone(),
            F::Exists(x, a) => F::exists(x.clone(), a.substitute(var, by)),
            F::Forall(x, a) => F::forall(x.clone(), a.substitute(var, by)),
        }
    }

    /// Homomorphic renaming of function and predicate symbols.
    pub fn rename_symbols(
        &self,
        functions: &impl Fn(&str) -> Option<String>,
        predicates: &impl Fn(&str) -> Option<String>,
    ) -> Result<FoFormula> {
        use FoFormula as F;
        let rec = |a: &FoFormula| a.rename_symbols(functions, predicates);
        Ok(match self {
            F::Atom(p, args) => {
                let q = predicates(p).ok_or_else(|| Error::UnknownSymbol(p.clone()))?;
                F::Atom(q, args.iter().map(|t| t.rename_symbols(functions)).collect::<Result<_>>()?)
            }
            F::Eq(l, r) => F::Eq(l.rename_symbols(functions)?, r.rename_symbols(functions)?),
            F::Not(a) => F::not(rec(a)?),
            F::Or(a, b) => F::or(rec(a)?, rec(b)?),
            F::And(a, b) => F::and(rec(a)?, rec(b)?),
            F::Implies(a, b) => F::implies(rec(a)?, rec(b)?),
            F::Iff(a, b) => F::iff(rec(a)?, rec(b)?),
            F::Exists(x, a) => F::exists(x.clone(), rec(a)?),
            F::Forall(x, a) => F::forall(x.clone(), rec(a)?),
        })
    }

    /// Same constructor tree, ignoring symbol and variable names.
    pub fn same_shape(&self, other: &FoFormula) -> bool {
        use FoFormula as F;
        fn term_shape(a: &Term, b: &Term) -> bool {
            match (a, b) {
                (Term::Var(_), Term::Var(_)) => true,
                (Term::App(_, xs), Term::App(_, ys)) => {
                    xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_shape(x, y))
                }
                _ => false,
            }
        }
        match (self, other) {
            (F::Atom(_, xs), F::Atom(_, ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_shape(x, y)),
            (F::Eq(a, b), F::Eq(c, d)) => term_shape(a, c) && term_shape(b, d),
            (F::Not(a), F::Not(b)) => a.same_shape(b),
            (F::Exists(_, a), F::Exists(_, b)) | (F::Forall(_, a), F::Forall(_, b)) => a.same_shape(b),
            (F::Or(a, b), F::Or(c, d))
            | (F::And(a, b), F::And(c, d))
            | (F::Implies(a, b), F::Implies(c, d))
            | (F::Iff(a, b), F::Iff(c, d)) => a.same_shape(c) && b.same_shape(d),
            _ => false,
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            FoFormula::Or(..) | FoFormula::And(..) | FoFormula::Implies(..) | FoFormula::Iff(..)
        )
    }

    fn fmt_nested(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_binary() || matches!(self, FoFormula::Exists(..) | FoFormula::Forall(..)) {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn core_and(a: FoFormula, b: FoFormula) -> FoFormula {
    FoFormula::not(FoFormula::or(FoFormula::not(a), FoFormula::not(b)))
}

/// Prints in the theory-file syntax. Binary subformulas and quantifiers in
/// operand position are parenthesized, so the output parses back to the
/// same tree.
impl fmt::Display for FoFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FoFormula as F;
        let binary = |f: &mut fmt::Formatter<'_>, a: &F, op: &str, b: &F| {
            a.fmt_nested(f)?;
            write!(f, " {op} ")?;
            b.fmt_nested(f)
        };
        match self {
            F::Atom(p, args) => write!(f, "{}", Term::App(p.clone(), args.clone())),
            F::Eq(l, r) => write!(f, "{l} = {r}"),
            F::Not(a) => {
                f.write_str("~")?;
                match a.as_ref() {
                    F::Eq(..) => write!(f, "({a})"),
                    _ => a.fmt_nested(f),
                }
            }
            F::Or(a, b) => binary(f, a, "|", b),
            F::And(a, b) => binary(f, a, "&", b),
            F::Implies(a, b) => binary(f, a, "->", b),
            F::Iff(a, b) => binary(f, a, "<->", b),
            F::Exists(x, a) => write!(f, "exists {x} . {a}"),
            F::Forall(x, a) => write!(f, "forall {x} . {a}"),
        }
    }
}

/// A signature plus an ordered list of axioms and an optional goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoryPresentation {
    signature: FoSignature,
    axioms: Vec<FoFormula>,
    goal: Option<FoFormula>,
}

impl TheoryPresentation {
    pub fn new(signature: FoSignature, axioms: Vec<FoFormula>, goal: Option<FoFormula>) -> Result<Self> {
        for f in axioms.iter().chain(goal.iter()) {
            signature.check_formula(f)?;
            if let Some(x) = f.free_vars().into_iter().next() {
                return Err(Error::FreeVariable(x));
            }
        }
        Ok(Self { signature, axioms, goal })
    }

    pub fn signature(&self) -> &FoSignature {
        &self.signature
    }

    pub fn axioms(&self) -> &[FoFormula] {
        &self.axioms
    }

    pub fn goal(&self) -> Option<&FoFormula> {
        self.goal.as_ref()
    }

    /// The same signature and axioms without a goal.
    pub fn without_goal(&self) -> TheoryPresentation {
        Self { goal: None, ..self.clone() }
    }

    /// Axioms extended with the normalized negation of the goal.
    pub fn refutation_theory(&self) -> Option<TheoryPresentation> {
        let goal = self.goal.as_ref()?;
        let mut axioms = self.axioms.clone();
        axioms.push(FoFormula::not(goal.clone()).normalize());
        Some(Self { signature: self.signature.clone(), axioms, goal: None })
    }
}

/// A symbol map between two signatures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignatureMorphism {
    source: FoSignature,
    target: FoSignature,
    functions: BTreeMap<String, String>,
    predicates: BTreeMap<String, String>,
}

impl SignatureMorphism {
    pub fn new(
        source: FoSignature,
        target: FoSignature,
        functions: BTreeMap<String, String>,
        predicates: BTreeMap<String, String>,
    ) -> Result<Self> {
        for (name, &arity) in source.functions() {
            let image = functions
                .get(name)
                .ok_or_else(|| Error::Morphism(format!("function `{name}` is not mapped")))?;
            match target.function_arity(image) {
                Some(a) if a == arity => {}
                _ => return Err(Error::Morphism(format!("`{name}` maps to `{image}`, which is not a function of arity {arity}"))),
            }
        }
        for (name, &arity) in source.predicates() {
            let image = predicates
                .get(name)
                .ok_or_else(|| Error::Morphism(format!("predicate `{name}` is not mapped")))?;
            match target.predicate_arity(image) {
                Some(a) if a == arity => {}
                _ => return Err(Error::Morphism(format!("`{name}` maps to `{image}`, which is not a predicate of arity {arity}"))),
            }
        }
        if let Some(extra) = functions
            .keys()
            .find(|k| source.function_arity(k).is_none())
            .or_else(|| predicates.keys().find(|k| source.predicate_arity(k).is_none()))
        {
            return Err(Error::Morphism(format!("`{extra}` is not in the source signature")));
        }
        Ok(Self { source, target, functions, predicates })
    }

    pub fn identity(sig: &FoSignature) -> Self {
        let functions = sig.functions().keys().map(|k| (k.clone(), k.clone())).collect();
        let predicates = sig.predicates().keys().map(|k| (k.clone(), k.clone())).collect();
        Self { source: sig.clone(), target: sig.clone(), functions, predicates }
    }

    pub fn source(&self) -> &FoSignature {
        &self.source
    }

    pub fn target(&self) -> &FoSignature {
        &self.target
    }

    pub fn map_function(&self, name: &str) -> Option<&str> {
        self.functions.get(name).map(String::as_str)
    }

    pub fn map_predicate(&self, name: &str) -> Option<&str> {
        self.predicates.get(name).map(String::as_str)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SignatureMorphism) -> Result<SignatureMorphism> {
        if self.target != next.source {
            return Err(Error::Morphism("target and source do not match".into()));
        }
        let functions = self.functions.iter().map(|(k, v)| (k.clone(), next.functions[v].clone())).collect();
        let predicates = self.predicates.iter().map(|(k, v)| (k.clone(), next.predicates[v].clone())).collect();
        SignatureMorphism::new(self.source.clone(), next.target.clone(), functions, predicates)
    }

    pub fn is_bijective(&self) -> bool {
        let fs: BTreeSet<_> = self.functions.values().collect();
        let ps: BTreeSet<_> = self.predicates.values().collect();
        fs.len() == self.target.functions().len()
            && ps.len() == self.target.predicates().len()
            && self.source.functions().len() == self.target.functions().len()
            && self.source.predicates().len() == self.target.predicates().len()
    }

    pub fn inverse(&self) -> Result<SignatureMorphism> {
        if !self.is_bijective() {
            return Err(Error::Morphism("morphism is not bijective".into()));
        }
        let functions = self.functions.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        let predicates = self.predicates.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        SignatureMorphism::new(self.target.clone(), self.source.clone(), functions, predicates)
    }

    pub fn translate_term(&self, term: &Term) -> Result<Term> {
        term.rename_symbols(&|f| self.functions.get(f).cloned())
    }

    /// Homomorphic image of `formula` along this morphism.
    pub fn translate(&self, formula: &FoFormula) -> Result<FoFormula> {
        formula.rename_symbols(&|f| self.functions.get(f).cloned(), &|p| self.predicates.get(p).cloned())
    }
}

/// Free-function form of [`SignatureMorphism::translate`].
pub fn translate_along(sigma: &SignatureMorphism, formula: &FoFormula) -> Result<FoFormula> {
    sigma.translate(formula)
}
