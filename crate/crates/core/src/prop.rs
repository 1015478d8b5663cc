//! Propositional layer: atom-labelled variables, formulas and valuations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::syntax::domain_constant_name;

/// The ground atom a propositional variable stands for. Domain constants are
/// referred to by their 1-based index.
///
/// Variant order is the canonical variable order: predicate atoms, then
/// equalities, then function atoms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLabel {
    /// `P(ci1,...,cik)`
    Pred { name: String, args: Vec<usize> },
    /// `ci=cj`
    Eq(usize, usize),
    /// `c=f(ci1,...,cik)`, or `c=a` for a constant `a`
    Func { func: String, args: Vec<usize>, value: usize },
}

impl AtomLabel {
    pub fn pred(name: impl Into<String>, args: Vec<usize>) -> Self {
        AtomLabel::Pred { name: name.into(), args }
    }

    pub fn func(func: impl Into<String>, args: Vec<usize>, value: usize) -> Self {
        AtomLabel::Func { func: func.into(), args, value }
    }

    /// Applies a symbol renaming; domain constants are unchanged.
    pub fn rename(&self, functions: impl Fn(&str) -> Option<String>, predicates: impl Fn(&str) -> Option<String>) -> Option<AtomLabel> {
        Some(match self {
            AtomLabel::Pred { name, args } => AtomLabel::Pred { name: predicates(name)?, args: args.clone() },
            AtomLabel::Eq(i, j) => AtomLabel::Eq(*i, *j),
            AtomLabel::Func { func, args, value } => AtomLabel::Func { func: functions(func)?, args: args.clone(), value: *value },
        })
    }
}

fn constants(args: &[usize]) -> String {
    args.iter().map(|&i| domain_constant_name(i)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomLabel::Pred { name, args } => write!(f, "{name}({})", constants(args)),
            AtomLabel::Eq(i, j) => write!(f, "c{i}=c{j}"),
            AtomLabel::Func { func, args, value } if args.is_empty() => write!(f, "c{value}={func}"),
            AtomLabel::Func { func, args, value } => write!(f, "c{value}={func}({})", constants(args)),
        }
    }
}

/// An ordered set of labelled propositional variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropSignature {
    vars: Vec<AtomLabel>,
    index: BTreeMap<AtomLabel, usize>,
}

impl PropSignature {
    pub fn new(vars: Vec<AtomLabel>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateSymbol(v.to_string()));
            }
        }
        Ok(Self { vars, index })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[AtomLabel] {
        &self.vars
    }

    pub fn label(&self, var: usize) -> Option<&AtomLabel> {
        self.vars.get(var)
    }

    pub fn index_of(&self, label: &AtomLabel) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Propositional formula over variable indices of some [`PropSignature`].
/// Conjunction is sugar: [`PropFormula::and`] builds `~(~a | ~b)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropFormula {
    Var(usize),
    Not(Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn var(i: usize) -> Self {
        PropFormula::Var(i)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: PropFormula) -> Self {
        PropFormula::Not(Box::new(a))
    }

    pub fn or(a: PropFormula, b: PropFormula) -> Self {
        PropFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: PropFormula, b: PropFormula) -> Self {
        Self::not(Self::or(Self::not(a), Self::not(b)))
    }

    /// Right-nested disjunction of a nonempty list.
    pub fn or_all(items: Vec<PropFormula>) -> Option<PropFormula> {
        items.into_iter().rev().reduce(|acc, f| PropFormula::or(f, acc))
    }

    /// Right-nested conjunction of a nonempty list.
    pub fn and_all(items: Vec<PropFormula>) -> Option<PropFormula> {
        items.into_iter().rev().reduce(|acc, f| PropFormula::and(f, acc))
    }

    pub fn max_var(&self) -> usize {
        match self {
            PropFormula::Var(i) => *i,
            PropFormula::Not(a) => a.max_var(),
            PropFormula::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            PropFormula::Var(i) => out.push(*i),
            PropFormula::Not(a) => a.collect_vars(out),
            PropFormula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn map_vars(&self, f: &impl Fn(usize) -> usize) -> PropFormula {
        match self {
            PropFormula::Var(i) => PropFormula::Var(f(*i)),
            PropFormula::Not(a) => PropFormula::not(a.map_vars(f)),
            PropFormula::Or(a, b) => PropFormula::or(a.map_vars(f), b.map_vars(f)),
        }
    }

    /// Replaces every variable `i` by `by[i]`.
    pub fn substitute(&self, by: &[PropFormula]) -> PropFormula {
        match self {
            PropFormula::Var(i) => by[*i].clone(),
            PropFormula::Not(a) => PropFormula::not(a.substitute(by)),
            PropFormula::Or(a, b) => PropFormula::or(a.substitute(by), b.substitute(by)),
        }
    }

    /// Evaluates against a raw value vector indexed by variable.
    pub fn eval_with(&self, values: &[bool]) -> Result<bool> {
        Ok(match self {
            PropFormula::Var(i) => *values.get(*i).ok_or_else(|| Error::VariableOutOfScope(format!("#{i}")))?,
            PropFormula::Not(a) => !a.eval_with(values)?,
            PropFormula::Or(a, b) => a.eval_with(values)? || b.eval_with(values)?,
        })
    }

    /// Three-valued evaluation under a partial assignment.
    pub fn eval_partial(&self, values: &[Option<bool>]) -> Option<bool> {
        match self {
            PropFormula::Var(i) => values[*i],
            PropFormula::Not(a) => a.eval_partial(values).map(|v| !v),
            PropFormula::Or(a, b) => match a.eval_partial(values) {
                Some(true) => Some(true),
                Some(false) => b.eval_partial(values),
                None => match b.eval_partial(values) {
                    Some(true) => Some(true),
                    _ => None,
                },
            },
        }
    }

    /// Printer using `[[label]]` for variables.
    pub fn display<'a>(&'a self, sig: &'a PropSignature) -> DisplayProp<'a> {
        DisplayProp { formula: self, sig }
    }
}

pub struct DisplayProp<'a> {
    formula: &'a PropFormula,
    sig: &'a PropSignature,
}

impl DisplayProp<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, p: &PropFormula, nested: bool) -> fmt::Result {
        match p {
            PropFormula::Var(i) => match self.sig.label(*i) {
                Some(l) => write!(f, "[[{l}]]"),
                None => write!(f, "[[#{i}]]"),
            },
            PropFormula::Not(a) => {
                f.write_str("~(")?;
                self.write(f, a, false)?;
                f.write_str(")")
            }
            PropFormula::Or(a, b) => {
                if nested {
                    f.write_str("(")?;
                }
                self.write(f, a, true)?;
                f.write_str(" | ")?;
                self.write(f, b, true)?;
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for DisplayProp<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.formula, false)
    }
}

/// A total assignment of truth values to the variables of a signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    signature: Arc<PropSignature>,
    values: Vec<bool>,
}

impl Valuation {
    pub fn new(signature: Arc<PropSignature>, values: Vec<bool>) -> Result<Self> {
        if values.len() != signature.len() {
            return Err(Error::InvalidLimit(format!(
                "valuation has {} values for {} variables",
                values.len(),
                signature.len()
            )));
        }
        Ok(Self { signature, values })
    }

    /// Builds a valuation from labelled values; every variable must be assigned.
    pub fn from_labels(signature: Arc<PropSignature>, assignment: &BTreeMap<AtomLabel, bool>) -> Result<Self> {
        let values = signature
            .vars()
            .iter()
            .map(|l| assignment.get(l).copied().ok_or_else(|| Error::MissingVariable(l.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if assignment.len() != values.len() {
            let stray = assignment.keys().find(|l| signature.index_of(l).is_none()).unwrap();
            return Err(Error::VariableOutOfScope(stray.to_string()));
        }
        Ok(Self { signature, values })
    }

    pub fn signature(&self) -> &Arc<PropSignature> {
        &self.signature
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, label: &AtomLabel) -> Option<bool> {
        self.signature.index_of(label).map(|i| self.values[i])
    }

    pub fn value(&self, var: usize) -> Option<bool> {
        self.values.get(var).copied()
    }

    /// `{"assignment": {...}}` with keys in signature order.
    pub fn to_json(&self) -> Value {
        let assignment: Map<String, Value> = self
            .signature
            .vars()
            .iter()
            .zip(&self.values)
            .map(|(l, &v)| (l.to_string(), Value::Bool(v)))
            .collect();
        let mut root = Map::new();
        root.insert("assignment".into(), Value::Object(assignment));
        Value::Object(root)
    }
}

/// Satisfaction of a propositional formula by a valuation.
pub fn eval_prop(v: &Valuation, p: &PropFormula) -> Result<bool> {
    p.eval_with(&v.values).map_err(|_| Error::VariableOutOfScope(format!("#{}", p.max_var())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig2() -> Arc<PropSignature> {
        Arc::new(PropSignature::new(vec![AtomLabel::pred("p", vec![1]), AtomLabel::pred("q", vec![1])]).unwrap())
    }

    #[test]
    fn variable_clause() {
        let v = Valuation::new(sig2(), vec![true, false]).unwrap();
        assert!(eval_prop(&v, &PropFormula::var(0)).unwrap());
    }

    #[test]
    fn excluded_middle_always_holds() {
        for bits in 0..4 {
            let v = Valuation::new(sig2(), vec![bits & 2 != 0, bits & 1 != 0]).unwrap();
            let f = PropFormula::or(PropFormula::var(0), PropFormula::not(PropFormula::var(0)));
            assert!(eval_prop(&v, &f).unwrap());
        }
    }

    #[test]
    fn negated_disjunction() {
        let v = Valuation::new(sig2(), vec![true, false]).unwrap();
        let f = PropFormula::not(PropFormula::or(PropFormula::var(0), PropFormula::var(1)));
        assert!(!eval_prop(&v, &f).unwrap());
    }

    #[test]
    fn out_of_scope_variable() {
        let v = Valuation::new(sig2(), vec![true, false]).unwrap();
        assert!(matches!(eval_prop(&v, &PropFormula::var(5)), Err(Error::VariableOutOfScope(_))));
    }

    #[test]
    fn labels_print_as_atoms() {
        assert_eq!(AtomLabel::pred("P", vec![1, 2]).to_string(), "P(c1,c2)");
        assert_eq!(AtomLabel::Eq(1, 2).to_string(), "c1=c2");
        assert_eq!(AtomLabel::func("a", vec![], 2).to_string(), "c2=a");
        assert_eq!(AtomLabel::func("f", vec![1], 1).to_string(), "c1=f(c1)");
        let sig = PropSignature::new(vec![AtomLabel::Eq(1, 2)]).unwrap();
        assert_eq!(PropFormula::not(PropFormula::var(0)).display(&sig).to_string(), "~([[c1=c2]])");
    }

    #[test]
    fn partial_evaluation() {
        let f = PropFormula::or(PropFormula::var(0), PropFormula::var(1));
        assert_eq!(f.eval_partial(&[None, Some(true)]), Some(true));
        assert_eq!(f.eval_partial(&[None, Some(false)]), None);
        assert_eq!(f.eval_partial(&[Some(false), Some(false)]), Some(false));
    }

    #[test]
    fn json_keys_follow_signature_order() {
        let v = Valuation::new(sig2(), vec![false, true]).unwrap();
        assert_eq!(v.to_json().to_string(), r#"{"assignment":{"p(c1)":false,"q(c1)":true}}"#);
    }
}
