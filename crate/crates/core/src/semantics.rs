//! Finite first-order structures and Tarskian evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::syntax::{domain_constant_index, domain_constant_name, FoFormula, FoSignature, Term, TheoryPresentation};

/// Default cap on the number of structures [`all_structures`] may produce.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1_000_000;

/// Domain elements are `0..size`, printed as `c1..cn`.
pub type Element = usize;

fn tuple_count(size: usize, arity: usize) -> usize {
    size.pow(arity as u32)
}

/// Mixed-radix index of a tuple, first component most significant.
fn tuple_index(size: usize, tuple: &[Element]) -> usize {
    tuple.iter().fold(0, |acc, &e| acc * size + e)
}

fn tuple_at(size: usize, arity: usize, mut index: usize) -> Vec<Element> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = index % size;
        index /= size;
    }
    out
}

/// All tuples of the given arity in lexicographic order.
pub fn tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<Element>> {
    (0..tuple_count(size, arity)).map(move |i| tuple_at(size, arity, i))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionTable {
    arity: usize,
    values: Vec<Element>,
}

impl FunctionTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn apply(&self, size: usize, args: &[Element]) -> Element {
        self.values[tuple_index(size, args)]
    }

    /// Values in tuple order.
    pub fn values(&self) -> &[Element] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    holds: Vec<bool>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn contains(&self, size: usize, args: &[Element]) -> bool {
        self.holds[tuple_index(size, args)]
    }

    pub fn tuples(&self, size: usize) -> Vec<Vec<Element>> {
        self.holds
            .iter()
            .enumerate()
            .filter(|(_, &h)| h)
            .map(|(i, _)| tuple_at(size, self.arity, i))
            .collect()
    }
}

/// A total interpretation of a signature over the domain `{c1..cn}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteStructure {
    size: usize,
    functions: BTreeMap<String, FunctionTable>,
    relations: BTreeMap<String, Relation>,
}

impl FiniteStructure {
    /// Builds a structure from explicit tables. Every function must be total
    /// over the full domain product and every symbol of `sig` must be
    /// interpreted; nothing is defaulted.
    pub fn from_tables(
        sig: &FoSignature,
        size: usize,
        functions: BTreeMap<String, BTreeMap<Vec<Element>, Element>>,
        relations: BTreeMap<String, BTreeSet<Vec<Element>>>,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::Structure("domain must be nonempty".into()));
        }
        let mut out = FiniteStructure { size, functions: BTreeMap::new(), relations: BTreeMap::new() };
        for (name, &arity) in sig.functions() {
            let table = functions
                .get(name)
                .ok_or_else(|| Error::Structure(format!("function `{name}` is not interpreted")))?;
            let mut values = Vec::with_capacity(tuple_count(size, arity));
            for tuple in tuples(size, arity) {
                let v = *table.get(&tuple).ok_or_else(|| {
                    Error::Structure(format!("function `{name}` is undefined at {}", show_tuple(&tuple)))
                })?;
                if v >= size {
                    return Err(Error::Structure(format!("function `{name}` maps outside the domain")));
                }
                values.push(v);
            }
            if table.len() != values.len() {
                return Err(Error::Structure(format!("function `{name}` has entries of the wrong arity or range")));
            }
            out.functions.insert(name.clone(), FunctionTable { arity, values });
        }
        for (name, &arity) in sig.predicates() {
            let set = relations
                .get(name)
                .ok_or_else(|| Error::Structure(format!("predicate `{name}` is not interpreted")))?;
            let mut holds = vec![false; tuple_count(size, arity)];
            for tuple in set {
                if tuple.len() != arity || tuple.iter().any(|&e| e >= size) {
                    return Err(Error::Structure(format!("relation `{name}` has an ill-formed tuple")));
                }
                holds[tuple_index(size, tuple)] = true;
            }
            out.relations.insert(name.clone(), Relation { arity, holds });
        }
        if let Some(extra) = functions
            .keys()
            .find(|k| sig.function_arity(k).is_none())
            .or_else(|| relations.keys().find(|k| sig.predicate_arity(k).is_none()))
        {
            return Err(Error::Structure(format!("`{extra}` is not in the signature")));
        }
        Ok(out)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn function(&self, name: &str) -> Option<&FunctionTable> {
        self.functions.get(name)
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn functions(&self) -> &BTreeMap<String, FunctionTable> {
        &self.functions
    }

    pub fn relations(&self) -> &BTreeMap<String, Relation> {
        &self.relations
    }

    pub fn signature(&self) -> FoSignature {
        let mut sig = FoSignature::new();
        for (name, t) in &self.functions {
            if domain_constant_index(name).is_some() {
                sig.insert_constant_unchecked(name);
            } else {
                sig.add_function(name.clone(), t.arity).expect("structure symbols are distinct");
            }
        }
        for (name, r) in &self.relations {
            sig.add_predicate(name.clone(), r.arity).expect("structure symbols are distinct");
        }
        sig
    }

    /// True when exactly the symbols of `sig` are interpreted with matching arities.
    pub fn matches_signature(&self, sig: &FoSignature) -> bool {
        self.functions.len() == sig.functions().len()
            && self.relations.len() == sig.predicates().len()
            && sig.functions().iter().all(|(n, &a)| self.functions.get(n).map(|t| t.arity) == Some(a))
            && sig.predicates().iter().all(|(n, &a)| self.relations.get(n).map(|r| r.arity) == Some(a))
    }

    /// Restriction to a sub-signature.
    pub fn reduct(&self, sig: &FoSignature) -> Result<FiniteStructure> {
        let mut out = FiniteStructure { size: self.size, functions: BTreeMap::new(), relations: BTreeMap::new() };
        for (name, &arity) in sig.functions() {
            match self.functions.get(name) {
                Some(t) if t.arity == arity => {
                    out.functions.insert(name.clone(), t.clone());
                }
                _ => return Err(Error::UnknownSymbol(name.clone())),
            }
        }
        for (name, &arity) in sig.predicates() {
            match self.relations.get(name) {
                Some(r) if r.arity == arity => {
                    out.relations.insert(name.clone(), r.clone());
                }
                _ => return Err(Error::UnknownSymbol(name.clone())),
            }
        }
        Ok(out)
    }

    /// Renames symbols; `rename` must be injective on this structure's symbols.
    pub fn rename_symbols(&self, rename: impl Fn(&str) -> String) -> FiniteStructure {
        FiniteStructure {
            size: self.size,
            functions: self.functions.iter().map(|(k, v)| (rename(k), v.clone())).collect(),
            relations: self.relations.iter().map(|(k, v)| (rename(k), v.clone())).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut functions = Map::new();
        for (name, table) in &self.functions {
            let mut entries: Vec<(String, Value)> = tuples(self.size, table.arity)
                .zip(&table.values)
                .map(|(tuple, &v)| (show_tuple(&tuple), Value::String(domain_constant_name(v + 1))))
                .collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            functions.insert(name.clone(), Value::Object(entries.into_iter().collect()));
        }
        let mut relations = Map::new();
        for (name, rel) in &self.relations {
            let rows = rel
                .tuples(self.size)
                .into_iter()
                .map(|t| Value::Array(t.into_iter().map(|e| Value::String(domain_constant_name(e + 1))).collect()))
                .collect();
            relations.insert(name.clone(), Value::Array(rows));
        }
        let mut root = Map::new();
        root.insert("functions".into(), Value::Object(functions));
        root.insert("relations".into(), Value::Object(relations));
        root.insert("size".into(), Value::from(self.size));
        Value::Object(root)
    }

    /// Parses the JSON model format and validates it against `sig`.
    pub fn from_json(text: &str, sig: &FoSignature) -> Result<FiniteStructure> {
        let bad = |m: String| Error::ModelFormat(m);
        let root: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let obj = root.as_object().ok_or_else(|| bad("top level must be an object".into()))?;
        let size = obj
            .get("size")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("`size` must be a positive integer".into()))? as usize;
        if size == 0 {
            return Err(bad("`size` must be a positive integer".into()));
        }
        let element = |v: &Value| -> Result<Element> {
            let s = v.as_str().ok_or_else(|| bad(format!("expected a domain element, found {v}")))?;
            match domain_constant_index(s) {
                Some(i) if i <= size => Ok(i - 1),
                _ => Err(bad(format!("`{s}` is not an element of a domain of size {size}"))),
            }
        };
        let empty = Map::new();
        let fobj = match obj.get("functions") {
            Some(v) => v.as_object().ok_or_else(|| bad("`functions` must be an object".into()))?,
            None => &empty,
        };
        let mut functions = BTreeMap::new();
        for (name, table) in fobj {
            let table = table.as_object().ok_or_else(|| bad(format!("table for `{name}` must be an object")))?;
            let mut entries = BTreeMap::new();
            for (key, value) in table {
                let inner = key
                    .strip_prefix('(')
                    .and_then(|k| k.strip_suffix(')'))
                    .ok_or_else(|| bad(format!("bad tuple key `{key}`")))?;
                let args = if inner.is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|s| element(&Value::String(s.trim().to_string())))
                        .collect::<Result<Vec<_>>>()?
                };
                entries.insert(args, element(value)?);
            }
            functions.insert(name.clone(), entries);
        }
        let robj = match obj.get("relations") {
            Some(v) => v.as_object().ok_or_else(|| bad("`relations` must be an object".into()))?,
            None => &empty,
        };
        let mut relations = BTreeMap::new();
        for (name, rows) in robj {
            let rows = rows.as_array().ok_or_else(|| bad(format!("relation `{name}` must be an array")))?;
            let mut set = BTreeSet::new();
            for row in rows {
                let row = row.as_array().ok_or_else(|| bad(format!("tuple of `{name}` must be an array")))?;
                set.insert(row.iter().map(element).collect::<Result<Vec<_>>>()?);
            }
            relations.insert(name.clone(), set);
        }
        FiniteStructure::from_tables(sig, size, functions, relations).map_err(|e| match e {
            Error::Structure(m) => Error::ModelFormat(m),
            other => other,
        })
    }
}

fn show_tuple(tuple: &[Element]) -> String {
    let parts: Vec<String> = tuple.iter().map(|&e| domain_constant_name(e + 1)).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let domain: Vec<String> = (1..=self.size).map(domain_constant_name).collect();
        writeln!(f, "domain: {{{}}}", domain.join(", "))?;
        for (name, table) in &self.functions {
            if table.arity == 0 {
                writeln!(f, "{name} = {}", domain_constant_name(table.values[0] + 1))?;
            } else {
                let entries: Vec<String> = tuples(self.size, table.arity)
                    .zip(&table.values)
                    .map(|(t, &v)| format!("{} -> {}", show_tuple(&t), domain_constant_name(v + 1)))
                    .collect();
                writeln!(f, "{name} = {{{}}}", entries.join(", "))?;
            }
        }
        for (name, rel) in &self.relations {
            let rows: Vec<String> = rel.tuples(self.size).iter().map(|t| show_tuple(t)).collect();
            writeln!(f, "{name} = {{{}}}", rows.join(", "))?;
        }
        Ok(())
    }
}

/// Variable environment for [`eval_fo`].
pub type Env = BTreeMap<String, Element>;

/// Evaluates `formula` in `m` under `env`.
pub fn eval_fo(m: &FiniteStructure, formula: &FoFormula, env: &Env) -> Result<bool> {
    let mut stack: Vec<(&str, Element)> = env.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    eval(m, formula, &mut stack)
}

pub fn eval_sentence(m: &FiniteStructure, formula: &FoFormula) -> Result<bool> {
    eval(m, formula, &mut Vec::new())
}

fn eval<'f>(m: &FiniteStructure, formula: &'f FoFormula, env: &mut Vec<(&'f str, Element)>) -> Result<bool> {
    use FoFormula as F;
    Ok(match formula {
        F::Atom(p, args) => {
            let rel = m.relations.get(p).ok_or_else(|| Error::UnknownSymbol(p.clone()))?;
            if rel.arity != args.len() {
                return Err(Error::ArityMismatch { symbol: p.clone(), expected: rel.arity, found: args.len() });
            }
            let vals = args.iter().map(|t| eval_term(m, t, env)).collect::<Result<Vec<_>>>()?;
            rel.contains(m.size, &vals)
        }
        F::Eq(l, r) => eval_term(m, l, env)? == eval_term(m, r, env)?,
        F::Not(a) => !eval(m, a, env)?,
        F::Or(a, b) => eval(m, a, env)? || eval(m, b, env)?,
        F::And(a, b) => eval(m, a, env)? && eval(m, b, env)?,
        F::Implies(a, b) => !eval(m, a, env)? || eval(m, b, env)?,
        F::Iff(a, b) => eval(m, a, env)? == eval(m, b, env)?,
        F::Exists(x, a) | F::Forall(x, a) => {
            let universal = matches!(formula, F::Forall(..));
            let mut result = universal;
            for e in 0..m.size {
                env.push((x.as_str(), e));
                let v = eval(m, a, env);
                env.pop();
                if v? != universal {
                    result = !universal;
                    break;
                }
            }
            result
        }
    })
}

fn eval_term(m: &FiniteStructure, term: &Term, env: &[(&str, Element)]) -> Result<Element> {
    match term {
        Term::Var(x) => env
            .iter()
            .rev()
            .find(|(name, _)| name == x)
            .map(|&(_, e)| e)
            .ok_or_else(|| Error::UnboundVariable(x.clone())),
        Term::App(f, args) => {
            let table = m.functions.get(f).ok_or_else(|| Error::UnknownSymbol(f.clone()))?;
            if table.arity != args.len() {
                return Err(Error::ArityMismatch { symbol: f.clone(), expected: table.arity, found: args.len() });
            }
            let vals = args.iter().map(|t| eval_term(m, t, env)).collect::<Result<Vec<_>>>()?;
            Ok(table.apply(m.size, &vals))
        }
    }
}

/// True iff every axiom holds in `m`.
pub fn satisfies_theory(m: &FiniteStructure, theory: &TheoryPresentation) -> Result<bool> {
    for axiom in theory.axioms() {
        if !eval_sentence(m, axiom)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of structures of size `n` over `sig`, or `None` on overflow.
pub fn structure_count(sig: &FoSignature, n: usize) -> Option<u128> {
    let mut count: u128 = 1;
    for &arity in sig.functions().values() {
        let entries = u32::try_from((n as u128).checked_pow(arity as u32)?).ok()?;
        count = count.checked_mul((n as u128).checked_pow(entries)?)?;
    }
    for &arity in sig.predicates().values() {
        let entries = u32::try_from((n as u128).checked_pow(arity as u32)?).ok()?;
        count = count.checked_mul(2u128.checked_pow(entries)?)?;
    }
    Some(count)
}

/// Every structure of size exactly `n` over `sig`.
///
/// Order: a structure is a digit string made of the function tables (symbols
/// by name, entries in tuple order, values `c1..cn`) followed by the
/// relation tables (symbols by name, tuples in order, absent before present).
/// Structures are produced in lexicographic order of that string.
pub fn all_structures(sig: &FoSignature, n: usize, limit: u64) -> Result<StructureIter> {
    if n == 0 {
        return Err(Error::InvalidLimit("domain size must be at least 1".into()));
    }
    match structure_count(sig, n) {
        Some(c) if c <= limit as u128 => {}
        Some(c) => return Err(Error::EnumerationLimit { count: c.to_string(), limit }),
        None => return Err(Error::EnumerationLimit { count: "more than 2^128".into(), limit }),
    }
    let mut layout = Vec::new();
    for (name, &arity) in sig.functions() {
        layout.push((name.clone(), arity, true));
    }
    for (name, &arity) in sig.predicates() {
        layout.push((name.clone(), arity, false));
    }
    let radices: Vec<usize> = layout
        .iter()
        .flat_map(|&(_, arity, is_fn)| std::iter::repeat_n(if is_fn { n } else { 2 }, tuple_count(n, arity)))
        .collect();
    Ok(StructureIter { size: n, layout, digits: vec![0; radices.len()], radices, done: false })
}

pub struct StructureIter {
    size: usize,
    layout: Vec<(String, usize, bool)>,
    radices: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl StructureIter {
    fn build(&self) -> FiniteStructure {
        let mut functions = BTreeMap::new();
        let mut relations = BTreeMap::new();
        let mut at = 0;
        for (name, arity, is_fn) in &self.layout {
            let width = tuple_count(self.size, *arity);
            let slice = &self.digits[at..at + width];
            at += width;
            if *is_fn {
                functions.insert(name.clone(), FunctionTable { arity: *arity, values: slice.to_vec() });
            } else {
                relations.insert(name.clone(), Relation { arity: *arity, holds: slice.iter().map(|&d| d == 1).collect() });
            }
        }
        FiniteStructure { size: self.size, functions, relations }
    }
}

impl Iterator for StructureIter {
    type Item = FiniteStructure;

    fn next(&mut self) -> Option<FiniteStructure> {
        if self.done {
            return None;
        }
        let out = self.build();
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn sig(functions: &[(&str, usize)], predicates: &[(&str, usize)]) -> FoSignature {
        FoSignature::from_symbols(functions.iter().copied(), predicates.iter().copied()).unwrap()
    }

    fn structure(sig: &FoSignature, size: usize, consts: &[(&str, usize)], rels: &[(&str, &[&[usize]])]) -> FiniteStructure {
        let functions = consts.iter().map(|&(n, v)| (n.to_string(), [(vec![], v)].into())).collect();
        let relations = rels
            .iter()
            .map(|&(n, rows)| (n.to_string(), rows.iter().map(|r| r.to_vec()).collect()))
            .collect();
        FiniteStructure::from_tables(sig, size, functions, relations).unwrap()
    }

    #[test]
    fn atom_evaluation() {
        let s = sig(&[("a", 0)], &[("P", 1)]);
        let m = structure(&s, 1, &[("a", 0)], &[("P", &[&[0]])]);
        let f = parse_formula("P(a)", &s).unwrap();
        assert!(eval_sentence(&m, &f).unwrap());
    }

    #[test]
    fn exists_self_equal_is_valid() {
        let s = sig(&[], &[("P", 1)]);
        for m in all_structures(&s, 2, 100).unwrap() {
            let f = parse_formula("exists x . x = x", &s).unwrap();
            assert!(eval_sentence(&m, &f).unwrap());
        }
    }

    #[test]
    fn universal_fails_on_partial_relation() {
        // Expanding over {c1, c2}: ~P(c2) holds, so exists x. ~P(x) holds.
        let s = sig(&[], &[("P", 1)]);
        let m = structure(&s, 2, &[], &[("P", &[&[0]])]);
        let f = parse_formula("~(exists x . ~P(x))", &s).unwrap();
        assert!(!eval_sentence(&m, &f).unwrap());
    }

    #[test]
    fn errors_for_unbound_and_uninterpreted() {
        let s = sig(&[], &[("P", 1)]);
        let m = structure(&s, 1, &[], &[("P", &[])]);
        let f = FoFormula::atom("P", vec![Term::var("y")]);
        assert_eq!(eval_sentence(&m, &f), Err(Error::UnboundVariable("y".into())));
        let env: Env = [("y".to_string(), 0)].into();
        assert_eq!(eval_fo(&m, &f, &env), Ok(false));
        let g = FoFormula::atom("Q", vec![Term::var("y")]);
        assert_eq!(eval_fo(&m, &g, &env), Err(Error::UnknownSymbol("Q".into())));
    }

    #[test]
    fn theory_satisfaction() {
        let s = sig(&[("a", 0)], &[("P", 1)]);
        let m = structure(&s, 1, &[("a", 0)], &[("P", &[])]);
        let empty = TheoryPresentation::new(s.clone(), vec![], None).unwrap();
        assert!(satisfies_theory(&m, &empty).unwrap());
        let t = TheoryPresentation::new(s.clone(), vec![parse_formula("P(a)", &s).unwrap()], None).unwrap();
        assert!(!satisfies_theory(&m, &t).unwrap());
    }

    #[test]
    fn structure_counts() {
        let p = sig(&[], &[("P", 1)]);
        assert_eq!(all_structures(&p, 1, 100).unwrap().count(), 2);
        assert_eq!(all_structures(&p, 2, 100).unwrap().count(), 4);
        let ap = sig(&[("a", 0)], &[("P", 1)]);
        let all: Vec<_> = all_structures(&ap, 2, 100).unwrap().collect();
        assert_eq!(all.len(), 8);
        let distinct: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 8);
        assert_eq!(structure_count(&ap, 2), Some(8));
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let ap = sig(&[("a", 0)], &[("P", 1)]);
        let first: Vec<String> = all_structures(&ap, 2, 100)
            .unwrap()
            .take(3)
            .map(|m| m.to_json().to_string())
            .collect();
        assert_eq!(
            first,
            vec![
                r#"{"functions":{"a":{"()":"c1"}},"relations":{"P":[]},"size":2}"#,
                r#"{"functions":{"a":{"()":"c1"}},"relations":{"P":[["c2"]]},"size":2}"#,
                r#"{"functions":{"a":{"()":"c1"}},"relations":{"P":[["c1"]]},"size":2}"#,
            ]
        );
    }

    #[test]
    fn enumeration_limit() {
        let s = sig(&[], &[("R", 2)]);
        assert!(matches!(all_structures(&s, 3, 100), Err(Error::EnumerationLimit { .. })));
        assert!(all_structures(&s, 3, 512).is_ok());
    }

    #[test]
    fn partial_tables_are_rejected() {
        let s = sig(&[("f", 1)], &[]);
        let functions = [("f".to_string(), [(vec![0], 1)].into())].into();
        let r = FiniteStructure::from_tables(&s, 2, functions, BTreeMap::new());
        assert!(matches!(r, Err(Error::Structure(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = sig(&[("a", 0), ("f", 2)], &[("P", 1), ("R", 2)]);
        for m in all_structures(&s, 2, 1 << 20).unwrap().step_by(997) {
            let text = m.to_json().to_string();
            assert_eq!(FiniteStructure::from_json(&text, &s).unwrap(), m);
        }
        let bad = r#"{"size": 1, "functions": {"a": {"()": "c2"}, "f": {}}, "relations": {"P": [], "R": []}}"#;
        assert!(matches!(FiniteStructure::from_json(bad, &s), Err(Error::ModelFormat(_))));
    }
}
