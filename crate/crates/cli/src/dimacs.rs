//! Tseitin encoding of a propositional theory as DIMACS CNF.

use std::collections::HashMap;
use std::fmt::Write;

use subsat_core::prop::PropFormula;
use subsat_core::PropTheory;

struct Encoder {
    next: usize,
    clauses: Vec<Vec<i64>>,
    cache: HashMap<PropFormula, i64>,
    aux: Vec<usize>,
}

impl Encoder {
    /// A literal equivalent to `f`, adding definitions as needed.
    fn literal(&mut self, f: &PropFormula) -> i64 {
        match f {
            PropFormula::Var(v) => *v as i64 + 1,
            PropFormula::Not(a) => -self.literal(a),
            PropFormula::Or(a, b) => {
                if let Some(&l) = self.cache.get(f) {
                    return l;
                }
                let (la, lb) = (self.literal(a), self.literal(b));
                self.next += 1;
                let x = self.next as i64;
                self.aux.push(self.next);
                self.clauses.push(vec![-x, la, lb]);
                self.clauses.push(vec![x, -la]);
                self.clauses.push(vec![x, -lb]);
                self.cache.insert(f.clone(), x);
                x
            }
        }
    }
}

/// CNF equisatisfiable with `theory`. Variables `1..=k` are the theory's
/// variables in signature order; the rest are definitions.
pub fn encode(theory: &PropTheory) -> String {
    let sig = theory.signature();
    let mut enc = Encoder { next: sig.len(), clauses: Vec::new(), cache: HashMap::new(), aux: Vec::new() };
    for f in theory.formulas() {
        let l = enc.literal(f);
        enc.clauses.push(vec![l]);
    }
    let mut out = String::new();
    for (i, label) in sig.vars().iter().enumerate() {
        writeln!(out, "c {} {}", i + 1, label).unwrap();
    }
    for (k, v) in enc.aux.iter().enumerate() {
        writeln!(out, "c {} _aux{}", v, k + 1).unwrap();
    }
    writeln!(out, "p cnf {} {}", enc.next, enc.clauses.len()).unwrap();
    for c in &enc.clauses {
        for l in c {
            write!(out, "{l} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}
