//! Truth tables and satisfying-assignment search.
//!
//! Canonical order everywhere is binary counting over the variables in
//! signature order, first variable most significant, false before true.

use crate::comorphism::PropTheory;
use crate::error::{Error, Result};
use crate::prop::{PropFormula, Valuation};

pub const DEFAULT_TABLE_CAP: usize = 20;
pub const DEFAULT_SEARCH_CAP: usize = 24;

/// The table of a list of formulas over a list of input variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    inputs: Vec<usize>,
    outputs: Vec<PropFormula>,
    rows: Vec<Vec<bool>>,
}

impl TruthTable {
    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PropFormula] {
        &self.outputs
    }

    /// Output row for each input row, rows in canonical order.
    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Input valuation of row `r`.
    pub fn input_row(&self, r: usize) -> Vec<bool> {
        row_bits(self.inputs.len(), r)
    }

    /// `next ∘ self`: the outputs of `self` feed the inputs of `next`
    /// positionally.
    pub fn compose(&self, next: &TruthTable) -> Result<TruthTable> {
        if next.inputs.len() != self.outputs.len() {
            return Err(Error::InvalidLimit(format!(
                "cannot feed {} outputs into {} inputs",
                self.outputs.len(),
                next.inputs.len()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|out| next.rows[row_index(out)].clone())
            .collect();
        let outputs = next
            .outputs
            .iter()
            .map(|f| {
                let positions: Vec<PropFormula> = (0..=next.inputs.iter().copied().max().unwrap_or(0))
                    .map(|v| match next.inputs.iter().position(|&i| i == v) {
                        Some(p) => self.outputs[p].clone(),
                        None => PropFormula::var(v),
                    })
                    .collect();
                f.substitute(&positions)
            })
            .collect();
        Ok(TruthTable { inputs: self.inputs.clone(), outputs, rows })
    }
}

fn row_bits(width: usize, r: usize) -> Vec<bool> {
    (0..width).map(|i| (r >> (width - 1 - i)) & 1 == 1).collect()
}

fn row_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub fn build_truth_table(vars: &[usize], formulas: &[PropFormula]) -> Result<TruthTable> {
    build_truth_table_capped(vars, formulas, DEFAULT_TABLE_CAP)
}

pub fn build_truth_table_capped(vars: &[usize], formulas: &[PropFormula], cap: usize) -> Result<TruthTable> {
    if vars.len() > cap {
        return Err(Error::VariableCap { vars: vars.len(), cap });
    }
    let width = vars.iter().copied().max().map_or(0, |m| m + 1);
    for f in formulas {
        if let Some(v) = f.vars().into_iter().find(|v| !vars.contains(v)) {
            return Err(Error::VariableOutOfScope(format!("#{v}")));
        }
    }
    let mut values = vec![false; width];
    let rows = (0..1usize << vars.len())
        .map(|r| {
            for (bit, &v) in row_bits(vars.len(), r).into_iter().zip(vars) {
                values[v] = bit;
            }
            formulas.iter().map(|f| f.eval_with(&values).expect("variables checked")).collect()
        })
        .collect();
    Ok(TruthTable { inputs: vars.to_vec(), outputs: formulas.to_vec(), rows })
}

/// Chronological backtracking over variables in signature order. After each
/// assignment only the formulas mentioning that variable are re-evaluated
/// three-valued; a formula that became false cuts the branch.
struct Search<'t> {
    formulas: Vec<&'t PropFormula>,
    watching: Vec<Vec<usize>>,
    assignment: Vec<Option<bool>>,
}

impl<'t> Search<'t> {
    fn new(theory: &'t PropTheory, cap: usize) -> Result<Self> {
        let k = theory.signature().len();
        if k > cap {
            return Err(Error::VariableCap { vars: k, cap });
        }
        let formulas: Vec<&PropFormula> = theory.formulas().collect();
        let mut watching = vec![Vec::new(); k];
        for (i, f) in formulas.iter().enumerate() {
            for v in f.vars() {
                watching[v].push(i);
            }
        }
        Ok(Search { formulas, watching, assignment: vec![None; k] })
    }

    fn consistent_after(&self, var: usize) -> bool {
        self.watching[var]
            .iter()
            .all(|&i| self.formulas[i].eval_partial(&self.assignment) != Some(false))
    }

    /// Visits satisfying total assignments in canonical order until `visit`
    /// returns false. Returns false if stopped early.
    fn run(&mut self, depth: usize, visit: &mut impl FnMut(&[Option<bool>]) -> bool) -> bool {
        if depth == self.assignment.len() {
            return visit(&self.assignment);
        }
        for value in [false, true] {
            self.assignment[depth] = Some(value);
            if self.consistent_after(depth) && !self.run(depth + 1, visit) {
                self.assignment[depth] = None;
                return false;
            }
        }
        self.assignment[depth] = None;
        true
    }
}

fn to_valuation(theory: &PropTheory, assignment: &[Option<bool>]) -> Valuation {
    let values = assignment.iter().map(|v| v.expect("total assignment")).collect();
    Valuation::new(theory.signature().clone(), values).expect("sizes agree")
}

pub fn find_assignment(theory: &PropTheory) -> Result<Option<Valuation>> {
    find_assignment_capped(theory, DEFAULT_SEARCH_CAP)
}

/// First satisfying valuation in canonical order, or `None` if the theory is
/// unsatisfiable.
pub fn find_assignment_capped(theory: &PropTheory, cap: usize) -> Result<Option<Valuation>> {
    let mut search = Search::new(theory, cap)?;
    let mut found = None;
    search.run(0, &mut |a| {
        found = Some(to_valuation(theory, a));
        false
    });
    Ok(found)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub valuations: Vec<Valuation>,
    /// True when every satisfying valuation is in `valuations`.
    pub exhausted: bool,
}

pub fn enumerate_assignments(theory: &PropTheory, limit: usize) -> Result<Enumeration> {
    enumerate_assignments_capped(theory, limit, DEFAULT_SEARCH_CAP)
}

/// Satisfying valuations in canonical order, at most `limit` of them.
pub fn enumerate_assignments_capped(theory: &PropTheory, limit: usize, cap: usize) -> Result<Enumeration> {
    if limit == 0 {
        return Err(Error::InvalidLimit("enumeration limit must be at least 1".into()));
    }
    let mut search = Search::new(theory, cap)?;
    let mut valuations = Vec::new();
    let mut exhausted = true;
    search.run(0, &mut |a| {
        if valuations.len() == limit {
            exhausted = false;
            return false;
        }
        valuations.push(to_valuation(theory, a));
        true
    });
    Ok(Enumeration { valuations, exhausted })
}
