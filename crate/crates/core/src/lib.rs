//! First-order logic toolkit: parsing, finite-model semantics, semantic
//! tableaux, and a bounded translation into propositional logic with a small
//! assignment finder.

pub mod comorphism;
pub mod error;
pub mod finder;
pub mod parser;
pub mod prop;
pub mod sample;
pub mod semantics;
pub mod syntax;
pub mod tableau;

pub use comorphism::{translate_theory, Bound, PropTheory};
pub use error::{Error, Result};
pub use parser::{parse_formula, parse_theory};
pub use prop::{AtomLabel, PropFormula, PropSignature, Valuation};
pub use semantics::{eval_fo, eval_sentence, FiniteStructure};
pub use syntax::{FoFormula, FoSignature, SignatureMorphism, Term, TheoryPresentation};
