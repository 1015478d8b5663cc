//! Recursive-descent parser for theory files.
//!
//! ```text
//! theory   := "sig" "{" [ "functions" ":" sym {"," sym} ";" ] [ "predicates" ":" sym {"," sym} ";" ] "}"
//!             "axioms" "{" { formula ";" } "}" [ "goal" ":" formula ";" ]
//! sym      := IDENT "/" NAT
//! formula  := ("forall"|"exists") IDENT "." formula | iff
//! iff      := imp { "<->" imp } ; imp := or [ "->" imp ] ; or := and { "|" and } ; and := un { "&" un }
//! un       := "~" un | "(" formula ")" | atom
//! atom     := IDENT "(" term {"," term} ")" | term "=" term
//! term     := IDENT [ "(" term {"," term} ")" ]
//! ```
//!
//! The two signature sections may appear in either order. `//` starts a line
//! comment.

use crate::error::{Error, Result};
use crate::syntax::{FoFormula, FoSignature, Term, TheoryPresentation};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Slash,
    Dot,
    Tilde,
    Bar,
    Amp,
    Arrow,
    DoubleArrow,
    Equals,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Nat(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".into(),
            other => {
                let s = match other {
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::Comma => ",",
                    Tok::Semi => ";",
                    Tok::Colon => ":",
                    Tok::Slash => "/",
                    Tok::Dot => ".",
                    Tok::Tilde => "~",
                    Tok::Bar => "|",
                    Tok::Amp => "&",
                    Tok::Arrow => "->",
                    Tok::DoubleArrow => "<->",
                    Tok::Equals => "=",
                    _ => unreachable!(),
                };
                format!("`{s}`")
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    let err = |line, column, message: String| Error::Parse { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let mut advance = 1;
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '/' => Tok::Slash,
            '.' => Tok::Dot,
            '~' => Tok::Tilde,
            '|' => Tok::Bar,
            '&' => Tok::Amp,
            '=' => Tok::Equals,
            '-' if chars.get(i + 1) == Some(&'>') => {
                advance = 2;
                Tok::Arrow
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                advance = 3;
                Tok::DoubleArrow
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i + advance < chars.len() && (chars[i + advance].is_ascii_alphanumeric() || chars[i + advance] == '_') {
                    advance += 1;
                }
                Tok::Ident(chars[start..start + advance].iter().collect())
            }
            c if c.is_ascii_digit() => {
                while i + advance < chars.len() && chars[i + advance].is_ascii_digit() {
                    advance += 1;
                }
                let digits: String = chars[i..i + advance].iter().collect();
                let n = digits.parse().map_err(|_| err(l0, c0, format!("number `{digits}` is too large")))?;
                Tok::Nat(n)
            }
            other => return Err(err(l0, c0, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, line: l0, column: c0 });
        i += advance;
        column += advance;
    }
    out.push(Spanned { tok: Tok::Eof, line, column });
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<Spanned>,
    pos: usize,
    sig: &'s FoSignature,
    bound: Vec<String>,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let s = &self.toks[self.pos];
        Error::Parse { line: s.line, column: s.column, message: message.into() }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {}, found {}", tok.describe(), self.peek().describe())))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => Err(self.error_here(format!("expected `{kw}`, found {}", other.describe()))),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.error_here(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn formula(&mut self) -> Result<FoFormula> {
        if self.is_keyword("forall") || self.is_keyword("exists") {
            let universal = self.is_keyword("forall");
            self.next();
            let var = self.ident()?;
            if var == "forall" || var == "exists" {
                return Err(self.error_here("quantifier keyword used as a variable"));
            }
            self.expect(Tok::Dot)?;
            self.bound.push(var.clone());
            let body = self.formula();
            self.bound.pop();
            let body = body?;
            return Ok(if universal { FoFormula::forall(var, body) } else { FoFormula::exists(var, body) });
        }
        self.iff()
    }

    fn iff(&mut self) -> Result<FoFormula> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::DoubleArrow {
            self.next();
            let rhs = self.imp()?;
            lhs = FoFormula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<FoFormula> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.imp()?;
            return Ok(FoFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<FoFormula> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Bar {
            self.next();
            let rhs = self.and()?;
            lhs = FoFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<FoFormula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.next();
            let rhs = self.unary()?;
            lhs = FoFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FoFormula> {
        match self.peek() {
            Tok::Tilde => {
                self.next();
                Ok(FoFormula::not(self.unary()?))
            }
            Tok::LParen => {
                self.next();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<FoFormula> {
        if let (Tok::Ident(name), Tok::LParen) = (self.peek().clone(), self.peek_at(1)) {
            if let Some(arity) = self.sig.predicate_arity(&name) {
                if !self.bound.contains(&name) {
                    let here = self.pos;
                    self.next();
                    let args = self.arguments()?;
                    if args.len() != arity {
                        self.pos = here;
                        return Err(self.arity_error(&name, arity, args.len()));
                    }
                    return Ok(FoFormula::Atom(name, args));
                }
            }
        }
        let lhs = self.term()?;
        if *self.peek() != Tok::Equals {
            return Err(self.error_here(format!("expected `=` after term `{lhs}`, found {}", self.peek().describe())));
        }
        self.next();
        let rhs = self.term()?;
        Ok(FoFormula::Eq(lhs, rhs))
    }

    fn arguments(&mut self) -> Result<Vec<Term>> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.next();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn arity_error(&self, symbol: &str, expected: usize, found: usize) -> Error {
        let s = &self.toks[self.pos];
        Error::Parse {
            line: s.line,
            column: s.column,
            message: Error::ArityMismatch { symbol: symbol.into(), expected, found }.to_string(),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let here = self.pos;
        let name = self.ident()?;
        if *self.peek() == Tok::LParen {
            let arity = match self.sig.function_arity(&name) {
                Some(a) => a,
                None if self.sig.predicate_arity(&name).is_some() => {
                    self.pos = here;
                    return Err(self.error_here(format!("predicate `{name}` used as a term")));
                }
                None => {
                    self.pos = here;
                    return Err(self.error_here(format!("undeclared function `{name}`")));
                }
            };
            let args = self.arguments()?;
            if args.len() != arity {
                self.pos = here;
                return Err(self.arity_error(&name, arity, args.len()));
            }
            return Ok(Term::App(name, args));
        }
        if self.bound.contains(&name) {
            return Ok(Term::Var(name));
        }
        match self.sig.function_arity(&name) {
            Some(0) => Ok(Term::constant(name)),
            Some(k) => {
                self.pos = here;
                Err(self.arity_error(&name, k, 0))
            }
            None if self.sig.predicate_arity(&name).is_some() => {
                self.pos = here;
                Err(self.error_here(format!("predicate `{name}` used as a term")))
            }
            // Unbound and undeclared: a free variable. Theories reject these.
            None => Ok(Term::Var(name)),
        }
    }

    fn symbol_list(&mut self, mut add: impl FnMut(String, usize) -> Result<()>) -> Result<()> {
        loop {
            let here = self.pos;
            let name = self.ident()?;
            self.expect(Tok::Slash)?;
            let arity = match self.next() {
                Tok::Nat(n) => n,
                other => {
                    self.pos -= 1;
                    return Err(self.error_here(format!("expected arity, found {}", other.describe())));
                }
            };
            if let Err(e) = add(name, arity) {
                self.pos = here;
                return Err(self.error_here(e.to_string()));
            }
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::Semi)
    }
}

fn signature_block(toks: &[Spanned]) -> Result<(FoSignature, usize)> {
    let empty = FoSignature::new();
    let mut p = Parser { toks: toks.to_vec(), pos: 0, sig: &empty, bound: Vec::new() };
    let mut sig = FoSignature::new();
    if !p.is_keyword("sig") {
        return Ok((sig, 0));
    }
    p.next();
    p.expect(Tok::LBrace)?;
    let (mut seen_functions, mut seen_predicates) = (false, false);
    loop {
        if p.is_keyword("functions") && !seen_functions {
            seen_functions = true;
            p.next();
            p.expect(Tok::Colon)?;
            p.symbol_list(|name, arity| sig.add_function(name, arity))?;
        } else if p.is_keyword("predicates") && !seen_predicates {
            seen_predicates = true;
            p.next();
            p.expect(Tok::Colon)?;
            p.symbol_list(|name, arity| sig.add_predicate(name, arity))?;
        } else {
            break;
        }
    }
    p.expect(Tok::RBrace)?;
    Ok((sig, p.pos))
}

/// Parses a theory file held in raw bytes.
pub fn parse_theory_bytes(bytes: &[u8]) -> Result<TheoryPresentation> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1,
        column: 1,
        message: format!("input is not UTF-8: {e}"),
    })?;
    parse_theory(text)
}

pub fn parse_theory(text: &str) -> Result<TheoryPresentation> {
    let toks = lex(text)?;
    let (sig, start) = signature_block(&toks)?;
    let mut p = Parser { toks, pos: start, sig: &sig, bound: Vec::new() };
    p.expect_keyword("axioms")?;
    p.expect(Tok::LBrace)?;
    let mut axioms = Vec::new();
    while *p.peek() != Tok::RBrace {
        axioms.push(sentence(&mut p)?);
        p.expect(Tok::Semi)?;
    }
    p.expect(Tok::RBrace)?;
    let mut goal = None;
    if p.is_keyword("goal") {
        p.next();
        p.expect(Tok::Colon)?;
        goal = Some(sentence(&mut p)?);
        p.expect(Tok::Semi)?;
    }
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    TheoryPresentation::new(sig, axioms, goal)
}

fn sentence(p: &mut Parser<'_>) -> Result<FoFormula> {
    let here = p.pos;
    let f = p.formula()?;
    if let Some(x) = f.free_vars().into_iter().next() {
        let s = &p.toks[here];
        return Err(Error::Parse {
            line: s.line,
            column: s.column,
            message: Error::FreeVariable(x).to_string(),
        });
    }
    Ok(f)
}

/// Parses a single formula over `sig`. Undeclared, unbound identifiers in
/// term position become free variables.
pub fn parse_formula(text: &str, sig: &FoSignature) -> Result<FoFormula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, sig, bound: Vec::new() };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}
