//! State predicates and the temporal formula fragment.
//!
//! Predicate syntax: `label | !p | p & p | p "|" p | (p)`. Formula
//! syntax: `AG p`, `A[p U q]`, `EF p`, and `AG (p -> A[q U r])`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Boolean combination of label literals, total on any label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatePredicate {
    Lit(String),
    Not(Box<StatePredicate>),
    And(Box<StatePredicate>, Box<StatePredicate>),
    Or(Box<StatePredicate>, Box<StatePredicate>),
}

impl StatePredicate {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = PredParser { text: text.as_bytes(), pos: 0 };
        let pred = p.or_expr()?;
        p.skip_ws();
        if p.pos != p.text.len() {
            return Err(Error::Syntax { pos: p.pos, msg: "trailing input".to_string() });
        }
        Ok(pred)
    }

    /// Evaluates against a label set. A literal naming an unknown label
    /// is false.
    pub fn eval(&self, labels: &BTreeSet<String>) -> bool {
        match self {
            StatePredicate::Lit(name) => labels.contains(name),
            StatePredicate::Not(p) => !p.eval(labels),
            StatePredicate::And(a, b) => a.eval(labels) && b.eval(labels),
            StatePredicate::Or(a, b) => a.eval(labels) || b.eval(labels),
        }
    }

    pub fn literals(&self) -> BTreeSet<&str> {
        match self {
            StatePredicate::Lit(name) => BTreeSet::from([name.as_str()]),
            StatePredicate::Not(p) => p.literals(),
            StatePredicate::And(a, b) | StatePredicate::Or(a, b) => {
                let mut out = a.literals();
                out.extend(b.literals());
                out
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            StatePredicate::Or(_, _) => 1,
            StatePredicate::And(_, _) => 2,
            _ => 3,
        }
    }

    fn write(&self, out: &mut String) {
        let child = |c: &StatePredicate, min: u8, out: &mut String| {
            if c.precedence() < min {
                out.push('(');
                c.write(out);
                out.push(')');
            } else {
                c.write(out);
            }
        };
        match self {
            StatePredicate::Lit(name) => out.push_str(name),
            StatePredicate::Not(p) => {
                out.push('!');
                child(p, 3, out);
            }
            StatePredicate::And(a, b) => {
                child(a, 2, out);
                out.push_str(" & ");
                child(b, 2, out);
            }
            StatePredicate::Or(a, b) => {
                child(a, 1, out);
                out.push_str(" | ");
                child(b, 1, out);
            }
        }
    }
}

impl fmt::Display for StatePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write(&mut out);
        f.write_str(&out)
    }
}

struct PredParser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> PredParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn or_expr(&mut self) -> Result<StatePredicate> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = StatePredicate::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<StatePredicate> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = StatePredicate::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<StatePredicate> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(StatePredicate::Not(Box::new(self.unary()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(Error::Syntax { pos: self.pos, msg: "expected `)`".to_string() })
                }
            }
            Some(c) if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.text.len()
                    && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Ok(StatePredicate::Lit(
                    std::str::from_utf8(&self.text[start..self.pos]).unwrap().to_string(),
                ))
            }
            _ => Err(Error::Syntax { pos: self.pos, msg: "expected a predicate".to_string() }),
        }
    }

    // used by the formula parser for `->`, `U`, `A[`, `]`
    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        let bytes = word.as_bytes();
        if self.text[self.pos..].starts_with(bytes) {
            let after = self.pos + bytes.len();
            let boundary = self
                .text
                .get(after)
                .map(|c| !c.is_ascii_alphanumeric() && *c != b'_')
                .unwrap_or(true);
            if boundary {
                self.pos = after;
                return true;
            }
        }
        false
    }
}

/// The supported temporal fragment, evaluated from all initial states.
/// `AgImpliesAu(p, q, r)` reads `AG (p -> A[q U r])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemporalFormula {
    Ag(StatePredicate),
    Au(StatePredicate, StatePredicate),
    Ef(StatePredicate),
    AgImpliesAu(StatePredicate, StatePredicate, StatePredicate),
}

impl TemporalFormula {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = PredParser { text: text.as_bytes(), pos: 0 };
        let formula = if p.eat_word("AG") {
            // either `AG pred` or `AG (pred -> A[q U r])`
            let save = p.pos;
            if p.peek() == Some(b'(') {
                p.pos += 1;
                let trigger = p.or_expr()?;
                if p.eat("->") {
                    let (hold, release) = parse_au_body(&mut p)?;
                    if p.peek() != Some(b')') {
                        return Err(Error::Syntax { pos: p.pos, msg: "expected `)`".to_string() });
                    }
                    p.pos += 1;
                    TemporalFormula::AgImpliesAu(trigger, hold, release)
                } else {
                    // a plain parenthesized predicate
                    p.pos = save;
                    TemporalFormula::Ag(p.unary()?)
                }
            } else {
                TemporalFormula::Ag(p.or_expr()?)
            }
        } else if p.eat_word("EF") {
            TemporalFormula::Ef(p.or_expr()?)
        } else {
            let (hold, release) = parse_au_body(&mut p)?;
            TemporalFormula::Au(hold, release)
        };
        p.skip_ws();
        if p.pos != p.text.len() {
            return Err(Error::Syntax { pos: p.pos, msg: "trailing input".to_string() });
        }
        Ok(formula)
    }

    pub fn literals(&self) -> BTreeSet<&str> {
        match self {
            TemporalFormula::Ag(p) | TemporalFormula::Ef(p) => p.literals(),
            TemporalFormula::Au(p, q) => {
                let mut out = p.literals();
                out.extend(q.literals());
                out
            }
            TemporalFormula::AgImpliesAu(p, q, r) => {
                let mut out = p.literals();
                out.extend(q.literals());
                out.extend(r.literals());
                out
            }
        }
    }
}

fn parse_au_body(p: &mut PredParser<'_>) -> Result<(StatePredicate, StatePredicate)> {
    if !p.eat_word("A") || !p.eat("[") {
        return Err(Error::Syntax { pos: p.pos, msg: "expected `A[p U q]`".to_string() });
    }
    let hold = p.or_expr()?;
    if !p.eat_word("U") {
        return Err(Error::Syntax { pos: p.pos, msg: "expected `U`".to_string() });
    }
    let release = p.or_expr()?;
    if !p.eat("]") {
        return Err(Error::Syntax { pos: p.pos, msg: "expected `]`".to_string() });
    }
    Ok((hold, release))
}

impl fmt::Display for TemporalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalFormula::Ag(p) => write!(f, "AG ({p})"),
            TemporalFormula::Au(p, q) => write!(f, "A[{p} U {q}]"),
            TemporalFormula::Ef(p) => write!(f, "EF ({p})"),
            TemporalFormula::AgImpliesAu(p, q, r) => write!(f, "AG ({p} -> A[{q} U {r}])"),
        }
    }
}
