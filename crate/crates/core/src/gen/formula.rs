use crate::prog::{CmpOp, Expr, Pred};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Propositional formula over named Boolean variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("formula error at byte {pos}: {message}")]
pub struct FormulaError {
    pub pos: usize,
    pub message: String,
}

impl Formula {
    pub fn var(name: &str) -> Self {
        Formula::Var(name.into())
    }

    pub fn negate(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// Disjunction of the minterms whose bit is set in `table`. Bit `i`
    /// corresponds to the assignment giving `vars[j]` the value of bit `j` of `i`.
    pub fn from_truth_table(vars: &[String], table: u64) -> Self {
        assert!(vars.len() <= 6, "truth table wider than 64 rows");
        let mut terms = Vec::new();
        for row in 0..1u64 << vars.len() {
            if table >> row & 1 == 1 {
                let lits = vars.iter().enumerate().map(|(j, v)| if row >> j & 1 == 1 { Formula::var(v) } else { Formula::negate(Formula::var(v)) });
                terms.push(lits.reduce(Formula::and).unwrap_or(Formula::Const(true)));
            }
        }
        terms.into_iter().reduce(Formula::or).unwrap_or(Formula::Const(false))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Not(a) => a.collect(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn eval(&self, value: &impl Fn(&str) -> bool) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(v) => value(v),
            Formula::Not(a) => !a.eval(value),
            Formula::And(a, b) => a.eval(value) && b.eval(value),
            Formula::Or(a, b) => a.eval(value) || b.eval(value),
        }
    }

    /// Program predicate that reads variable `v` as register `reg(v)` holding 1.
    pub fn to_pred(&self, reg: &impl Fn(&str) -> String) -> Pred {
        match self {
            Formula::Const(b) => Pred::Bool(*b),
            Formula::Var(v) => Pred::Cmp(CmpOp::Eq, Expr::Reg(reg(v)), Expr::Const(1)),
            Formula::Not(a) => Pred::Not(Box::new(a.to_pred(reg))),
            Formula::And(a, b) => Pred::and(a.to_pred(reg), b.to_pred(reg)),
            Formula::Or(a, b) => Pred::or(a.to_pred(reg), b.to_pred(reg)),
        }
    }

    /// Parse `!`, `&`, `|`, `->` and `=` (equivalence), loosest last.
    /// `~`, `&&`, `||` and `<->` are accepted as spellings.
    pub fn parse(text: &str) -> Result<Formula, FormulaError> {
        let mut p = FormulaParser { text, pos: 0 };
        let f = p.iff()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(f)
    }
}

struct FormulaParser<'a> {
    text: &'a str,
    pos: usize,
}

impl FormulaParser<'_> {
    fn error(&self, message: &str) -> FormulaError {
        FormulaError { pos: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, tokens: &[&str]) -> bool {
        self.skip_ws();
        for t in tokens {
            if self.text[self.pos..].starts_with(t) {
                self.pos += t.len();
                return true;
            }
        }
        false
    }

    fn iff(&mut self) -> Result<Formula, FormulaError> {
        let mut a = self.implies()?;
        while self.eat(&["<->", "="]) {
            let b = self.implies()?;
            a = Formula::or(Formula::and(a.clone(), b.clone()), Formula::and(Formula::negate(a), Formula::negate(b)));
        }
        Ok(a)
    }

    fn implies(&mut self) -> Result<Formula, FormulaError> {
        let a = self.or()?;
        if self.eat(&["->"]) {
            let b = self.implies()?;
            return Ok(Formula::or(Formula::negate(a), b));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut a = self.and()?;
        while self.eat(&["||", "|"]) {
            a = Formula::or(a, self.and()?);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut a = self.unary()?;
        while self.eat(&["&&", "&"]) {
            a = Formula::and(a, self.unary()?);
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.eat(&["!", "~"]) {
            return Ok(Formula::negate(self.unary()?));
        }
        if self.eat(&["("]) {
            let f = self.iff()?;
            if !self.eat(&[")"]) {
                return Err(self.error("expected `)`"));
            }
            return Ok(f);
        }
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        let word = &rest[..len];
        if word.is_empty() {
            return Err(self.error("expected a variable, `true`, `false`, `!` or `(`"));
        }
        if !word.starts_with(|c: char| c.is_ascii_lowercase()) || !word.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
            return Err(self.error(&format!("`{word}` is not a variable name (lowercase letters, digits, `_`)")));
        }
        self.pos += len;
        Ok(match word {
            "true" => Formula::Const(true),
            "false" => Formula::Const(false),
            _ => Formula::var(word),
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Var(v) => f.write_str(v),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}
