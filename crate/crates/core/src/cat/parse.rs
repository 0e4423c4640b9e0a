//! Parser for `.cat` model files.

use super::{Axiom, AxiomKind, BaseRel, Definition, EventSet, MemoryModel, RelTerm, PRELUDE};
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("undefined relation `{0}`")]
    Undefined(String),
    #[error("relation `{0}` defined twice")]
    Duplicate(String),
    #[error("axiom label `{0}` used twice")]
    DuplicateLabel(String),
    #[error("unknown built-in model `{0}`")]
    UnknownModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

const SYMS: &[&str] = &[":=", "^-1", "^+", "^*", "^?", "|", "&", "\\", ";", "(", ")", "*", "0"];

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, CatError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").split("//").next().unwrap_or("");
        let mut rest = line;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            let col = line.len() - rest.len() + 1;
            let c = rest.chars().next().unwrap();
            if c.is_ascii_alphabetic() || c == '_' {
                // `-` may appear inside names (`prop-base`) when followed by a letter.
                let b = rest.as_bytes();
                let mut end = 1;
                while end < b.len()
                    && (b[end].is_ascii_alphanumeric()
                        || b[end] == b'_'
                        || (b[end] == b'-' && end + 1 < b.len() && b[end + 1].is_ascii_alphabetic()))
                {
                    end += 1;
                }
                out.push((Tok::Ident(rest[..end].to_string()), ln + 1, col));
                rest = &rest[end..];
            } else if let Some(s) = SYMS.iter().find(|s| rest.starts_with(**s)) {
                out.push((Tok::Sym(s), ln + 1, col));
                rest = &rest[s.len()..];
            } else {
                return Err(CatError::Syntax { line: ln + 1, col, message: format!("unexpected character `{c}`") });
            }
        }
    }
    let (l, c) = out.last().map(|t| (t.1, t.2 + 1)).unwrap_or((1, 1));
    out.push((Tok::Eof, l, c));
    Ok(out)
}

const RESERVED: &[&str] = &["model", "acyclic", "irreflexive", "as", "id", "EV", "W", "R"];

struct P {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl P {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, CatError> {
        let (_, line, col) = self.toks[self.pos];
        Err(CatError::Syntax { line, col, message: message.into() })
    }

    fn found(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), CatError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.found()))
        }
    }

    fn kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(x) if x == k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, CatError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected {what}, found {}", self.found())),
        }
    }

    fn union(&mut self) -> Result<RelTerm, CatError> {
        let mut t = self.inter()?;
        while self.eat("|") {
            t = RelTerm::union(t, self.inter()?);
        }
        Ok(t)
    }

    fn inter(&mut self) -> Result<RelTerm, CatError> {
        let mut t = self.diff()?;
        while self.eat("&") {
            t = RelTerm::inter(t, self.diff()?);
        }
        Ok(t)
    }

    fn diff(&mut self) -> Result<RelTerm, CatError> {
        let mut t = self.seq()?;
        while self.eat("\\") {
            t = RelTerm::diff(t, self.seq()?);
        }
        Ok(t)
    }

    fn seq(&mut self) -> Result<RelTerm, CatError> {
        let mut t = self.postfix()?;
        while self.eat(";") {
            t = RelTerm::seq(t, self.postfix()?);
        }
        Ok(t)
    }

    fn postfix(&mut self) -> Result<RelTerm, CatError> {
        let mut t = self.primary()?;
        loop {
            t = if self.eat("^-1") {
                RelTerm::Inverse(Box::new(t))
            } else if self.eat("^+") {
                RelTerm::Plus(Box::new(t))
            } else if self.eat("^*") {
                RelTerm::Star(Box::new(t))
            } else if self.eat("^?") {
                RelTerm::Opt(Box::new(t))
            } else {
                return Ok(t);
            };
        }
    }

    fn set(&mut self) -> Result<EventSet, CatError> {
        let s = match self.peek() {
            Tok::Ident(x) if x == "EV" => EventSet::Ev,
            Tok::Ident(x) if x == "W" => EventSet::W,
            Tok::Ident(x) if x == "R" => EventSet::R,
            _ => return self.err(format!("expected EV, W or R, found {}", self.found())),
        };
        self.bump();
        Ok(s)
    }

    fn primary(&mut self) -> Result<RelTerm, CatError> {
        if self.eat("(") {
            let t = self.union()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.eat("0") {
            return Ok(RelTerm::Empty);
        }
        if self.kw("id") {
            self.expect("(")?;
            let s = self.set()?;
            self.expect(")")?;
            return Ok(RelTerm::Id(s));
        }
        if matches!(self.peek(), Tok::Ident(x) if x == "EV" || x == "W" || x == "R") {
            let a = self.set()?;
            self.expect("*")?;
            let b = self.set()?;
            return Ok(RelTerm::Cart(a, b));
        }
        let name = self.ident("relation")?;
        Ok(match BaseRel::from_name(&name) {
            Some(b) => RelTerm::Base(b),
            None => RelTerm::Name(name),
        })
    }
}

/// Parse a model file, inject the prelude and check name resolution.
pub fn parse_cat(text: &str) -> Result<MemoryModel, CatError> {
    let mut p = P { toks: lex(text)?, pos: 0 };
    if !p.kw("model") {
        return p.err(format!("expected `model`, found {}", p.found()));
    }
    let name = p.ident("model name")?;
    let mut definitions: Vec<Definition> = Vec::new();
    let mut axioms = Vec::new();
    loop {
        if *p.peek() == Tok::Eof {
            break;
        }
        let kind = if p.kw("acyclic") {
            Some(AxiomKind::Acyclic)
        } else if p.kw("irreflexive") {
            Some(AxiomKind::Irreflexive)
        } else {
            None
        };
        if let Some(kind) = kind {
            let term = p.union()?;
            let label = if p.kw("as") { p.ident("axiom label")? } else { format!("ax{}", axioms.len()) };
            axioms.push(Axiom { kind, term, label });
            continue;
        }
        if !matches!(p.peek2(), Tok::Sym(":=")) {
            return p.err(format!("expected definition or axiom, found {}", p.found()));
        }
        let n = p.ident("relation name")?;
        if BaseRel::from_name(&n).is_some() {
            p.pos -= 1;
            return p.err(format!("cannot redefine base relation `{n}`"));
        }
        p.expect(":=")?;
        let term = p.union()?;
        if definitions.iter().any(|d| d.name == n) {
            return Err(CatError::Duplicate(n));
        }
        definitions.push(Definition { name: n, term, prelude: false });
    }
    let user: HashSet<String> = definitions.iter().map(|d| d.name.clone()).collect();
    let mut prelude = Vec::new();
    for (n, body) in PRELUDE {
        if !user.contains(*n) {
            let term = P { toks: lex(body)?, pos: 0 }.union()?;
            prelude.push(Definition { name: n.to_string(), term, prelude: true });
        }
    }
    prelude.extend(definitions);
    let m = MemoryModel { name, definitions: prelude, axioms };
    let defined: HashSet<&str> = m.definitions.iter().map(|d| d.name.as_str()).collect();
    let mut refs = BTreeSet::new();
    for d in &m.definitions {
        d.term.names(&mut refs);
    }
    for a in &m.axioms {
        a.term.names(&mut refs);
    }
    if let Some(u) = refs.iter().find(|r| !defined.contains(r.as_str())) {
        return Err(CatError::Undefined(u.clone()));
    }
    let mut labels = HashSet::new();
    for a in &m.axioms {
        if !labels.insert(&a.label) {
            return Err(CatError::DuplicateLabel(a.label.clone()));
        }
    }
    Ok(m)
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}", self.name)?;
        for d in self.definitions.iter().filter(|d| !d.prelude) {
            writeln!(f, "{} := {}", d.name, d.term)?;
        }
        for a in &self.axioms {
            let k = match a.kind {
                AxiomKind::Acyclic => "acyclic",
                AxiomKind::Irreflexive => "irreflexive",
            };
            writeln!(f, "{k} {} as {}", a.term, a.label)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model() {
        let m = parse_cat("model empty").unwrap();
        assert!(m.axioms.is_empty());
        assert_eq!(m.definitions.len(), PRELUDE.len());
    }

    #[test]
    fn precedence() {
        let m = parse_cat("model m\na := po ; rf^-1 \\ co & loc | int").unwrap();
        let expect = RelTerm::union(
            RelTerm::inter(
                RelTerm::diff(
                    RelTerm::seq(RelTerm::Base(BaseRel::Po), RelTerm::Inverse(Box::new(RelTerm::Base(BaseRel::Rf)))),
                    RelTerm::Base(BaseRel::Co),
                ),
                RelTerm::Base(BaseRel::Loc),
            ),
            RelTerm::Base(BaseRel::Int),
        );
        assert_eq!(m.definition("a").unwrap(), &expect);
    }

    #[test]
    fn cartesian_and_identity() {
        let m = parse_cat("model m\na := (W*R & po) | id(EV) | 0 | rf^*^?").unwrap();
        assert_eq!(m.definition("a").unwrap().to_string(), "W*R & po | id(EV) | 0 | rf^*^?");
    }

    #[test]
    fn errors() {
        assert_eq!(parse_cat("model m\nacyclic foo as x"), Err(CatError::Undefined("foo".into())));
        assert_eq!(parse_cat("model m\na := po\na := rf"), Err(CatError::Duplicate("a".into())));
        assert_eq!(
            parse_cat("model m\nacyclic po as x\nirreflexive rf as x"),
            Err(CatError::DuplicateLabel("x".into()))
        );
        assert!(matches!(parse_cat("model m\na := po |"), Err(CatError::Syntax { line: 2, .. })));
        assert!(matches!(parse_cat("model m\npo := rf"), Err(CatError::Syntax { .. })));
    }

    #[test]
    fn shadowed_prelude() {
        let m = parse_cat("model m\nfr := co\nacyclic fre as a").unwrap();
        assert_eq!(m.definitions.iter().filter(|d| d.name == "fr").count(), 1);
        assert!(!m.definitions.iter().find(|d| d.name == "fr").unwrap().prelude);
    }

    #[test]
    fn model_display_round_trip() {
        for id in super::super::BUILTIN_IDS {
            let m = super::super::builtin_model(id).unwrap();
            assert_eq!(parse_cat(&m.to_string()).unwrap(), m);
        }
    }
}
