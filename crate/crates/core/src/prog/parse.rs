//! Recursive-descent parser for `.lit` programs.

use super::{CmpOp, Expr, FenceKind, Instr, InstrKind, Pred, Program, Thread};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

// Longest match first.
const SYMBOLS: &[(&str, &str)] = &[
    ("/\\", "&&"),
    ("\\/", "||"),
    ("&&", "&&"),
    ("||", "||"),
    ("∧", "&&"),
    ("∨", "||"),
    ("¬", "!"),
    ("≠", "!="),
    ("≤", "<="),
    ("≥", ">="),
    ("×", "*"),
    ("←", "<-"),
    ("<-", "<-"),
    (":=", ":="),
    ("<=", "<="),
    (">=", ">="),
    ("!=", "!="),
    ("==", "="),
    ("=", "="),
    ("<", "<"),
    (">", ">"),
    ("!", "!"),
    ("~", "!"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    (";", ";"),
    ("(", "("),
    (")", ")"),
    ("{", "{"),
    ("}", "}"),
    ("@", "@"),
    (":", ":"),
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut rest = line;
        let col_of = |rest: &str| line[..line.len() - rest.len()].chars().count() + 1;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            let col = col_of(rest);
            let c = rest.chars().next().unwrap();
            if c.is_ascii_alphabetic() || c == '_' {
                let end = rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
                out.push(Token { tok: Tok::Ident(rest[..end].to_string()), line: ln + 1, col });
                rest = &rest[end..];
            } else if c.is_ascii_digit() {
                let end = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
                let v = rest[..end].parse::<i64>().map_err(|e| ParseError {
                    line: ln + 1,
                    col,
                    message: format!("bad integer: {e}"),
                })?;
                out.push(Token { tok: Tok::Int(v), line: ln + 1, col });
                rest = &rest[end..];
            } else if let Some((pat, sym)) = SYMBOLS.iter().find(|(p, _)| rest.starts_with(p)) {
                out.push(Token { tok: Tok::Sym(sym), line: ln + 1, col });
                rest = &rest[pat.len()..];
            } else {
                return Err(ParseError { line: ln + 1, col, message: format!("unexpected character `{c}`") });
            }
        }
    }
    let (line, col) = out.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "program", "init", "thread", "if", "else", "while", "skip", "mfence", "sync", "lwsync", "isync", "true", "false",
];

pub(crate) fn is_register(name: &str) -> bool {
    name.starts_with('r') && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_location(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_lowercase())
        && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && !KEYWORDS.contains(&name)
}

/// Store whose source is still a constant, before desugaring.
const CONST_STORE: &str = "\0const";

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Operands may be locations or `tid:reg` (final-state assertions).
    pred_state_mode: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, col: t.col, message: message.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if *self.peek() == Tok::Sym(leak(s)) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected {what}, found {}", self.describe())),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_sym("-");
        match self.bump() {
            Tok::Int(v) => Ok(if neg { -v } else { v }),
            _ => {
                self.pos -= 1;
                self.err(format!("expected integer, found {}", self.describe()))
            }
        }
    }

    fn location(&mut self) -> Result<String, ParseError> {
        let l = self.ident("location")?;
        if !is_location(&l) {
            self.pos -= 1;
            return self.err(format!("`{l}` is not a valid location name"));
        }
        Ok(l)
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        self.expect_kw("program")?;
        let name = self.ident("program name")?;
        let mut p = Program::new(&name);
        while self.eat_kw("init") {
            let loc = self.location()?;
            self.expect_sym("=")?;
            let v = self.int()?;
            p.init.insert(loc, v);
            self.eat_sym(";");
        }
        while self.is_kw("thread") {
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            self.bump();
            let tid = self.ident("thread id")?;
            if p.threads.iter().any(|t| t.tid == tid) {
                return Err(ParseError { line, col, message: format!("duplicate thread id `{tid}`") });
            }
            let body = self.block_body(true)?;
            p.threads.push(Thread { tid, body });
        }
        if *self.peek() != Tok::Eof {
            return self.err(format!("expected `thread`, found {}", self.describe()));
        }
        if p.threads.is_empty() {
            return self.err("program has no threads");
        }
        Ok(p)
    }

    /// Statements separated by `;` up to `}`, `thread` or end of input.
    fn block_body(&mut self, top: bool) -> Result<Instr, ParseError> {
        let mut items = Vec::new();
        loop {
            let at_end = match self.peek() {
                Tok::Eof => true,
                Tok::Sym("}") => true,
                Tok::Ident(s) if top && s == "thread" => true,
                _ => false,
            };
            if at_end {
                break;
            }
            let (stmt, braced) = self.stmt()?;
            items.push(stmt);
            if self.eat_sym(";") || braced {
                continue;
            }
            let end = match self.peek() {
                Tok::Eof | Tok::Sym("}") => true,
                Tok::Ident(s) => top && s == "thread",
                _ => false,
            };
            if !end {
                return self.err(format!("expected `;`, found {}", self.describe()));
            }
        }
        Ok(Instr::seq(items))
    }

    fn braced(&mut self) -> Result<Instr, ParseError> {
        self.expect_sym("{")?;
        let body = self.block_body(false)?;
        self.expect_sym("}")?;
        Ok(body)
    }

    /// Returns the statement and whether it ended with a closing brace.
    fn stmt(&mut self) -> Result<(Instr, bool), ParseError> {
        if self.eat_kw("skip") {
            return Ok((Instr::skip(), false));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let cond = self.pred()?;
            self.expect_sym(")")?;
            let then = self.braced()?;
            let els = if self.eat_kw("else") {
                if self.is_kw("if") {
                    self.stmt()?.0
                } else {
                    self.braced()?
                }
            } else {
                Instr::skip()
            };
            return Ok((Instr::if_(cond, then, els), true));
        }
        if self.eat_kw("while") {
            self.expect_sym("(")?;
            let cond = self.pred()?;
            self.expect_sym(")")?;
            let body = self.braced()?;
            return Ok((Instr::new(InstrKind::While { cond, body: Box::new(body) }), true));
        }
        let mut atom = self.atom()?;
        if self.eat_sym("@") {
            let ok = matches!(self.peek(), Tok::Ident(s) if s == "hl");
            if !ok {
                return self.err("expected `hl` after `@`");
            }
            self.bump();
            self.expect_sym("=")?;
            atom.hl = Some(self.int()?);
        }
        Ok((atom, false))
    }

    fn atom(&mut self) -> Result<Instr, ParseError> {
        for f in FenceKind::ALL {
            if self.eat_kw(f.name()) {
                return Ok(Instr::new(InstrKind::Fence(f)));
            }
        }
        let name = self.ident("statement")?;
        match self.peek().clone() {
            Tok::Sym("=") => {
                if !is_register(&name) {
                    self.pos -= 1;
                    return self.err(format!("`{name}` is not a register (registers start with `r`)"));
                }
                self.bump();
                let expr = self.expr()?;
                Ok(Instr::local(&name, expr))
            }
            Tok::Sym("<-") => {
                if !is_register(&name) {
                    self.pos -= 1;
                    return self.err(format!("`{name}` is not a register (registers start with `r`)"));
                }
                self.bump();
                let loc = self.location()?;
                Ok(Instr::load(&name, &loc))
            }
            Tok::Sym(":=") => {
                if !is_location(&name) {
                    self.pos -= 1;
                    return self.err(format!("`{name}` is not a valid location name"));
                }
                self.bump();
                match self.peek().clone() {
                    Tok::Ident(r) if is_register(&r) => {
                        self.bump();
                        Ok(Instr::store(&name, &r))
                    }
                    Tok::Int(_) | Tok::Sym("-") => {
                        let v = self.int()?;
                        Ok(Instr::new(InstrKind::Local { reg: CONST_STORE.into(), expr: Expr::Const(v) })
                            .with_store_target(&name))
                    }
                    _ => self.err(format!("expected register or integer, found {}", self.describe())),
                }
            }
            _ => self.err(format!("expected `=`, `<-` or `:=` after `{name}`, found {}", self.describe())),
        }
    }

    fn pred(&mut self) -> Result<Pred, ParseError> {
        let mut lhs = self.pred_and()?;
        while self.eat_sym("||") {
            lhs = Pred::or(lhs, self.pred_and()?);
        }
        Ok(lhs)
    }

    fn pred_and(&mut self) -> Result<Pred, ParseError> {
        let mut lhs = self.pred_atom()?;
        while self.eat_sym("&&") {
            lhs = Pred::and(lhs, self.pred_atom()?);
        }
        Ok(lhs)
    }

    fn pred_atom(&mut self) -> Result<Pred, ParseError> {
        if self.eat_sym("!") {
            return Ok(Pred::Not(Box::new(self.pred_atom()?)));
        }
        if self.eat_kw("true") {
            return Ok(Pred::Bool(true));
        }
        if self.eat_kw("false") {
            return Ok(Pred::Bool(false));
        }
        if *self.peek() == Tok::Sym("(") {
            // Either a parenthesised predicate or a parenthesised expression operand.
            let save = self.pos;
            self.bump();
            if let Ok(p) = self.pred() {
                if self.eat_sym(")") && !self.at_cmp() {
                    return Ok(p);
                }
            }
            self.pos = save;
        }
        let a = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.err(format!("expected comparison, found {}", self.describe())),
        };
        self.bump();
        let b = self.expr()?;
        Ok(Pred::Cmp(op, a, b))
    }

    fn at_cmp(&self) -> bool {
        matches!(self.peek(), Tok::Sym("=" | "!=" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*"))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym("+") {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_sym("-") {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.eat_sym("*") {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(v) => {
                        self.bump();
                        Ok(Expr::Const(-v))
                    }
                    _ => Ok(Expr::Sub(Box::new(Expr::Const(0)), Box::new(self.factor()?))),
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                if self.pred_state_mode {
                    if self.eat_sym(":") {
                        let reg = self.ident("register")?;
                        return Ok(Expr::Reg(format!("{name}:{reg}")));
                    }
                    return Ok(Expr::Reg(name));
                }
                if !is_register(&name) {
                    self.pos -= 1;
                    return self.err(format!("`{name}` is not a register"));
                }
                Ok(Expr::Reg(name))
            }
            _ => self.err(format!("expected expression, found {}", self.describe())),
        }
    }
}

fn leak(s: &str) -> &'static str {
    SYMBOLS.iter().map(|(_, v)| *v).find(|v| *v == s).expect("known symbol")
}

impl Instr {
    /// Placeholder for `loc := const` until registers are known.
    fn with_store_target(self, loc: &str) -> Instr {
        Instr::seq(vec![self, Instr::store(loc, CONST_STORE)])
    }
}

/// Replace constant-store placeholders by fresh registers `r_c<n>`.
fn desugar(thread: &mut Thread) {
    let used: BTreeSet<String> = super::Program::registers(thread);
    let mut counter = 0;
    let mut fresh = || loop {
        let name = format!("r_c{counter}");
        counter += 1;
        if !used.contains(&name) {
            return name;
        }
    };
    let mut pending: Option<String> = None;
    thread.body.walk_mut(&mut |i| match &mut i.kind {
        InstrKind::Local { reg, .. } if reg == CONST_STORE => {
            let r = fresh();
            *reg = r.clone();
            pending = Some(r);
        }
        InstrKind::Store { reg, .. } if reg == CONST_STORE => {
            *reg = pending.take().expect("constant store follows its staging assignment");
        }
        _ => {}
    });
    // The `@hl` label of a constant store belongs to the store itself.
    thread.body.walk_mut(&mut |i| {
        if let InstrKind::Seq(a, b) = &mut i.kind {
            if let (Some(h), InstrKind::Local { .. }, InstrKind::Store { .. }) = (i.hl, &a.kind, &b.kind) {
                b.hl = Some(h);
                i.hl = None;
            }
        }
    });
}

/// Parse a `.lit` program, desugar constant stores and number instructions.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, pred_state_mode: false };
    let mut prog = p.program()?;
    for t in &mut prog.threads {
        desugar(t);
    }
    prog.renumber();
    Ok(prog)
}

/// Parse a final-state predicate such as `x=1 /\ t0:r0=0`. Locations and
/// thread-qualified registers appear as `Expr::Reg` with their written name.
pub fn parse_pred(text: &str) -> Result<Pred, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, pred_state_mode: true };
    let pred = p.pred()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", p.describe()));
    }
    Ok(pred)
}
