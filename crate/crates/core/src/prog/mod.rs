//! Thread-structured while-programs: AST, validation and loop unrolling.

mod parse;
mod print;

pub use parse::{parse_pred, parse_program, ParseError};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

/// Instruction id, unique across a program.
pub type Iid = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    /// Explicit initial values; every other location starts at 0.
    pub init: BTreeMap<String, i64>,
    pub threads: Vec<Thread>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub tid: String,
    pub body: Instr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instr {
    pub iid: Iid,
    /// Origin label in a higher-level program (`@hl=`).
    pub hl: Option<i64>,
    pub kind: InstrKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FenceKind {
    Mfence,
    Sync,
    Lwsync,
    Isync,
}

impl FenceKind {
    pub const ALL: [FenceKind; 4] = [FenceKind::Mfence, FenceKind::Sync, FenceKind::Lwsync, FenceKind::Isync];

    pub fn name(self) -> &'static str {
        match self {
            FenceKind::Mfence => "mfence",
            FenceKind::Sync => "sync",
            FenceKind::Lwsync => "lwsync",
            FenceKind::Isync => "isync",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstrKind {
    Local { reg: String, expr: Expr },
    Load { reg: String, loc: String },
    Store { loc: String, reg: String },
    Fence(FenceKind),
    Seq(Box<Instr>, Box<Instr>),
    If { cond: Pred, then: Box<Instr>, els: Box<Instr> },
    While { cond: Pred, body: Box<Instr> },
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Reg(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pred {
    Bool(bool),
    Cmp(CmpOp, Expr, Expr),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

impl CmpOp {
    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl Expr {
    pub fn eval(&self, regs: &impl Fn(&str) -> i64) -> i64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Reg(r) => regs(r),
            Expr::Add(a, b) => a.eval(regs).wrapping_add(b.eval(regs)),
            Expr::Sub(a, b) => a.eval(regs).wrapping_sub(b.eval(regs)),
            Expr::Mul(a, b) => a.eval(regs).wrapping_mul(b.eval(regs)),
        }
    }

    pub fn registers(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Reg(r) => {
                out.insert(r.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.registers(out);
                b.registers(out);
            }
        }
    }

    pub fn has_arithmetic(&self) -> bool {
        !matches!(self, Expr::Const(_) | Expr::Reg(_))
    }
}

impl Pred {
    pub fn eval(&self, regs: &impl Fn(&str) -> i64) -> bool {
        match self {
            Pred::Bool(b) => *b,
            Pred::Cmp(op, a, b) => op.holds(a.eval(regs), b.eval(regs)),
            Pred::And(a, b) => a.eval(regs) && b.eval(regs),
            Pred::Or(a, b) => a.eval(regs) || b.eval(regs),
            Pred::Not(a) => !a.eval(regs),
        }
    }

    pub fn registers(&self, out: &mut BTreeSet<String>) {
        match self {
            Pred::Bool(_) => {}
            Pred::Cmp(_, a, b) => {
                a.registers(out);
                b.registers(out);
            }
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.registers(out);
                b.registers(out);
            }
            Pred::Not(a) => a.registers(out),
        }
    }

    pub fn and(a: Pred, b: Pred) -> Pred {
        Pred::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Pred, b: Pred) -> Pred {
        Pred::Or(Box::new(a), Box::new(b))
    }

    pub fn eq_const(reg: &str, c: i64) -> Pred {
        Pred::Cmp(CmpOp::Eq, Expr::Reg(reg.to_string()), Expr::Const(c))
    }
}

impl Instr {
    pub fn new(kind: InstrKind) -> Self {
        Instr { iid: 0, hl: None, kind }
    }

    pub fn skip() -> Self {
        Self::new(InstrKind::Skip)
    }

    /// Right-nested sequence of `items`; `Skip` when empty.
    pub fn seq(items: Vec<Instr>) -> Self {
        let mut it = items.into_iter().rev();
        let Some(mut acc) = it.next() else { return Self::skip() };
        for i in it {
            acc = Self::new(InstrKind::Seq(Box::new(i), Box::new(acc)));
        }
        acc
    }

    pub fn local(reg: &str, expr: Expr) -> Self {
        Self::new(InstrKind::Local { reg: reg.into(), expr })
    }

    pub fn load(reg: &str, loc: &str) -> Self {
        Self::new(InstrKind::Load { reg: reg.into(), loc: loc.into() })
    }

    pub fn store(loc: &str, reg: &str) -> Self {
        Self::new(InstrKind::Store { loc: loc.into(), reg: reg.into() })
    }

    pub fn if_(cond: Pred, then: Instr, els: Instr) -> Self {
        Self::new(InstrKind::If { cond, then: Box::new(then), els: Box::new(els) })
    }

    pub fn is_memory(&self) -> bool {
        matches!(self.kind, InstrKind::Load { .. } | InstrKind::Store { .. })
    }

    /// Preorder traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Instr)) {
        f(self);
        match &self.kind {
            InstrKind::Seq(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            InstrKind::If { then, els, .. } => {
                then.walk(f);
                els.walk(f);
            }
            InstrKind::While { body, .. } => body.walk(f),
            _ => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Instr)) {
        f(self);
        match &mut self.kind {
            InstrKind::Seq(a, b) => {
                a.walk_mut(f);
                b.walk_mut(f);
            }
            InstrKind::If { then, els, .. } => {
                then.walk_mut(f);
                els.walk_mut(f);
            }
            InstrKind::While { body, .. } => body.walk_mut(f),
            _ => {}
        }
    }

    fn max_iid(&self) -> Iid {
        let mut m = 0;
        self.walk(&mut |i| m = m.max(i.iid));
        m
    }

    fn has_loop(&self) -> bool {
        let mut found = false;
        self.walk(&mut |i| found |= matches!(i.kind, InstrKind::While { .. }));
        found
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub iid: Option<Iid>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.iid {
            Some(i) => write!(f, "instruction {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl Program {
    pub fn new(name: &str) -> Self {
        Program { name: name.into(), init: BTreeMap::new(), threads: Vec::new() }
    }

    pub fn init_value(&self, loc: &str) -> i64 {
        self.init.get(loc).copied().unwrap_or(0)
    }

    /// Every location mentioned by an instruction or an `init` line.
    pub fn locations(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.init.keys().cloned().collect();
        for t in &self.threads {
            t.body.walk(&mut |i| match &i.kind {
                InstrKind::Load { loc, .. } | InstrKind::Store { loc, .. } => {
                    out.insert(loc.clone());
                }
                _ => {}
            });
        }
        out
    }

    /// Registers of one thread, in name order.
    pub fn registers(thread: &Thread) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        thread.body.walk(&mut |i| match &i.kind {
            InstrKind::Local { reg, expr } => {
                out.insert(reg.clone());
                expr.registers(&mut out);
            }
            InstrKind::Load { reg, .. } | InstrKind::Store { reg, .. } => {
                out.insert(reg.clone());
            }
            InstrKind::If { cond, .. } | InstrKind::While { cond, .. } => cond.registers(&mut out),
            _ => {}
        });
        out
    }

    pub fn is_acyclic(&self) -> bool {
        self.threads.iter().all(|t| !t.body.has_loop())
    }

    /// Reassign iids in preorder starting from 0.
    pub fn renumber(&mut self) {
        let mut next = 0;
        for t in &mut self.threads {
            t.body.walk_mut(&mut |i| {
                i.iid = next;
                next += 1;
            });
        }
    }

    pub fn max_iid(&self) -> Iid {
        self.threads.iter().map(|t| t.body.max_iid()).max().unwrap_or(0)
    }

    /// Look up an instruction by iid.
    pub fn instr(&self, iid: Iid) -> Option<&Instr> {
        let mut found = None;
        for t in &self.threads {
            t.body.walk(&mut |i| {
                if i.iid == iid {
                    found = Some(i);
                }
            });
        }
        found
    }

    /// Well-formedness diagnostics; `require_acyclic` also rejects loops.
    pub fn validate(&self, require_acyclic: bool) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.threads.is_empty() {
            out.push(Diagnostic { iid: None, message: "program has no threads".into() });
        }
        let mut tids = HashSet::new();
        for t in &self.threads {
            if !tids.insert(&t.tid) {
                out.push(Diagnostic { iid: None, message: format!("duplicate thread id `{}`", t.tid) });
            }
        }
        let mut iids = HashSet::new();
        for t in &self.threads {
            t.body.walk(&mut |i| {
                if !iids.insert(i.iid) {
                    out.push(Diagnostic { iid: Some(i.iid), message: "duplicate instruction id".into() });
                }
                if require_acyclic && matches!(i.kind, InstrKind::While { .. }) {
                    out.push(Diagnostic {
                        iid: Some(i.iid),
                        message: format!("loop in thread `{}` must be unrolled", t.tid),
                    });
                }
            });
        }
        out
    }

    /// Registers read before any assignment on some path (they read 0).
    pub fn undefined_register_reads(&self) -> Vec<Diagnostic> {
        fn go(i: &Instr, defined: &mut BTreeSet<String>, tid: &str, out: &mut Vec<Diagnostic>) {
            let check = |regs: BTreeSet<String>, defined: &BTreeSet<String>, out: &mut Vec<Diagnostic>| {
                for r in regs.difference(defined) {
                    out.push(Diagnostic {
                        iid: Some(i.iid),
                        message: format!("register `{r}` of thread `{tid}` read before assignment"),
                    });
                }
            };
            match &i.kind {
                InstrKind::Local { reg, expr } => {
                    let mut used = BTreeSet::new();
                    expr.registers(&mut used);
                    check(used, defined, out);
                    defined.insert(reg.clone());
                }
                InstrKind::Load { reg, .. } => {
                    defined.insert(reg.clone());
                }
                InstrKind::Store { reg, .. } => check([reg.clone()].into(), defined, out),
                InstrKind::Seq(a, b) => {
                    go(a, defined, tid, out);
                    go(b, defined, tid, out);
                }
                InstrKind::If { cond, then, els } => {
                    let mut used = BTreeSet::new();
                    cond.registers(&mut used);
                    check(used, defined, out);
                    let mut d1 = defined.clone();
                    let mut d2 = defined.clone();
                    go(then, &mut d1, tid, out);
                    go(els, &mut d2, tid, out);
                    *defined = d1.intersection(&d2).cloned().collect();
                }
                InstrKind::While { cond, body } => {
                    let mut used = BTreeSet::new();
                    cond.registers(&mut used);
                    check(used, defined, out);
                    go(body, &mut defined.clone(), tid, out);
                }
                InstrKind::Fence(_) | InstrKind::Skip => {}
            }
        }
        let mut out = Vec::new();
        for t in &self.threads {
            go(&t.body, &mut BTreeSet::new(), &t.tid, &mut out);
        }
        out
    }

    /// Replace every loop by `k` nested conditional copies of its body.
    pub fn unroll(&self, k: usize) -> Program {
        assert!(k >= 1, "unroll bound must be positive");
        let mut next = self.max_iid() + 1;
        let mut p = self.clone();
        for t in &mut p.threads {
            t.body = unroll_instr(&t.body, k, &mut next);
        }
        p
    }

    /// Insert a fence of `kind` after every load and store.
    pub fn with_fences_after_accesses(&self, kind: FenceKind) -> Program {
        fn go(i: &Instr, kind: FenceKind) -> Instr {
            let rebuild = |k: InstrKind| Instr { iid: 0, hl: i.hl, kind: k };
            match &i.kind {
                InstrKind::Seq(a, b) => rebuild(InstrKind::Seq(Box::new(go(a, kind)), Box::new(go(b, kind)))),
                InstrKind::If { cond, then, els } => rebuild(InstrKind::If {
                    cond: cond.clone(),
                    then: Box::new(go(then, kind)),
                    els: Box::new(go(els, kind)),
                }),
                InstrKind::While { cond, body } => {
                    rebuild(InstrKind::While { cond: cond.clone(), body: Box::new(go(body, kind)) })
                }
                _ if i.is_memory() => Instr::seq(vec![i.clone(), Instr::new(InstrKind::Fence(kind))]),
                _ => i.clone(),
            }
        }
        let mut p = self.clone();
        for t in &mut p.threads {
            t.body = go(&t.body, kind);
        }
        p.renumber();
        p
    }
}

fn refresh(i: &Instr, next: &mut Iid) -> Instr {
    let mut c = i.clone();
    c.walk_mut(&mut |n| {
        n.iid = *next;
        *next += 1;
    });
    c
}

fn unroll_instr(i: &Instr, k: usize, next: &mut Iid) -> Instr {
    let rebuild = |kind| Instr { iid: i.iid, hl: i.hl, kind };
    match &i.kind {
        InstrKind::Seq(a, b) => rebuild(InstrKind::Seq(Box::new(unroll_instr(a, k, next)), Box::new(unroll_instr(b, k, next)))),
        InstrKind::If { cond, then, els } => rebuild(InstrKind::If {
            cond: cond.clone(),
            then: Box::new(unroll_instr(then, k, next)),
            els: Box::new(unroll_instr(els, k, next)),
        }),
        InstrKind::While { cond, body } => {
            let body = unroll_instr(body, k, next);
            // Build from the innermost copy outwards; the outermost copy keeps the original ids.
            let mut acc: Option<Instr> = None;
            for depth in (0..k).rev() {
                let copy = if depth == 0 { body.clone() } else { refresh(&body, next) };
                let then = match acc.take() {
                    None => copy,
                    Some(inner) => Instr { iid: fresh(next), hl: None, kind: InstrKind::Seq(Box::new(copy), Box::new(inner)) },
                };
                let iid = if depth == 0 { i.iid } else { fresh(next) };
                acc = Some(Instr {
                    iid,
                    hl: i.hl,
                    kind: InstrKind::If {
                        cond: cond.clone(),
                        then: Box::new(then),
                        els: Box::new(Instr { iid: fresh(next), hl: None, kind: InstrKind::Skip }),
                    },
                });
            }
            acc.expect("k >= 1")
        }
        _ => i.clone(),
    }
}

fn fresh(next: &mut Iid) -> Iid {
    let v = *next;
    *next += 1;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(p: &Program, f: impl Fn(&Instr) -> bool) -> usize {
        let mut n = 0;
        for t in &p.threads {
            t.body.walk(&mut |i| n += f(i) as usize);
        }
        n
    }

    #[test]
    fn unroll_depths() {
        let src = "program w\nthread t0\n r0 <- x;\n while (r0 = 0) { r0 <- x }";
        let p = parse_program(src).unwrap();
        for k in 1..4 {
            let u = p.unroll(k);
            assert!(u.is_acyclic());
            assert!(u.validate(true).is_empty(), "{:?}", u.validate(true));
            assert_eq!(count(&u, |i| matches!(i.kind, InstrKind::Load { .. })), 1 + k);
            assert_eq!(count(&u, |i| matches!(i.kind, InstrKind::If { .. })), k);
        }
        let once = p.unroll(1);
        assert_eq!(once.unroll(3), once);
    }

    #[test]
    fn unroll_depth_two_shape() {
        let p = parse_program("program w\nthread t0\n while (r0 = 0) { r0 <- x }").unwrap();
        let u = p.unroll(2);
        let InstrKind::If { then, els, .. } = &u.threads[0].body.kind else { panic!() };
        assert!(matches!(els.kind, InstrKind::Skip));
        let InstrKind::Seq(first, inner) = &then.kind else { panic!() };
        assert!(matches!(first.kind, InstrKind::Load { .. }));
        let InstrKind::If { then, els, .. } = &inner.kind else { panic!() };
        assert!(matches!(then.kind, InstrKind::Load { .. }));
        assert!(matches!(els.kind, InstrKind::Skip));
    }

    #[test]
    fn validate_reports() {
        let mut p = parse_program("program p\nthread t0\n skip\nthread t1\n skip").unwrap();
        assert!(p.validate(true).is_empty());
        p.threads[1].tid = "t0".into();
        let d = p.validate(true);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("t0"));
        let w = parse_program("program p\nthread t0\n while (r0 = 0) { skip }").unwrap();
        let d = w.validate(true);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].iid, Some(w.threads[0].body.iid));
        assert!(w.validate(false).is_empty());
    }

    #[test]
    fn undefined_reads_are_warnings() {
        let p = parse_program("program p\nthread t0\n x := r1;\n r2 <- y;\n z := r2").unwrap();
        let w = p.undefined_register_reads();
        assert_eq!(w.len(), 1);
        assert!(w[0].message.contains("r1"));
    }

    #[test]
    fn fences_after_accesses() {
        let p = parse_program("program p\nthread t0\n x := 1;\n r0 <- y").unwrap();
        let f = p.with_fences_after_accesses(FenceKind::Lwsync);
        assert_eq!(count(&f, |i| matches!(i.kind, InstrKind::Fence(FenceKind::Lwsync))), 2);
        assert!(f.validate(true).is_empty());
    }
}
