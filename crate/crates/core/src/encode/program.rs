//! Control flow, SSA data flow, execution axioms and final-state terms.

use super::names;
use super::{BoolExpr, Encoder, Formula, IntExpr, State};
use crate::events::{EventKind, Guard};
use crate::prog::{CmpOp, Expr, Instr, InstrKind, Pred, Program};
use std::collections::BTreeMap;

/// Current SSA version per register of one thread.
#[derive(Clone, Default)]
struct Versions(BTreeMap<String, u32>);

impl Versions {
    fn get(&self, reg: &str) -> u32 {
        self.0.get(reg).copied().unwrap_or(0)
    }
}

pub(super) fn int_expr(f: &mut Formula, e: &Expr, lookup: &mut impl FnMut(&mut Formula, &str) -> Result<IntExpr, String>) -> Result<IntExpr, String> {
    Ok(match e {
        Expr::Const(c) => IntExpr::Const(*c),
        Expr::Reg(r) => lookup(f, r)?,
        Expr::Add(a, b) => IntExpr::Add(Box::new(int_expr(f, a, lookup)?), Box::new(int_expr(f, b, lookup)?)),
        Expr::Sub(a, b) => IntExpr::Sub(Box::new(int_expr(f, a, lookup)?), Box::new(int_expr(f, b, lookup)?)),
        Expr::Mul(a, b) => IntExpr::Mul(Box::new(int_expr(f, a, lookup)?), Box::new(int_expr(f, b, lookup)?)),
    })
}

pub(super) fn pred_expr(f: &mut Formula, p: &Pred, lookup: &mut impl FnMut(&mut Formula, &str) -> Result<IntExpr, String>) -> Result<BoolExpr, String> {
    Ok(match p {
        Pred::Bool(b) => BoolExpr::constant(*b),
        Pred::Cmp(op, a, b) => {
            let (a, b) = (int_expr(f, a, lookup)?, int_expr(f, b, lookup)?);
            f.note_arith(&a);
            f.note_arith(&b);
            match op {
                CmpOp::Eq => BoolExpr::eq(a, b),
                CmpOp::Ne => BoolExpr::not(BoolExpr::eq(a, b)),
                CmpOp::Lt => BoolExpr::lt(a, b),
                CmpOp::Le => BoolExpr::le(a, b),
                CmpOp::Gt => BoolExpr::lt(b, a),
                CmpOp::Ge => BoolExpr::le(b, a),
            }
        }
        Pred::And(a, b) => BoolExpr::and([pred_expr(f, a, lookup)?, pred_expr(f, b, lookup)?]),
        Pred::Or(a, b) => BoolExpr::or([pred_expr(f, a, lookup)?, pred_expr(f, b, lookup)?]),
        Pred::Not(a) => BoolExpr::not(pred_expr(f, a, lookup)?),
    })
}

impl Encoder<'_> {
    pub fn cf(&self, f: &mut Formula, iid: u32) -> BoolExpr {
        f.bool_var(&names::cf(&self.prefix, iid), true)
    }

    pub fn ex(&self, f: &mut Formula, e: usize) -> BoolExpr {
        f.bool_var(&names::ex(&self.prefix, e), true)
    }

    pub fn val(&self, f: &mut Formula, e: usize) -> IntExpr {
        f.int_var(&names::val_event(&self.prefix, e), true)
    }

    fn reg(&self, f: &mut Formula, tid: &str, reg: &str, k: u32) -> IntExpr {
        if k == 0 {
            // Registers start at 0.
            IntExpr::Const(0)
        } else {
            f.int_var(&names::val_reg(&self.prefix, tid, reg, k), true)
        }
    }

    pub fn guard(&self, f: &mut Formula, g: &Guard) -> BoolExpr {
        match g {
            Guard::True => BoolExpr::True,
            Guard::False => BoolExpr::False,
            Guard::Cf(i) => self.cf(f, *i),
            Guard::And(v) => BoolExpr::and(v.iter().map(|g| self.guard(f, g)).collect::<Vec<_>>()),
            Guard::Or(v) => BoolExpr::or(v.iter().map(|g| self.guard(f, g)).collect::<Vec<_>>()),
        }
    }

    /// Control flow, data flow and the execution axioms of the graph.
    pub fn program(&mut self, f: &mut Formula) {
        self.control_and_data_flow(f);
        self.base_axioms(f);
    }

    pub fn control_and_data_flow(&mut self, f: &mut Formula) {
        let g = self.g;
        for th in &g.program.threads {
            let root = self.cf(f, th.body.iid);
            f.assert(root);
            let mut v = Versions::default();
            self.flow(f, &th.tid, &th.body, &mut v);
            for r in Program::registers(th) {
                let e = self.reg(f, &th.tid, &r, v.get(&r));
                self.final_regs.insert(format!("{}:{r}", th.tid), e);
            }
        }
        for ev in &g.events {
            let ex = self.ex(f, ev.eid);
            match ev.iid {
                Some(i) => {
                    let cf = self.cf(f, i);
                    f.assert(BoolExpr::iff(ex, cf));
                }
                None => {
                    f.assert(ex);
                    let v = self.val(f, ev.eid);
                    f.assert(BoolExpr::eq(v, IntExpr::Const(g.program.init_value(&ev.loc))));
                }
            }
        }
    }

    fn flow(&mut self, f: &mut Formula, tid: &str, i: &Instr, v: &mut Versions) {
        let cf = self.cf(f, i.iid);
        match &i.kind {
            InstrKind::Seq(a, b) => {
                for c in [a, b] {
                    let cc = self.cf(f, c.iid);
                    f.assert(BoolExpr::iff(cc, cf.clone()));
                }
                self.flow(f, tid, a, v);
                self.flow(f, tid, b, v);
            }
            InstrKind::If { cond, then, els } => {
                let b = pred_expr(f, cond, &mut |f, r| Ok(self.reg(f, tid, r, v.get(r)))).expect("register lookup is total");
                let ct = self.cf(f, then.iid);
                let ce = self.cf(f, els.iid);
                f.assert(BoolExpr::iff(ct.clone(), BoolExpr::and([cf.clone(), b.clone()])));
                f.assert(BoolExpr::iff(ce.clone(), BoolExpr::and([cf, BoolExpr::not(b)])));
                let start = v.clone();
                self.flow(f, tid, then, v);
                let after_then = std::mem::replace(v, start.clone());
                self.flow(f, tid, els, v);
                let after_else = std::mem::take(v);
                let regs: std::collections::BTreeSet<&String> = after_then.0.keys().chain(after_else.0.keys()).collect();
                for r in regs {
                    let (p, q) = (after_then.get(r), after_else.get(r));
                    let top = p.max(q);
                    // Balance the shorter arm with a copy into the final version.
                    for (k, guard) in [(p, &ct), (q, &ce)] {
                        if k < top {
                            let dst = self.reg(f, tid, r, top);
                            let src = self.reg(f, tid, r, k);
                            f.assert(BoolExpr::implies(guard.clone(), BoolExpr::eq(dst, src)));
                        }
                    }
                    v.0.insert(r.clone(), top);
                }
            }
            InstrKind::Local { reg, expr } => {
                let rhs = int_expr(f, expr, &mut |f, r| Ok(self.reg(f, tid, r, v.get(r)))).expect("register lookup is total");
                f.note_arith(&rhs);
                let k = v.get(reg) + 1;
                v.0.insert(reg.clone(), k);
                let dst = self.reg(f, tid, reg, k);
                f.assert(BoolExpr::implies(cf, BoolExpr::eq(dst, rhs)));
            }
            InstrKind::Load { reg, .. } => {
                let e = self.g.event_of_iid[&i.iid];
                let k = v.get(reg) + 1;
                v.0.insert(reg.clone(), k);
                let dst = self.reg(f, tid, reg, k);
                let val = self.val(f, e);
                f.assert(BoolExpr::implies(cf, BoolExpr::eq(dst, val)));
            }
            InstrKind::Store { reg, .. } => {
                let e = self.g.event_of_iid[&i.iid];
                let src = self.reg(f, tid, reg, v.get(reg));
                let val = self.val(f, e);
                f.assert(BoolExpr::implies(cf, BoolExpr::eq(val, src)));
            }
            InstrKind::Fence(_) | InstrKind::Skip => {}
            InstrKind::While { .. } => unreachable!("event graphs are acyclic"),
        }
    }

    pub fn rf(&self, f: &mut Formula, w: usize, r: usize) -> BoolExpr {
        if self.g.rf_may.contains(w, r) {
            f.bool_var(&names::rel(&self.prefix, "rf", w, r), true)
        } else {
            BoolExpr::False
        }
    }

    pub fn co(&self, f: &mut Formula, a: usize, b: usize) -> BoolExpr {
        if self.g.co_may.contains(a, b) {
            f.bool_var(&names::rel(&self.prefix, "co", a, b), true)
        } else {
            BoolExpr::False
        }
    }

    fn clk(&self, f: &mut Formula, e: usize) -> IntExpr {
        if self.g.events[e].kind == EventKind::Init {
            IntExpr::Const(0)
        } else {
            f.int_var(&names::clk(&self.prefix, e), true)
        }
    }

    /// Reads-from is a total function on executed reads; coherence is a
    /// per-location total order given by clocks with initial writes first.
    pub fn base_axioms(&mut self, f: &mut Formula) {
        let g = self.g;
        for r in g.events.iter().filter(|e| e.is_read()).map(|e| e.eid) {
            let ws: Vec<usize> = (0..g.len()).filter(|&w| g.rf_may.contains(w, r)).collect();
            let exr = self.ex(f, r);
            let lits: Vec<BoolExpr> = ws.iter().map(|&w| self.rf(f, w, r)).collect();
            f.assert(BoolExpr::implies(exr.clone(), BoolExpr::or(lits.clone())));
            for i in 0..lits.len() {
                for j in i + 1..lits.len() {
                    f.assert(BoolExpr::or([BoolExpr::not(lits[i].clone()), BoolExpr::not(lits[j].clone())]));
                }
            }
            let vr = self.val(f, r);
            for (&w, lit) in ws.iter().zip(&lits) {
                let exw = self.ex(f, w);
                let vw = self.val(f, w);
                f.assert(BoolExpr::implies(lit.clone(), BoolExpr::and([exw, exr.clone(), BoolExpr::eq(vw, vr.clone())])));
            }
        }
        for w in g.events.iter().filter(|e| e.kind == EventKind::Write).map(|e| e.eid) {
            let c = self.clk(f, w);
            f.assert(BoolExpr::le(IntExpr::Const(1), c));
        }
        for (a, b) in g.co_may.pairs() {
            let lit = self.co(f, a, b);
            let (exa, exb) = (self.ex(f, a), self.ex(f, b));
            let (ca, cb) = (self.clk(f, a), self.clk(f, b));
            f.assert(BoolExpr::iff(lit, BoolExpr::and([exa, exb, BoolExpr::lt(ca, cb)])));
        }
        for (a, b) in g.co_may.pairs().filter(|&(a, b)| a < b && g.co_may.contains(b, a)) {
            let (exa, exb) = (self.ex(f, a), self.ex(f, b));
            let (ab, ba) = (self.co(f, a, b), self.co(f, b, a));
            f.assert(BoolExpr::or([BoolExpr::not(exa), BoolExpr::not(exb), ab, ba]));
        }
    }

    /// Final value of every location: the value of its co-last executed write.
    pub fn final_values(&mut self, f: &mut Formula) {
        let g = self.g;
        for loc in &g.locations {
            let fin = f.int_var(&names::fin(&self.prefix, loc), true);
            for w in g.events.iter().filter(|e| e.is_write() && &e.loc == loc).map(|e| e.eid) {
                let mut last = vec![self.ex(f, w)];
                for w2 in (0..g.len()).filter(|&w2| g.co_may.contains(w, w2)) {
                    last.push(BoolExpr::not(self.co(f, w, w2)));
                }
                let vw = self.val(f, w);
                f.assert(BoolExpr::implies(BoolExpr::and(last), BoolExpr::eq(fin.clone(), vw)));
            }
        }
    }

    /// Final value of a location or `tid:reg` key; needs [`Encoder::final_values`].
    pub fn state_term(&self, f: &mut Formula, key: &str) -> Result<IntExpr, String> {
        if let Some(e) = self.final_regs.get(key) {
            return Ok(e.clone());
        }
        if self.g.locations.iter().any(|l| l == key) {
            return Ok(f.int_var(&names::fin(&self.prefix, key), true));
        }
        if key.contains(':') {
            // A register the thread never touches keeps its initial 0.
            let tid = key.split(':').next().unwrap_or("");
            if self.g.program.threads.iter().any(|t| t.tid == tid) {
                return Ok(IntExpr::Const(0));
            }
        }
        Err(format!("unknown location or register `{key}`"))
    }

    pub fn state_equals(&self, f: &mut Formula, sigma: &State) -> Result<BoolExpr, String> {
        let mut parts = Vec::new();
        for (k, v) in sigma {
            let t = self.state_term(f, k)?;
            parts.push(BoolExpr::eq(t, IntExpr::Const(*v)));
        }
        Ok(BoolExpr::and(parts))
    }

    /// Predicate over final values; operands name locations or `tid:reg`.
    pub fn state_pred(&self, f: &mut Formula, p: &Pred) -> Result<BoolExpr, String> {
        pred_expr(f, p, &mut |f, k| self.state_term(f, k))
    }
}
