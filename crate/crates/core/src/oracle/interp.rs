//! Thread interpreter over possibly unknown read values.

use crate::events::{Eid, EventGraph};
use crate::prog::{Expr, Iid, Instr, InstrKind, Pred};
use std::collections::{BTreeMap, BTreeSet};

/// Branch decisions of one control path: `If` instruction id → then-arm taken.
pub type Path = BTreeMap<Iid, bool>;

#[derive(Clone, Debug, Default)]
pub struct Run {
    pub cf: BTreeSet<Iid>,
    pub executed: Vec<Eid>,
    /// Values of executed events; `None` while they depend on unknown reads.
    pub values: BTreeMap<Eid, Option<i64>>,
    pub regs: BTreeMap<String, Option<i64>>,
    /// A branch predicate with a known value disagrees with the path.
    pub diverged: bool,
    /// A branch was reached whose predicate is unknown and no path was given.
    pub stuck: bool,
}

fn eval_expr(e: &Expr, regs: &BTreeMap<String, Option<i64>>) -> Option<i64> {
    Some(match e {
        Expr::Const(c) => *c,
        Expr::Reg(r) => regs.get(r).copied().unwrap_or(Some(0))?,
        Expr::Add(a, b) => eval_expr(a, regs)?.wrapping_add(eval_expr(b, regs)?),
        Expr::Sub(a, b) => eval_expr(a, regs)?.wrapping_sub(eval_expr(b, regs)?),
        Expr::Mul(a, b) => eval_expr(a, regs)?.wrapping_mul(eval_expr(b, regs)?),
    })
}

fn eval_pred(p: &Pred, regs: &BTreeMap<String, Option<i64>>) -> Option<bool> {
    Some(match p {
        Pred::Bool(b) => *b,
        Pred::Cmp(op, a, b) => op.holds(eval_expr(a, regs)?, eval_expr(b, regs)?),
        Pred::And(a, b) => match (eval_pred(a, regs), eval_pred(b, regs)) {
            (Some(false), _) | (_, Some(false)) => false,
            (Some(true), Some(true)) => true,
            _ => return None,
        },
        Pred::Or(a, b) => match (eval_pred(a, regs), eval_pred(b, regs)) {
            (Some(true), _) | (_, Some(true)) => true,
            (Some(false), Some(false)) => false,
            _ => return None,
        },
        Pred::Not(a) => !eval_pred(a, regs)?,
    })
}

/// Run thread `t` of `g`. Branches follow `path` when given, else the
/// predicate; reads take their values from `read`.
pub fn run_thread(g: &EventGraph, t: usize, path: Option<&Path>, read: &dyn Fn(Eid) -> Option<i64>) -> Run {
    let mut run = Run::default();
    step(g, &g.program.threads[t].body, path, read, &mut run);
    run
}

fn step(g: &EventGraph, i: &Instr, path: Option<&Path>, read: &dyn Fn(Eid) -> Option<i64>, run: &mut Run) {
    run.cf.insert(i.iid);
    match &i.kind {
        InstrKind::Seq(a, b) => {
            step(g, a, path, read, run);
            step(g, b, path, read, run);
        }
        InstrKind::If { cond, then, els } => {
            let known = eval_pred(cond, &run.regs);
            let take = match (path.and_then(|p| p.get(&i.iid)), known) {
                (Some(&want), Some(k)) => {
                    run.diverged |= want != k;
                    want
                }
                (Some(&want), None) => want,
                (None, Some(k)) => k,
                (None, None) => {
                    run.stuck = true;
                    return;
                }
            };
            step(g, if take { then } else { els }, path, read, run);
        }
        InstrKind::Local { reg, expr } => {
            let v = eval_expr(expr, &run.regs);
            run.regs.insert(reg.clone(), v);
        }
        InstrKind::Load { reg, .. } => {
            let e = g.event_of_iid[&i.iid];
            let v = read(e);
            run.executed.push(e);
            run.values.insert(e, v);
            run.regs.insert(reg.clone(), v);
        }
        InstrKind::Store { reg, .. } => {
            let e = g.event_of_iid[&i.iid];
            run.executed.push(e);
            run.values.insert(e, run.regs.get(reg).copied().unwrap_or(Some(0)));
        }
        InstrKind::Fence(_) | InstrKind::Skip => {}
        InstrKind::While { .. } => unreachable!("event graphs are acyclic"),
    }
}

/// Every control path of a thread, as branch decisions on reachable `If`s.
pub fn paths(i: &Instr) -> Vec<Path> {
    match &i.kind {
        InstrKind::Seq(a, b) => {
            let pb = paths(b);
            let mut out = Vec::new();
            for x in paths(a) {
                for y in &pb {
                    let mut p = x.clone();
                    p.extend(y.iter().map(|(k, v)| (*k, *v)));
                    out.push(p);
                }
            }
            out
        }
        InstrKind::If { then, els, .. } => {
            let mut out = Vec::new();
            for (arm, taken) in [(then, true), (els, false)] {
                for mut p in paths(arm) {
                    p.insert(i.iid, taken);
                    out.push(p);
                }
            }
            out
        }
        _ => vec![Path::new()],
    }
}
