//! Exhaustive reference semantics for small programs.

mod interp;

pub use interp::{paths, run_thread, Path, Run};

use crate::cat::{eval_model, MemoryModel};
use crate::encode::{State, StateScope};
use crate::events::{Eid, EventGraph, EventKind};
use crate::prog::{Expr, InstrKind, Pred, Program};
use crate::witness::{reach_state, to_execution, ExecutionWitness};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use thiserror::Error;

pub const DEFAULT_LIMIT: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("program has {events} memory events, above the oracle limit of {limit}")]
    LimitExceeded { events: usize, limit: usize },
}

fn constants(p: &Program) -> BTreeSet<i64> {
    fn expr(e: &Expr, out: &mut BTreeSet<i64>) {
        match e {
            Expr::Const(c) => {
                out.insert(*c);
            }
            Expr::Reg(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                expr(a, out);
                expr(b, out);
            }
        }
    }
    fn pred(p: &Pred, out: &mut BTreeSet<i64>) {
        match p {
            Pred::Bool(_) => {}
            Pred::Cmp(_, a, b) => {
                expr(a, out);
                expr(b, out);
            }
            Pred::And(a, b) | Pred::Or(a, b) => {
                pred(a, out);
                pred(b, out);
            }
            Pred::Not(a) => pred(a, out),
        }
    }
    let mut out: BTreeSet<i64> = p.init.values().copied().collect();
    out.insert(0);
    for t in &p.threads {
        t.body.walk(&mut |i| match &i.kind {
            InstrKind::Local { expr: e, .. } => expr(e, &mut out),
            InstrKind::If { cond, .. } | InstrKind::While { cond, .. } => pred(cond, &mut out),
            _ => {}
        });
    }
    out
}

/// Advance a mixed-radix counter; false once it wraps around.
fn next(counter: &mut [usize], radix: &[usize]) -> bool {
    for i in 0..counter.len() {
        counter[i] += 1;
        if counter[i] < radix[i] {
            return true;
        }
        counter[i] = 0;
    }
    false
}

fn permutations(items: &[Eid]) -> Vec<Vec<Eid>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

type Values = BTreeMap<Eid, Option<i64>>;

/// Values of all executed events under fixed paths and rf, with `guess`
/// supplying reads on value cycles. `None` if inconsistent.
fn resolve(g: &EventGraph, choice: &[Path], rf: &BTreeMap<Eid, Eid>, guess: &BTreeMap<Eid, i64>) -> Option<(Vec<Run>, Values)> {
    let mut vals: Values = g
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Init)
        .map(|e| (e.eid, Some(g.program.init_value(&e.loc))))
        .collect();
    loop {
        let read = |r: Eid| guess.get(&r).copied().or_else(|| vals.get(&rf[&r]).copied().flatten());
        let runs: Vec<Run> = (0..choice.len()).map(|t| run_thread(g, t, Some(&choice[t]), &read)).collect();
        let mut next = vals.clone();
        for run in &runs {
            next.extend(run.values.iter().map(|(e, v)| (*e, *v)));
        }
        if next == vals {
            for (r, v) in guess {
                if vals.get(&rf[r]).copied().flatten() != Some(*v) {
                    return None;
                }
            }
            if runs.iter().any(|r| r.diverged) {
                return None;
            }
            return Some((runs, vals));
        }
        vals = next;
    }
}

/// Visit every execution of `g`: control paths × rf choices × co orders,
/// keeping those whose values match the branches taken.
pub fn for_each_execution(g: &EventGraph, limit: usize, mut visit: impl FnMut(ExecutionWitness) -> ControlFlow<()>) -> Result<(), OracleError> {
    let events = g.events.iter().filter(|e| e.kind != EventKind::Init).count();
    if events > limit {
        return Err(OracleError::LimitExceeded { events, limit });
    }
    let domain: Vec<i64> = constants(&g.program).into_iter().collect();
    let thread_paths: Vec<Vec<Path>> = g.program.threads.iter().map(|t| paths(&t.body)).collect();
    let radix: Vec<usize> = thread_paths.iter().map(|p| p.len()).collect();
    let mut pc = vec![0; radix.len()];
    loop {
        let choice: Vec<Path> = pc.iter().enumerate().map(|(t, &i)| thread_paths[t][i].clone()).collect();
        let mut executed: BTreeSet<Eid> = g.events.iter().filter(|e| e.kind == EventKind::Init).map(|e| e.eid).collect();
        for (t, path) in choice.iter().enumerate() {
            executed.extend(run_thread(g, t, Some(path), &|_| None).executed);
        }
        let reads: Vec<Eid> = executed.iter().copied().filter(|&e| g.events[e].is_read()).collect();
        let cands: Vec<Vec<Eid>> = reads.iter().map(|&r| (0..g.len()).filter(|&w| g.rf_may.contains(w, r) && executed.contains(&w)).collect()).collect();
        let rradix: Vec<usize> = cands.iter().map(|c| c.len()).collect();
        if rradix.iter().all(|&n| n > 0) {
            let mut rc = vec![0; reads.len()];
            loop {
                let rf: BTreeMap<Eid, Eid> = reads.iter().zip(&rc).enumerate().map(|(i, (&r, &c))| (r, cands[i][c])).collect();
                if visit_rf(g, &choice, &executed, &rf, &domain, &mut visit).is_break() {
                    return Ok(());
                }
                if !next(&mut rc, &rradix) {
                    break;
                }
            }
        }
        if !next(&mut pc, &radix) {
            break;
        }
    }
    Ok(())
}

fn visit_rf(
    g: &EventGraph,
    choice: &[Path],
    executed: &BTreeSet<Eid>,
    rf: &BTreeMap<Eid, Eid>,
    domain: &[i64],
    visit: &mut impl FnMut(ExecutionWitness) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some((_, vals)) = resolve(g, choice, rf, &BTreeMap::new()) else {
        return ControlFlow::Continue(());
    };
    // Reads whose value depends on itself through rf need a guessed value.
    let cyclic: Vec<Eid> = rf.keys().copied().filter(|r| vals.get(r).copied().flatten().is_none()).collect();
    let dradix = vec![domain.len(); cyclic.len()];
    let mut dc = vec![0; cyclic.len()];
    loop {
        let guess: BTreeMap<Eid, i64> = cyclic.iter().zip(&dc).map(|(&r, &i)| (r, domain[i])).collect();
        if let Some((runs, vals)) = resolve(g, choice, rf, &guess) {
            visit_co(g, executed, rf, &runs, &vals, visit)?;
        }
        if !next(&mut dc, &dradix) {
            return ControlFlow::Continue(());
        }
    }
}

fn visit_co(
    g: &EventGraph,
    executed: &BTreeSet<Eid>,
    rf: &BTreeMap<Eid, Eid>,
    runs: &[Run],
    vals: &BTreeMap<Eid, Option<i64>>,
    visit: &mut impl FnMut(ExecutionWitness) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut base = ExecutionWitness {
        executed: executed.clone(),
        rf: rf.iter().map(|(&r, &w)| (w, r)).collect(),
        values: executed.iter().map(|&e| (e, vals.get(&e).copied().flatten().unwrap_or(0))).collect(),
        ..Default::default()
    };
    for (t, run) in runs.iter().enumerate() {
        base.cf.extend(run.cf.iter().copied());
        let th = &g.program.threads[t];
        for r in Program::registers(th) {
            let v = run.regs.get(&r).copied().flatten().unwrap_or(0);
            base.registers.insert(format!("{}:{r}", th.tid), v);
        }
    }
    let orders: Vec<(Eid, Vec<Vec<Eid>>)> = g
        .locations
        .iter()
        .map(|l| {
            let init = g.init_event(l).expect("every location has an initial write");
            let ws: Vec<Eid> = executed.iter().copied().filter(|&e| g.events[e].kind == EventKind::Write && &g.events[e].loc == l).collect();
            (init, permutations(&ws))
        })
        .collect();
    let radix: Vec<usize> = orders.iter().map(|(_, o)| o.len()).collect();
    let mut oc = vec![0; radix.len()];
    loop {
        let mut w = base.clone();
        for (i, (init, perms)) in orders.iter().enumerate() {
            let chain: Vec<Eid> = std::iter::once(*init).chain(perms[oc[i]].iter().copied()).collect();
            for a in 0..chain.len() {
                for b in a + 1..chain.len() {
                    w.co.insert((chain[a], chain[b]));
                }
            }
        }
        visit(w)?;
        if !next(&mut oc, &radix) {
            return ControlFlow::Continue(());
        }
    }
}

pub fn enumerate_executions(g: &EventGraph, limit: usize) -> Result<Vec<ExecutionWitness>, OracleError> {
    let mut out = Vec::new();
    for_each_execution(g, limit, |w| {
        out.push(w);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

pub fn is_consistent(w: &ExecutionWitness, g: &EventGraph, m: &MemoryModel) -> bool {
    eval_model(m, &to_execution(w, g)).consistent()
}

pub fn consistent_set(g: &EventGraph, m: &MemoryModel, limit: usize) -> Result<Vec<ExecutionWitness>, OracleError> {
    Ok(enumerate_executions(g, limit)?.into_iter().filter(|w| is_consistent(w, g, m)).collect())
}

/// First execution consistent with `tgt` but not with `src`, if any.
pub fn portable_bruteforce(g: &EventGraph, src: &MemoryModel, tgt: &MemoryModel, limit: usize) -> Result<Option<ExecutionWitness>, OracleError> {
    let mut found = None;
    for_each_execution(g, limit, |w| {
        if is_consistent(&w, g, tgt) && !is_consistent(&w, g, src) {
            found = Some(w);
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    Ok(found)
}

/// Final states of the executions consistent with `m`.
pub fn reachable_states(g: &EventGraph, m: &MemoryModel, limit: usize, scope: StateScope) -> Result<BTreeSet<State>, OracleError> {
    let mut out = BTreeSet::new();
    for_each_execution(g, limit, |w| {
        if is_consistent(&w, g, m) {
            out.insert(scope.project(reach_state(&w, g)));
        }
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// A `tgt`-reachable final state that no `src`-consistent execution reaches.
pub fn state_portable_bruteforce(
    g: &EventGraph,
    src: &MemoryModel,
    tgt: &MemoryModel,
    limit: usize,
    scope: StateScope,
) -> Result<Option<State>, OracleError> {
    let mut from_src = BTreeSet::new();
    let mut from_tgt = BTreeSet::new();
    for_each_execution(g, limit, |w| {
        let s = scope.project(reach_state(&w, g));
        if !from_src.contains(&s) && is_consistent(&w, g, src) {
            from_src.insert(s.clone());
        }
        if !from_tgt.contains(&s) && is_consistent(&w, g, tgt) {
            from_tgt.insert(s);
        }
        ControlFlow::Continue(())
    })?;
    Ok(from_tgt.into_iter().find(|s| !from_src.contains(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::builtin_model;
    use crate::prog::parse_program;

    fn graph(src: &str) -> EventGraph {
        EventGraph::compile(&parse_program(src).unwrap()).unwrap()
    }

    const SB: &str = "program sb\nthread t0\n x := 1;\n r0 <- y\nthread t1\n y := 1;\n r1 <- x";

    #[test]
    fn sb_executions() {
        let g = graph(SB);
        // Two rf sources per read; one non-initial write per location.
        assert_eq!(enumerate_executions(&g, DEFAULT_LIMIT).unwrap().len(), 4);
        let sc = consistent_set(&g, &builtin_model("sc").unwrap(), DEFAULT_LIMIT).unwrap();
        assert_eq!(sc.len(), 3);
        assert!(sc.iter().all(|w| reach_state(w, &g)["t0:r0"] + reach_state(w, &g)["t1:r1"] > 0));
    }

    #[test]
    fn skip_has_one_execution() {
        let g = graph("program p\nthread t0\n skip");
        assert_eq!(enumerate_executions(&g, DEFAULT_LIMIT).unwrap().len(), 1);
    }

    #[test]
    fn branch_free_count_is_a_product() {
        // Two writes to x besides init: 3 rf choices for the read, 2 co orders.
        let g = graph("program p\nthread t0\n x := 1;\n x := 2\nthread t1\n r <- x");
        assert_eq!(enumerate_executions(&g, DEFAULT_LIMIT).unwrap().len(), 6);
    }

    #[test]
    fn branches_filter_by_value() {
        let g = graph("program p\nthread t0\n r <- x;\n if (r = 1) { y := 1 } else { y := 2 }\nthread t1\n x := 1");
        let all = enumerate_executions(&g, DEFAULT_LIMIT).unwrap();
        // Read init then else-arm, or read 1 then then-arm.
        assert_eq!(all.len(), 2);
        let ys: BTreeSet<i64> = all.iter().map(|w| reach_state(w, &g)["y"]).collect();
        assert_eq!(ys, [1, 2].into());
    }

    #[test]
    fn thin_air_values_come_from_the_domain() {
        let g = graph("program p\nthread t0\n r0 <- x;\n y := r0\nthread t1\n r1 <- y;\n x := r1");
        let vals: BTreeSet<i64> = enumerate_executions(&g, DEFAULT_LIMIT).unwrap().iter().map(|w| reach_state(w, &g)["x"]).collect();
        assert_eq!(vals, [0].into());
        let g = graph("program p\ninit z = 5\nthread t0\n r0 <- x;\n y := r0\nthread t1\n r1 <- y;\n x := r1\nthread t2\n r2 <- z");
        let states = reachable_states(&g, &MemoryModel::empty(), DEFAULT_LIMIT, StateScope::Full).unwrap();
        assert!(states.iter().any(|s| s["x"] == 5));
        assert!(states.iter().all(|s| s["x"] == 0 || s["x"] == 5));
    }

    #[test]
    fn limit() {
        let g = graph(SB);
        assert_eq!(enumerate_executions(&g, 3).unwrap_err(), OracleError::LimitExceeded { events: 4, limit: 3 });
    }

    #[test]
    fn portability_by_enumeration() {
        let g = graph(SB);
        let (sc, tso) = (builtin_model("sc").unwrap(), builtin_model("tso").unwrap());
        assert!(portable_bruteforce(&g, &sc, &tso, DEFAULT_LIMIT).unwrap().is_some());
        assert!(portable_bruteforce(&g, &tso, &sc, DEFAULT_LIMIT).unwrap().is_none());
        assert!(state_portable_bruteforce(&g, &sc, &tso, DEFAULT_LIMIT, StateScope::Full).unwrap().is_some());
        assert!(state_portable_bruteforce(&g, &tso, &tso, DEFAULT_LIMIT, StateScope::Full).unwrap().is_none());
    }
}
