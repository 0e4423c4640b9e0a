//! Concrete executions: decoding solver models, validating them against the
//! relational semantics, final states, and DOT/JSON export.

mod dot;

pub use dot::to_dot;

use crate::cat::{eval_model, BaseRel, Execution, MemoryModel, ModelNodes};
use crate::encode::{names, Encoder, IntExpr, State};
use crate::events::{Eid, EventGraph, EventKind};
use crate::oracle::run_thread;
use crate::prog::{Iid, Program};
use crate::rel::Relation;
use crate::solve::{SolverResult, Status};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

pub type Pairs = BTreeSet<(Eid, Eid)>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutionWitness {
    pub executed: BTreeSet<Eid>,
    /// Executed instructions.
    pub cf: BTreeSet<Iid>,
    pub rf: Pairs,
    pub co: Pairs,
    /// Value read or written by each executed event.
    pub values: BTreeMap<Eid, i64>,
    /// Final register values keyed `tid:reg`.
    pub registers: BTreeMap<String, i64>,
    /// Derived relations keyed `ns.name`.
    pub derived: BTreeMap<String, Pairs>,
    /// Violated source axioms.
    pub violated: Vec<String>,
    /// Edges of the guessed cycle of a violated acyclicity axiom.
    pub cycle: Pairs,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("solver result is not sat")]
    NotSat,
    #[error("model lacks variable `{0}`")]
    MissingVariable(String),
}

fn get_bool(res: &SolverResult, name: &str) -> Result<bool, DecodeError> {
    res.bool(name).ok_or_else(|| DecodeError::MissingVariable(name.to_string()))
}

fn get_int(res: &SolverResult, name: &str) -> Result<i64, DecodeError> {
    res.int(name).ok_or_else(|| DecodeError::MissingVariable(name.to_string()))
}

/// Read an execution back from a satisfying assignment of `enc`'s formula.
pub fn decode(res: &SolverResult, enc: &Encoder, models: &[&ModelNodes]) -> Result<ExecutionWitness, DecodeError> {
    if res.status != Status::Sat {
        return Err(DecodeError::NotSat);
    }
    let g = enc.g;
    let p = &enc.prefix;
    let mut w = ExecutionWitness::default();
    for e in 0..g.len() {
        if get_bool(res, &names::ex(p, e))? {
            w.executed.insert(e);
            w.values.insert(e, get_int(res, &names::val_event(p, e))?);
        }
    }
    for t in &g.program.threads {
        let mut err = None;
        t.body.walk(&mut |i| match get_bool(res, &names::cf(p, i.iid)) {
            Ok(true) => {
                w.cf.insert(i.iid);
            }
            Ok(false) => {}
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    for (a, b) in g.rf_may.pairs() {
        if get_bool(res, &names::rel(p, "rf", a, b))? {
            w.rf.insert((a, b));
        }
    }
    for (a, b) in g.co_may.pairs() {
        if get_bool(res, &names::rel(p, "co", a, b))? {
            w.co.insert((a, b));
        }
    }
    for (k, e) in &enc.final_regs {
        let v = match e {
            IntExpr::Var(n) => get_int(res, n)?,
            IntExpr::Const(c) => *c,
            _ => unreachable!("final registers are variables or constants"),
        };
        w.registers.insert(k.clone(), v);
    }
    for m in models {
        for (name, &id) in &m.defs {
            let mut pairs = Pairs::new();
            for (a, b) in enc.may().get(id).pairs() {
                let lit = match enc.dag.node(id) {
                    crate::cat::Node::Base(BaseRel::Rf) => w.rf.contains(&(a, b)),
                    crate::cat::Node::Base(BaseRel::Co) => w.co.contains(&(a, b)),
                    _ => get_bool(res, &names::rel(p, enc.label(id), a, b))?,
                };
                if lit {
                    pairs.insert((a, b));
                }
            }
            w.derived.insert(format!("{}.{name}", m.ns), pairs);
        }
        for (kind, label, id) in &m.axioms {
            let ax = names::axiom(&m.ns, label);
            if res.bool(&names::viol(p, &ax)) == Some(true) {
                w.violated.push(label.clone());
                if *kind == crate::cat::AxiomKind::Acyclic {
                    for (a, b) in enc.may().get(*id).pairs() {
                        if res.bool(&names::cyc_edge(p, &ax, a, b)) == Some(true) {
                            w.cycle.insert((a, b));
                        }
                    }
                }
            }
        }
    }
    Ok(w)
}

/// Base relations of the witness on `g`, for the relational evaluator.
pub fn to_execution(w: &ExecutionWitness, g: &EventGraph) -> Execution {
    let n = g.len();
    let executed: Vec<bool> = (0..n).map(|e| w.executed.contains(&e)).collect();
    let writes = (0..n).map(|e| executed[e] && g.events[e].is_write()).collect();
    let reads = (0..n).map(|e| executed[e] && g.events[e].is_read()).collect();
    let mut base = HashMap::new();
    let on = |i: Iid| w.cf.contains(&i);
    for (b, pairs) in &g.induced {
        let r = Relation::from_pairs(n, pairs.iter().filter(|(_, guard)| guard.eval(&on)).map(|(p, _)| *p));
        base.insert(*b, r);
    }
    base.insert(BaseRel::Rf, Relation::from_pairs(n, w.rf.iter().copied()));
    base.insert(BaseRel::Co, Relation::from_pairs(n, w.co.iter().copied()));
    Execution { n, executed, writes, reads, base }
}

/// Final state: co-last write per location and final register values.
pub fn reach_state(w: &ExecutionWitness, g: &EventGraph) -> State {
    let mut s = State::new();
    for loc in &g.locations {
        let last = g
            .events
            .iter()
            .filter(|e| e.is_write() && &e.loc == loc && w.executed.contains(&e.eid))
            .find(|e| !w.co.iter().any(|&(a, _)| a == e.eid));
        let v = match last {
            Some(e) => w.values.get(&e.eid).copied().unwrap_or(0),
            None => g.program.init_value(loc),
        };
        s.insert(loc.clone(), v);
    }
    for t in &g.program.threads {
        for r in Program::registers(t) {
            let k = format!("{}:{r}", t.tid);
            s.insert(k.clone(), w.registers.get(&k).copied().unwrap_or(0));
        }
    }
    s
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub problems: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Well-formedness of the execution: control path, values, rf and co.
pub fn check_wellformed(w: &ExecutionWitness, g: &EventGraph) -> Vec<String> {
    let mut out = Vec::new();
    for e in g.events.iter().filter(|e| e.kind == EventKind::Init) {
        if !w.executed.contains(&e.eid) {
            out.push(format!("initial write {} not executed", g.describe(e.eid)));
        } else if w.values.get(&e.eid) != Some(&g.program.init_value(&e.loc)) {
            out.push(format!("initial write {} has the wrong value", g.describe(e.eid)));
        }
    }
    for t in 0..g.program.threads.len() {
        let run = run_thread(g, t, None, &|e| w.values.get(&e).copied());
        let thread: BTreeSet<Eid> = g.events.iter().filter(|e| e.thread == Some(t)).map(|e| e.eid).collect();
        let claimed: BTreeSet<Eid> = w.executed.intersection(&thread).copied().collect();
        let ran: BTreeSet<Eid> = run.executed.iter().copied().collect();
        if run.stuck || claimed != ran {
            out.push(format!("thread {}: executed events do not follow one control path", g.program.threads[t].tid));
            continue;
        }
        for (e, v) in &run.values {
            if g.events[*e].kind == EventKind::Write && *v != w.values.get(e).copied() {
                out.push(format!("{} writes {:?}, witness says {:?}", g.describe(*e), v, w.values.get(e)));
            }
        }
    }
    for r in g.events.iter().filter(|e| e.is_read() && w.executed.contains(&e.eid)) {
        let srcs: Vec<Eid> = w.rf.iter().filter(|&&(_, b)| b == r.eid).map(|&(a, _)| a).collect();
        match srcs.as_slice() {
            [s] => {
                let sv = &g.events[*s];
                if !sv.is_write() || sv.loc != r.loc || !w.executed.contains(s) {
                    out.push(format!("{} reads from an invalid source {}", g.describe(r.eid), g.describe(*s)));
                } else if w.values.get(s) != w.values.get(&r.eid) {
                    out.push(format!("{} value differs from its source {}", g.describe(r.eid), g.describe(*s)));
                }
            }
            [] => out.push(format!("{} has no rf source", g.describe(r.eid))),
            _ => out.push(format!("{} has {} rf sources", g.describe(r.eid), srcs.len())),
        }
    }
    for &(a, b) in &w.rf {
        if !w.executed.contains(&a) || !w.executed.contains(&b) {
            out.push(format!("rf edge {} -> {} touches an unexecuted event", g.describe(a), g.describe(b)));
        }
    }
    let co = Relation::from_pairs(g.len(), w.co.iter().copied());
    if co.plus() != co || !co.is_irreflexive() {
        out.push("co is not a strict order".to_string());
    }
    for loc in &g.locations {
        let ws: Vec<Eid> = g.events.iter().filter(|e| e.is_write() && &e.loc == loc && w.executed.contains(&e.eid)).map(|e| e.eid).collect();
        for (i, &a) in ws.iter().enumerate() {
            for &b in &ws[i + 1..] {
                if co.contains(a, b) == co.contains(b, a) {
                    out.push(format!("co does not order {} and {}", g.describe(a), g.describe(b)));
                }
            }
            if g.events[a].kind == EventKind::Init && ws.iter().any(|&b| co.contains(b, a)) {
                out.push(format!("initial write {} is not co-first", g.describe(a)));
            }
        }
    }
    for &(a, b) in &w.co {
        let (ea, eb) = (&g.events[a], &g.events[b]);
        if !ea.is_write() || !eb.is_write() || ea.loc != eb.loc || !w.executed.contains(&a) || !w.executed.contains(&b) {
            out.push(format!("invalid co edge {} -> {}", g.describe(a), g.describe(b)));
        }
    }
    out
}

/// Check the witness against the relational semantics: well-formed, every
/// target axiom holds, some source axiom fails, and decoded derived relations
/// equal their least fixpoints.
pub fn validate_witness(w: &ExecutionWitness, g: &EventGraph, src: Option<&MemoryModel>, tgt: Option<&MemoryModel>) -> Report {
    let mut problems = check_wellformed(w, g);
    let x = to_execution(w, g);
    for (ns, m, want_consistent) in [("tgt", tgt, true), ("src", src, false)] {
        let Some(m) = m else { continue };
        let ev = eval_model(m, &x);
        if want_consistent && !ev.consistent() {
            problems.push(format!("target model {} violated: {}", m.name, ev.violated().join(", ")));
        }
        if !want_consistent && ev.consistent() {
            problems.push(format!("source model {} holds", m.name));
        }
        compare_derived(w, &ev.relations, ns, &mut problems);
    }
    Report { problems }
}

/// Compare decoded relations of namespace `ns` with evaluated ones.
pub fn compare_derived(w: &ExecutionWitness, rels: &BTreeMap<String, Relation>, ns: &str, problems: &mut Vec<String>) {
    for (name, pairs) in &w.derived {
        let Some(bare) = name.strip_prefix(&format!("{ns}.")) else { continue };
        if let Some(r) = rels.get(bare) {
            let want = r.to_set();
            if &want != pairs {
                problems.push(format!("{name}: decoded {pairs:?}, fixpoint {want:?}"));
            }
        }
    }
}

/// Machine-readable witness document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessJson {
    pub program: String,
    pub source_model: String,
    pub target_model: String,
    pub verdict: String,
    pub executed: Vec<Eid>,
    pub rf: Vec<[Eid; 2]>,
    pub co: Vec<[Eid; 2]>,
    pub values: BTreeMap<Eid, i64>,
    pub state: BTreeMap<String, i64>,
    pub violated: Vec<String>,
    pub cycle: Vec<[Eid; 2]>,
}

pub fn to_json(w: &ExecutionWitness, g: &EventGraph, src: &str, tgt: &str, verdict: &str) -> String {
    let pairs = |s: &Pairs| s.iter().map(|&(a, b)| [a, b]).collect();
    let doc = WitnessJson {
        program: g.program.name.clone(),
        source_model: src.to_string(),
        target_model: tgt.to_string(),
        verdict: verdict.to_string(),
        executed: w.executed.iter().copied().collect(),
        rf: pairs(&w.rf),
        co: pairs(&w.co),
        values: w.values.clone(),
        state: reach_state(w, g),
        violated: w.violated.clone(),
        cycle: pairs(&w.cycle),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Parse a witness document back; derived relations and control flow are not stored.
pub fn from_json(text: &str) -> Result<(WitnessJson, ExecutionWitness), serde_json::Error> {
    let doc: WitnessJson = serde_json::from_str(text)?;
    let pairs = |v: &[[Eid; 2]]| v.iter().map(|p| (p[0], p[1])).collect();
    let w = ExecutionWitness {
        executed: doc.executed.iter().copied().collect(),
        rf: pairs(&doc.rf),
        co: pairs(&doc.co),
        values: doc.values.clone(),
        registers: doc.state.iter().filter(|(k, _)| k.contains(':')).map(|(k, v)| (k.clone(), *v)).collect(),
        violated: doc.violated.clone(),
        cycle: pairs(&doc.cycle),
        ..Default::default()
    };
    Ok((doc, w))
}
