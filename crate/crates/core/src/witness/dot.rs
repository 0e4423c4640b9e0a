use super::{to_execution, ExecutionWitness};
use crate::cat::BaseRel;
use crate::events::{EventGraph, EventKind};
use std::fmt::Write as _;

/// Graphviz rendering: one cluster per thread, po/rf/co/fr edges, and the
/// guessed cycle in red.
pub fn to_dot(w: &ExecutionWitness, g: &EventGraph) -> String {
    let mut out = String::from("digraph execution {\n  rankdir=TB;\n  node [shape=plaintext];\n");
    let x = to_execution(w, g);
    let label = |e: usize| {
        let ev = &g.events[e];
        let k = match ev.kind {
            EventKind::Init => "I",
            EventKind::Write => "W",
            EventKind::Read => "R",
        };
        match w.values.get(&e) {
            Some(v) => format!("{k}{}{v}", ev.loc),
            None => format!("{k}{}", ev.loc),
        }
    };
    let inits: Vec<usize> = g.events.iter().filter(|e| e.kind == EventKind::Init && w.executed.contains(&e.eid)).map(|e| e.eid).collect();
    if !inits.is_empty() {
        out.push_str("  subgraph cluster_init {\n    label=\"init\";\n");
        for e in inits {
            let _ = writeln!(out, "    e{e} [label=\"{}\"];", label(e));
        }
        out.push_str("  }\n");
    }
    for (t, th) in g.program.threads.iter().enumerate() {
        let evs: Vec<usize> = g.events.iter().filter(|e| e.thread == Some(t) && w.executed.contains(&e.eid)).map(|e| e.eid).collect();
        if evs.is_empty() {
            continue;
        }
        let _ = writeln!(out, "  subgraph cluster_{t} {{\n    label=\"{}\";", th.tid);
        for e in evs {
            let _ = writeln!(out, "    e{e} [label=\"{}\"];", label(e));
        }
        out.push_str("  }\n");
    }
    let po = x.base(BaseRel::Po);
    let po_imm = po.diff(&po.compose(&po));
    let rf = x.base(BaseRel::Rf);
    let co = x.base(BaseRel::Co);
    let co_imm = co.diff(&co.compose(&co));
    let fr = rf.inverse().compose(&co);
    let edge = |out: &mut String, a: usize, b: usize, name: &str, color: &str| {
        let c = if w.cycle.contains(&(a, b)) { "red" } else { color };
        let _ = writeln!(out, "  e{a} -> e{b} [label=\"{name}\", color={c}, fontcolor={c}];");
    };
    for (a, b) in po_imm.pairs() {
        edge(&mut out, a, b, "po", "black");
    }
    for (a, b) in rf.pairs() {
        let internal = g.events[a].thread.is_some() && g.events[a].thread == g.events[b].thread;
        edge(&mut out, a, b, if internal { "rfi" } else { "rfe" }, "darkgreen");
    }
    for (a, b) in co_imm.pairs() {
        edge(&mut out, a, b, "co", "blue");
    }
    for (a, b) in fr.pairs() {
        edge(&mut out, a, b, "fr", "orange");
    }
    out.push_str("}\n");
    out
}
