//! Portability of a high-level program across two compilations whose memory
//! instructions carry `@hl` labels naming their high-level origin.

use super::{BoolExpr, Encoder, Formula};
use crate::cat::{MemoryModel, ModelNodes};
use crate::events::{EventGraph, EventKind};
use crate::prog::{InstrKind, Program};
use std::collections::{BTreeMap, BTreeSet};

pub struct HighLevelEncoding<'g> {
    pub formula: Formula,
    pub s: Encoder<'g>,
    pub t: Encoder<'g>,
    pub src: ModelNodes,
    pub tgt: ModelNodes,
}

/// Identifiers of the memory instructions of `p`: the `@hl` label when
/// present, else the instruction id.
pub fn highlevel_ids(p: &Program) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = p.locations().into_iter().map(|l| format!("init.{l}")).collect();
    for t in &p.threads {
        t.body.walk(&mut |i| {
            if matches!(i.kind, InstrKind::Load { .. } | InstrKind::Store { .. }) {
                out.insert(i.hl.map_or_else(|| i.iid.to_string(), |h| h.to_string()));
            }
        });
    }
    out
}

fn origins(g: &EventGraph, ids: &BTreeSet<String>, side: &str) -> Result<Vec<String>, String> {
    g.events
        .iter()
        .map(|e| {
            let id = match (e.kind, e.hl) {
                (EventKind::Init, _) => format!("init.{}", e.loc),
                (_, Some(h)) => h.to_string(),
                (_, None) => return Err(format!("{side}: memory instruction {} has no @hl label", e.iid.unwrap_or(0))),
            };
            if ids.contains(&id) {
                Ok(id)
            } else {
                Err(format!("{side}: label {id} names no high-level memory instruction"))
            }
        })
        .collect()
}

/// Satisfiable iff the target compilation has an execution consistent with
/// `tgt` whose high-level projection is also the projection of an execution
/// of the source compilation that violates `src`.
pub fn encode_highlevel_portability<'g>(
    p_h: &Program,
    s: &'g EventGraph,
    t: &'g EventGraph,
    src: &MemoryModel,
    tgt: &MemoryModel,
) -> Result<HighLevelEncoding<'g>, String> {
    let ids = highlevel_ids(p_h);
    let hs = origins(s, &ids, "source program")?;
    let ht = origins(t, &ids, "target program")?;
    let mut f = Formula::new();

    let mut es = Encoder::new(s, "S_");
    let src_nodes = es.add_model(src, "src");
    es.finalize();
    es.program(&mut f);
    es.elaborate(&mut f, &src_nodes);
    es.assert_violation(&mut f, &src_nodes);
    es.final_values(&mut f);

    let mut et = Encoder::new(t, "T_");
    let tgt_nodes = et.add_model(tgt, "tgt");
    et.finalize();
    et.program(&mut f);
    et.elaborate(&mut f, &tgt_nodes);
    et.assert_axioms(&mut f, &tgt_nodes);
    et.final_values(&mut f);

    let mut edges: BTreeSet<(&str, String, String)> = BTreeSet::new();
    for (g, h) in [(s, &hs), (t, &ht)] {
        for (rel, may) in [("rfH", &g.rf_may), ("coH", &g.co_may)] {
            edges.extend(may.pairs().filter(|&(a, b)| h[a] != h[b]).map(|(a, b)| (rel, h[a].clone(), h[b].clone())));
        }
    }
    for (enc, h) in [(&es, &hs), (&et, &ht)] {
        project(&mut f, enc, h, &edges);
    }
    Ok(HighLevelEncoding { formula: f, s: es, t: et, src: src_nodes, tgt: tgt_nodes })
}

/// Tie one low-level encoding to the shared high-level execution variables.
fn project(f: &mut Formula, enc: &Encoder, h: &[String], edges: &BTreeSet<(&str, String, String)>) {
    let g = enc.g;
    let mut by_origin: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (e, id) in h.iter().enumerate() {
        by_origin.entry(id).or_default().push(e);
    }
    for (id, evs) in &by_origin {
        let exec = f.bool_var(&format!("exec_H_{id}"), true);
        let exs: Vec<BoolExpr> = evs.iter().map(|&e| enc.ex(f, e)).collect();
        for ex in &exs {
            f.assert(BoolExpr::implies(ex.clone(), exec.clone()));
        }
        f.assert(BoolExpr::implies(exec, BoolExpr::or(exs)));
    }
    let mut realized: BTreeMap<(&str, &str, &str), Vec<BoolExpr>> = BTreeMap::new();
    for (rel, may) in [("rfH", &g.rf_may), ("coH", &g.co_may)] {
        for (a, b) in may.pairs().filter(|&(a, b)| h[a] != h[b]) {
            let low = if rel == "rfH" { enc.rf(f, a, b) } else { enc.co(f, a, b) };
            realized.entry((rel, &h[a], &h[b])).or_default().push(low);
        }
    }
    for (rel, x, y) in edges {
        let high = f.bool_var(&format!("{rel}_{x}_{y}"), true);
        let lows = realized.get(&(*rel, x.as_str(), y.as_str())).cloned().unwrap_or_default();
        for low in &lows {
            f.assert(BoolExpr::implies(low.clone(), high.clone()));
        }
        f.assert(BoolExpr::implies(high, BoolExpr::or(lows)));
    }
}
