//! Static over-approximation of every relation term on a given graph.

use super::{EventGraph, EventKind};
use crate::cat::{EventSet, MemoryModel, Node, NodeId, RelTerm, TermDag};
use crate::rel::Relation;
use std::collections::BTreeSet;

/// May set of every node of a DAG.
#[derive(Clone, Debug)]
pub struct MaySets {
    sets: Vec<Relation>,
}

fn members(g: &EventGraph, s: EventSet) -> Vec<bool> {
    g.events
        .iter()
        .map(|e| match s {
            EventSet::Ev => true,
            EventSet::W => e.is_write(),
            EventSet::R => e.kind == EventKind::Read,
        })
        .collect()
}

impl MaySets {
    pub fn compute(dag: &TermDag, g: &EventGraph) -> MaySets {
        let n = g.len();
        let mut sets = vec![Relation::empty(n); dag.len()];
        for (comp, cyclic) in dag.components() {
            loop {
                let mut changed = false;
                for &id in &comp {
                    let v = Self::step(dag, g, &sets, id).inter(&g.coexec);
                    changed |= sets[id].union_with(&v);
                }
                if !cyclic || !changed {
                    break;
                }
            }
        }
        MaySets { sets }
    }

    fn step(dag: &TermDag, g: &EventGraph, s: &[Relation], id: NodeId) -> Relation {
        let n = g.len();
        match dag.node(id) {
            Node::Base(b) => g.induced_pairs(*b),
            Node::Empty => Relation::empty(n),
            Node::Id(set) => Relation::identity(n, &members(g, *set)),
            Node::Cart(a, b) => Relation::product(n, &members(g, *a), &members(g, *b)),
            Node::Union(a, b) => s[*a].union(&s[*b]),
            Node::Inter(a, b) => s[*a].inter(&s[*b]),
            Node::Diff(a, _) => s[*a].clone(),
            Node::Seq(a, b) => s[*a].compose(&s[*b]),
            Node::Inverse(a) => s[*a].inverse(),
            Node::Plus(a) => s[*a].plus(),
            Node::Star(a) => s[*a].plus().union(&Relation::identity(n, &vec![true; n])),
            Node::Opt(a) => s[*a].union(&Relation::identity(n, &vec![true; n])),
        }
    }

    pub fn get(&self, id: NodeId) -> &Relation {
        &self.sets[id]
    }

    pub fn total_pairs(&self) -> usize {
        self.sets.iter().map(|r| r.len()).sum()
    }
}

/// May set of a single term elaborated against `m`.
pub fn may(t: &RelTerm, g: &EventGraph, m: &MemoryModel) -> BTreeSet<(usize, usize)> {
    let mut dag = TermDag::new();
    let id = dag.intern_term(t, m, "m");
    MaySets::compute(&dag, g).get(id).to_set()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::{builtin_model, parse_cat};

    use crate::prog::parse_program;

    fn graph(src: &str) -> EventGraph {
        EventGraph::compile(&parse_program(src).unwrap()).unwrap()
    }

    #[test]
    fn rf_candidates_on_sb() {
        let g = graph("program sb\nthread t0\n x := 1;\n r0 <- y\nthread t1\n y := 1;\n r1 <- x");
        let rf = may(&RelTerm::Base(crate::cat::BaseRel::Rf), &g, &MemoryModel::empty());
        // Ix=0 Iy=1 Wx=2 Ry=3 Wy=4 Rx=5
        assert_eq!(rf, [(0, 5), (1, 3), (2, 5), (4, 3)].into());
    }

    #[test]
    fn po_minus_wr_on_iriw() {
        let g = graph(super::super::tests::IRIW);
        let tso = builtin_model("tso").unwrap();
        let t = parse_cat("model m\na := po \\ W*R").unwrap();
        let po = may(&RelTerm::Base(crate::cat::BaseRel::Po), &g, &tso);
        assert_eq!(may(t.definition("a").unwrap(), &g, &t), po);
        assert!(may(&RelTerm::Empty, &g, &tso).is_empty());
    }
}
