//! Hash-consed relation terms shared across models.
//!
//! Non-recursive names are inlined; each recursive name becomes a node whose
//! operands may point back at itself. Structurally equal subterms map to the
//! same node, so the encoder creates one variable family per distinct term.

use super::{AxiomKind, BaseRel, EventSet, MemoryModel, RelTerm};
use std::collections::{BTreeMap, HashMap, HashSet};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Base(BaseRel),
    Empty,
    Id(EventSet),
    Cart(EventSet, EventSet),
    Union(NodeId, NodeId),
    Inter(NodeId, NodeId),
    Diff(NodeId, NodeId),
    Seq(NodeId, NodeId),
    Inverse(NodeId),
    Plus(NodeId),
    Star(NodeId),
    Opt(NodeId),
}

impl Node {
    pub fn children(&self) -> Vec<NodeId> {
        match *self {
            Node::Union(a, b) | Node::Inter(a, b) | Node::Diff(a, b) | Node::Seq(a, b) => vec![a, b],
            Node::Inverse(a) | Node::Plus(a) | Node::Star(a) | Node::Opt(a) => vec![a],
            _ => vec![],
        }
    }
}

/// Nodes of one model inside a shared DAG.
#[derive(Clone, Debug)]
pub struct ModelNodes {
    pub ns: String,
    /// Every name that was resolved, including used prelude names.
    pub defs: BTreeMap<String, NodeId>,
    pub axioms: Vec<(AxiomKind, String, NodeId)>,
}

#[derive(Clone, Debug, Default)]
pub struct TermDag {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    labels: Vec<Option<String>>,
    used_labels: HashSet<String>,
    resolved: HashMap<(String, String), NodeId>,
}

impl TermDag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Stable display name used in variable names.
    pub fn label(&self, id: NodeId) -> String {
        match (&self.nodes[id], &self.labels[id]) {
            (Node::Base(b), _) => b.name().to_string(),
            (_, Some(l)) => l.clone(),
            _ => format!("t{id}"),
        }
    }

    pub fn find(&self, n: &Node) -> Option<NodeId> {
        self.index.get(n).copied()
    }

    pub fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n.clone());
        self.labels.push(None);
        self.index.insert(n, id);
        id
    }

    fn name_node(&mut self, id: NodeId, label: String) {
        if self.labels[id].is_none() && !matches!(self.nodes[id], Node::Base(_)) && self.used_labels.insert(label.clone()) {
            self.labels[id] = Some(label);
        }
    }

    fn label_for(m: &MemoryModel, ns: &str, name: &str) -> String {
        let prelude = m.definitions.iter().any(|d| d.name == name && d.prelude);
        if prelude {
            name.to_string()
        } else {
            format!("{ns}.{name}")
        }
    }

    /// Node of a named definition of `m`, resolving lazily.
    pub fn resolve(&mut self, m: &MemoryModel, ns: &str, name: &str) -> NodeId {
        let key = (ns.to_string(), name.to_string());
        if let Some(&id) = self.resolved.get(&key) {
            return id;
        }
        let plan = m.recursion_plan();
        if !plan.is_recursive(name) {
            let body = m.definition(name).expect("validated model").clone();
            let id = self.intern_term(&body, m, ns);
            self.resolved.insert(key, id);
            self.name_node(id, Self::label_for(m, ns, name));
            return id;
        }
        // Allocate one node per member of the strongly connected component,
        // then fill in each body, which may refer back to the members.
        let scc = plan.sccs.iter().find(|c| c.iter().any(|n| n == name)).expect("planned").clone();
        let mut slots = Vec::new();
        for n in &scc {
            let id = self.nodes.len();
            self.nodes.push(Node::Empty);
            self.labels.push(None);
            self.resolved.insert((ns.to_string(), n.clone()), id);
            self.name_node(id, Self::label_for(m, ns, n));
            slots.push(id);
        }
        for (n, id) in scc.iter().zip(slots) {
            let body = m.definition(n).expect("validated model").clone();
            let node = match self.shape(&body, m, ns) {
                Ok(node) => node,
                Err(alias) => {
                    let e = self.intern(Node::Empty);
                    Node::Union(alias, e)
                }
            };
            self.nodes[id] = node.clone();
            self.index.entry(node).or_insert(id);
        }
        self.resolved[&key]
    }

    /// Top-level node of `t` without interning it; `Err(id)` when `t` is a bare name.
    fn shape(&mut self, t: &RelTerm, m: &MemoryModel, ns: &str) -> Result<Node, NodeId> {
        let mut sub = |t: &RelTerm| self.intern_term(t, m, ns);
        Ok(match t {
            RelTerm::Name(n) => return Err(self.resolve(m, ns, n)),
            RelTerm::Base(b) => Node::Base(*b),
            RelTerm::Empty => Node::Empty,
            RelTerm::Id(s) => Node::Id(*s),
            RelTerm::Cart(a, b) => Node::Cart(*a, *b),
            RelTerm::Union(a, b) => Node::Union(sub(a), sub(b)),
            RelTerm::Inter(a, b) => Node::Inter(sub(a), sub(b)),
            RelTerm::Diff(a, b) => Node::Diff(sub(a), sub(b)),
            RelTerm::Seq(a, b) => Node::Seq(sub(a), sub(b)),
            RelTerm::Inverse(a) => Node::Inverse(sub(a)),
            RelTerm::Plus(a) => Node::Plus(sub(a)),
            RelTerm::Star(a) => {
                let inner = sub(a);
                self.intern(Node::Plus(inner));
                Node::Star(inner)
            }
            RelTerm::Opt(a) => Node::Opt(sub(a)),
        })
    }

    /// Intern an arbitrary term whose names refer to definitions of `m`.
    pub fn intern_term(&mut self, t: &RelTerm, m: &MemoryModel, ns: &str) -> NodeId {
        match self.shape(t, m, ns) {
            Ok(node) => self.intern(node),
            Err(id) => id,
        }
    }

    /// Add every user definition and axiom of `m` under namespace `ns`.
    pub fn add_model(&mut self, m: &MemoryModel, ns: &str) -> ModelNodes {
        for d in m.definitions.iter().filter(|d| !d.prelude) {
            self.resolve(m, ns, &d.name);
        }
        let axioms = m.axioms.iter().map(|a| (a.kind, a.label.clone(), self.intern_term(&a.term, m, ns))).collect();
        let defs = self
            .resolved
            .iter()
            .filter(|((n, _), _)| n == ns)
            .map(|((_, name), &id)| (name.clone(), id))
            .collect();
        ModelNodes { ns: ns.to_string(), defs, axioms }
    }

    /// Strongly connected components of the node graph (children first),
    /// each flagged cyclic when it needs a least-fixpoint treatment.
    pub fn components(&self) -> Vec<(Vec<NodeId>, bool)> {
        let mut g = petgraph::graph::DiGraph::<NodeId, ()>::new();
        let idx: Vec<_> = (0..self.nodes.len()).map(|i| g.add_node(i)).collect();
        for (i, n) in self.nodes.iter().enumerate() {
            for c in n.children() {
                g.add_edge(idx[i], idx[c], ());
            }
        }
        petgraph::algo::tarjan_scc(&g)
            .into_iter()
            .map(|comp| {
                let mut ids: Vec<NodeId> = comp.iter().map(|&n| g[n]).collect();
                ids.sort_unstable();
                let cyclic = ids.len() > 1 || self.nodes[ids[0]].children().contains(&ids[0]);
                (ids, cyclic)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::{builtin_model, parse_cat};

    #[test]
    fn shared_subterms() {
        let mut dag = TermDag::new();
        let tso = builtin_model("tso").unwrap();
        let power = builtin_model("power").unwrap();
        let a = dag.add_model(&tso, "src");
        let b = dag.add_model(&power, "tgt");
        // Both uniproc axioms are the same term.
        assert_eq!(a.axioms[0].2, b.axioms[0].2);
        assert_eq!(a.defs["fr"], b.defs["fr"]);
        assert_eq!(dag.label(a.defs["fr"]), "fr");
    }

    #[test]
    fn power_cycle() {
        let mut dag = TermDag::new();
        let m = builtin_model("power").unwrap();
        let nodes = dag.add_model(&m, "tgt");
        let comps = dag.components();
        let ii = nodes.defs["ii"];
        let (comp, cyclic) = comps.iter().find(|(c, _)| c.contains(&ii)).unwrap();
        assert!(cyclic);
        for n in ["ci", "ic", "cc"] {
            assert!(comp.contains(&nodes.defs[n]));
        }
        assert!(!comp.contains(&nodes.defs["ppo"]));
        assert_eq!(dag.label(ii), "tgt.ii");
    }

    #[test]
    fn recursive_alias() {
        let mut dag = TermDag::new();
        let m = parse_cat("model m\na := b\nb := a | po").unwrap();
        let nodes = dag.add_model(&m, "m");
        assert!(matches!(dag.node(nodes.defs["a"]), Node::Union(_, _)));
    }
}
