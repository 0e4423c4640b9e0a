//! Existential constraint encodings: portability, reachability, deadness and
//! the high-level variant, all over the solver-agnostic [`Formula`] IR.

mod formula;
mod highlevel;
pub mod names;
mod program;
mod relations;

pub use formula::{BoolExpr, Formula, IntExpr, Name};
pub use highlevel::{encode_highlevel_portability, HighLevelEncoding};

use crate::cat::{MemoryModel, ModelNodes, NodeId, TermDag};
use crate::events::{EventGraph, MaySets};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Conjoin the deadness constraints.
    pub dead: bool,
    /// Deadness: control-dependent reads must read from a non-initial write.
    pub dead_strict: bool,
}

/// Final state: locations and `tid:reg` registers mapped to values.
pub type State = BTreeMap<String, i64>;

/// Which keys of a final state take part in state comparisons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StateScope {
    #[default]
    Full,
    /// Locations only; registers are ignored.
    Locations,
}

impl StateScope {
    pub fn project(self, mut s: State) -> State {
        if self == StateScope::Locations {
            s.retain(|k, _| !k.contains(':'));
        }
        s
    }
}

/// Encoding of one event graph together with the relation terms elaborated on it.
pub struct Encoder<'g> {
    pub g: &'g EventGraph,
    /// Prepended to every variable name.
    pub prefix: String,
    pub dag: TermDag,
    may: Option<MaySets>,
    labels: Vec<String>,
    comp_of: Vec<usize>,
    comps: Vec<(Vec<NodeId>, bool)>,
    done: Vec<bool>,
    /// State key (`tid:reg`) to the value the register holds at thread end.
    pub final_regs: BTreeMap<String, IntExpr>,
    dead: Option<(NodeId, NodeId, NodeId)>,
}

impl<'g> Encoder<'g> {
    pub fn new(g: &'g EventGraph, prefix: &str) -> Self {
        Encoder {
            g,
            prefix: prefix.to_string(),
            dag: TermDag::new(),
            may: None,
            labels: Vec::new(),
            comp_of: Vec::new(),
            comps: Vec::new(),
            done: Vec::new(),
            final_regs: BTreeMap::new(),
            dead: None,
        }
    }

    /// Register a model's terms; must precede [`Encoder::finalize`].
    pub fn add_model(&mut self, m: &MemoryModel, ns: &str) -> ModelNodes {
        assert!(self.may.is_none(), "terms added after finalize");
        self.dag.add_model(m, ns)
    }

    /// Freeze the term DAG and compute may sets.
    pub fn finalize(&mut self) {
        let may = MaySets::compute(&self.dag, self.g);
        self.comps = self.dag.components();
        self.comp_of = vec![0; self.dag.len()];
        for (i, (c, _)) in self.comps.iter().enumerate() {
            for &id in c {
                self.comp_of[id] = i;
            }
        }
        self.labels = (0..self.dag.len()).map(|i| self.dag.label(i)).collect();
        self.done = vec![false; self.dag.len()];
        self.may = Some(may);
    }

    pub fn may(&self) -> &MaySets {
        self.may.as_ref().expect("finalize first")
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id]
    }
}

/// A finished portability or reachability encoding plus what decoding needs.
pub struct Encoding<'g> {
    pub formula: Formula,
    pub enc: Encoder<'g>,
    pub src: Option<ModelNodes>,
    pub tgt: Option<ModelNodes>,
}

/// Satisfiable iff some execution is consistent with `tgt` but violates `src`.
pub fn encode_portability<'g>(g: &'g EventGraph, src: &MemoryModel, tgt: &MemoryModel, opts: &Options) -> Encoding<'g> {
    let mut f = Formula::new();
    let mut e = Encoder::new(g, "");
    let t = e.add_model(tgt, "tgt");
    let s = e.add_model(src, "src");
    if opts.dead {
        e.prepare_deadness();
    }
    e.finalize();
    e.program(&mut f);
    e.elaborate(&mut f, &t);
    e.assert_axioms(&mut f, &t);
    e.elaborate(&mut f, &s);
    e.assert_violation(&mut f, &s);
    if opts.dead {
        e.deadness(&mut f, opts.dead_strict);
    }
    e.final_values(&mut f);
    Encoding { formula: f, enc: e, src: Some(s), tgt: Some(t) }
}

/// Satisfiable iff some `m`-consistent execution ends in a state satisfying `pred`.
pub fn encode_reachability_pred<'g>(g: &'g EventGraph, m: &MemoryModel, pred: &crate::prog::Pred) -> Result<Encoding<'g>, String> {
    let mut f = Formula::new();
    let mut e = Encoder::new(g, "");
    let nodes = e.add_model(m, "m");
    e.finalize();
    e.program(&mut f);
    e.elaborate(&mut f, &nodes);
    e.assert_axioms(&mut f, &nodes);
    e.final_values(&mut f);
    let p = e.state_pred(&mut f, pred)?;
    f.assert(p);
    Ok(Encoding { formula: f, enc: e, src: None, tgt: Some(nodes) })
}

/// Satisfiable iff some `m`-consistent execution ends in exactly state `sigma`.
pub fn encode_reachability<'g>(g: &'g EventGraph, m: &MemoryModel, sigma: &State) -> Result<Encoding<'g>, String> {
    let mut f = Formula::new();
    let mut e = Encoder::new(g, "");
    let nodes = e.add_model(m, "m");
    e.finalize();
    e.program(&mut f);
    e.elaborate(&mut f, &nodes);
    e.assert_axioms(&mut f, &nodes);
    e.final_values(&mut f);
    let eq = e.state_equals(&mut f, sigma)?;
    f.assert(eq);
    Ok(Encoding { formula: f, enc: e, src: None, tgt: Some(nodes) })
}

#[cfg(test)]
mod tests;
