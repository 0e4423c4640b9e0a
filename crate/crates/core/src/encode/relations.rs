//! Relation terms as Boolean variables over their may sets, plus the axiom
//! gadgets (rank-based acyclicity, cycle guessing, reflexive witnesses).

use super::names;
use super::{BoolExpr, Encoder, Formula, IntExpr};
use crate::cat::{AxiomKind, BaseRel, MemoryModel, ModelNodes, Node, NodeId, RelTerm};
use crate::events::EventKind;
use crate::rel::Relation;

/// One way a pair can enter a relation, with the operand pairs it uses.
struct Premise {
    cond: BoolExpr,
    uses: Vec<(NodeId, usize, usize)>,
}

fn imm(r: RelTerm) -> RelTerm {
    RelTerm::diff(r.clone(), RelTerm::seq(r.clone(), RelTerm::Plus(Box::new(r))))
}

fn opt(r: RelTerm) -> RelTerm {
    RelTerm::Opt(Box::new(r))
}

fn inv(r: RelTerm) -> RelTerm {
    RelTerm::Inverse(Box::new(r))
}

impl Encoder<'_> {
    /// Literal for `(a, b)` in node `id`; constant false outside the may set.
    pub fn lit(&self, f: &mut Formula, id: NodeId, a: usize, b: usize) -> BoolExpr {
        if !self.may().get(id).contains(a, b) {
            return BoolExpr::False;
        }
        match self.dag.node(id) {
            Node::Base(BaseRel::Rf) => self.rf(f, a, b),
            Node::Base(BaseRel::Co) => self.co(f, a, b),
            _ => f.bool_var(&names::rel(&self.prefix, self.label(id), a, b), true),
        }
    }

    fn phi(&self, f: &mut Formula, id: NodeId, a: usize, b: usize) -> IntExpr {
        f.int_var(&names::phi(&self.prefix, self.label(id), a, b), false)
    }

    /// Encode every definition and axiom term of a model.
    pub fn elaborate(&mut self, f: &mut Formula, nodes: &ModelNodes) {
        for &id in nodes.defs.values() {
            self.ensure(f, id);
        }
        for (_, _, id) in &nodes.axioms {
            self.ensure(f, *id);
        }
    }

    /// Define the variables of `id` (and, first, of everything it depends on).
    pub fn ensure(&mut self, f: &mut Formula, id: NodeId) {
        if self.done[id] {
            return;
        }
        let comp = self.comp_of[id];
        let (members, cyclic) = self.comps[comp].clone();
        for &m in &members {
            self.done[m] = true;
        }
        let mut deps: Vec<NodeId> = members.iter().flat_map(|&m| self.dag.node(m).children()).collect();
        for &m in &members {
            if let Node::Star(x) = self.dag.node(m) {
                if !cyclic {
                    deps.push(self.dag.find(&Node::Plus(*x)).expect("star interns its plus"));
                }
            }
        }
        for d in deps {
            if self.comp_of[d] != comp {
                self.ensure(f, d);
            }
        }
        if cyclic {
            for &m in &members {
                self.define_recursive(f, m, &members);
            }
        } else {
            self.define(f, id);
        }
    }

    fn define(&mut self, f: &mut Formula, id: NodeId) {
        let pairs: Vec<(usize, usize)> = self.may().get(id).pairs().collect();
        match *self.dag.node(id) {
            Node::Base(BaseRel::Rf | BaseRel::Co) => {}
            // A closure is its own one-node fixpoint: `x | (id ; x)` with ranks.
            Node::Plus(_) => self.define_recursive(f, id, &[id]),
            _ => {
                for (a, b) in pairs {
                    let lit = self.lit(f, id, a, b);
                    let prem = self.premises(f, id, a, b, false);
                    f.assert(BoolExpr::iff(lit, BoolExpr::or(prem.into_iter().map(|p| p.cond))));
                }
            }
        }
    }

    /// Least fixpoint of a recursive component: each true pair must be
    /// derivable (closure) and derived from pairs with a smaller certificate.
    fn define_recursive(&mut self, f: &mut Formula, id: NodeId, comp: &[NodeId]) {
        let pairs: Vec<(usize, usize)> = self.may().get(id).pairs().collect();
        for (a, b) in pairs {
            let lit = self.lit(f, id, a, b);
            let prem = self.premises(f, id, a, b, true);
            f.assert(BoolExpr::iff(lit.clone(), BoolExpr::or(prem.iter().map(|p| p.cond.clone()))));
            let me = self.phi(f, id, a, b);
            let mut justified = Vec::new();
            for p in prem {
                let mut parts = vec![p.cond];
                for (c, x, y) in p.uses {
                    if comp.contains(&c) {
                        let other = self.phi(f, c, x, y);
                        parts.push(BoolExpr::lt(other, me.clone()));
                    }
                }
                justified.push(BoolExpr::and(parts));
            }
            f.assert(BoolExpr::implies(lit, BoolExpr::or(justified)));
        }
    }

    fn premises(&mut self, f: &mut Formula, id: NodeId, a: usize, b: usize, recursive: bool) -> Vec<Premise> {
        let node = self.dag.node(id).clone();
        let leaf = |cond| vec![Premise { cond, uses: vec![] }];
        let one = |this: &Self, f: &mut Formula, c: NodeId, x: usize, y: usize| Premise { cond: this.lit(f, c, x, y), uses: vec![(c, x, y)] };
        match node {
            Node::Base(b0) => {
                let guard = self.g.induced[&b0][&(a, b)].clone();
                let (ea, eb) = (self.ex(f, a), self.ex(f, b));
                let g = self.guard(f, &guard);
                leaf(BoolExpr::and([ea, eb, g]))
            }
            Node::Empty => vec![],
            Node::Id(_) => leaf(self.ex(f, a)),
            Node::Cart(_, _) => {
                let (ea, eb) = (self.ex(f, a), self.ex(f, b));
                leaf(BoolExpr::and([ea, eb]))
            }
            Node::Union(x, y) => vec![one(self, f, x, a, b), one(self, f, y, a, b)],
            Node::Inter(x, y) => {
                let (lx, ly) = (self.lit(f, x, a, b), self.lit(f, y, a, b));
                vec![Premise { cond: BoolExpr::and([lx, ly]), uses: vec![(x, a, b), (y, a, b)] }]
            }
            Node::Diff(x, y) => {
                let (lx, ly) = (self.lit(f, x, a, b), self.lit(f, y, a, b));
                vec![Premise { cond: BoolExpr::and([lx, BoolExpr::not(ly)]), uses: vec![(x, a, b)] }]
            }
            Node::Seq(x, y) => self.compositions(f, (x, a), (y, b)),
            Node::Inverse(x) => vec![one(self, f, x, b, a)],
            Node::Plus(x) => {
                let mut out = vec![one(self, f, x, a, b)];
                out.extend(self.compositions(f, (id, a), (x, b)));
                out
            }
            Node::Star(x) => {
                let mut out = if recursive {
                    self.compositions(f, (id, a), (x, b))
                } else {
                    let plus = self.dag.find(&Node::Plus(x)).expect("star interns its plus");
                    vec![one(self, f, plus, a, b)]
                };
                if a == b {
                    out.push(Premise { cond: self.ex(f, a), uses: vec![] });
                }
                out
            }
            Node::Opt(x) => {
                let mut out = vec![one(self, f, x, a, b)];
                if a == b {
                    out.push(Premise { cond: self.ex(f, a), uses: vec![] });
                }
                out
            }
        }
    }

    /// `(a, c) ∈ x ∧ (c, b) ∈ y` for every middle event `c` both may sets allow.
    fn compositions(&mut self, f: &mut Formula, (x, a): (NodeId, usize), (y, b): (NodeId, usize)) -> Vec<Premise> {
        let mids: Vec<usize> = self.may().get(x).successors(a).filter(|&c| self.may().get(y).contains(c, b)).collect();
        mids.into_iter()
            .map(|c| {
                let (l1, l2) = (self.lit(f, x, a, c), self.lit(f, y, c, b));
                Premise { cond: BoolExpr::and([l1, l2]), uses: vec![(x, a, c), (y, c, b)] }
            })
            .collect()
    }

    /// The model's axioms in positive form.
    pub fn assert_axioms(&mut self, f: &mut Formula, nodes: &ModelNodes) {
        for (kind, label, id) in &nodes.axioms {
            let ax = names::axiom(&nodes.ns, label);
            let pairs: Vec<(usize, usize)> = self.may().get(*id).pairs().collect();
            for (a, b) in pairs {
                let l = self.lit(f, *id, a, b);
                if a == b {
                    f.assert(BoolExpr::not(l));
                } else if *kind == AxiomKind::Acyclic {
                    let pa = f.int_var(&names::psi(&self.prefix, &ax, a), false);
                    let pb = f.int_var(&names::psi(&self.prefix, &ax, b), false);
                    f.assert(BoolExpr::implies(l, BoolExpr::lt(pa, pb)));
                }
            }
        }
    }

    /// At least one axiom of the model fails; `viol_<ns.label>` selects which.
    pub fn assert_violation(&mut self, f: &mut Formula, nodes: &ModelNodes) {
        let mut selectors = Vec::new();
        for (kind, label, id) in &nodes.axioms {
            let ax = names::axiom(&nodes.ns, label);
            let sel = f.bool_var(&names::viol(&self.prefix, &ax), true);
            selectors.push(sel.clone());
            let may = self.may().get(*id).clone();
            let gadget = match kind {
                AxiomKind::Irreflexive => {
                    let diag: Vec<BoolExpr> = (0..self.g.len()).map(|e| self.lit(f, *id, e, e)).collect();
                    BoolExpr::or(diag)
                }
                AxiomKind::Acyclic => self.cycle(f, &ax, *id, &may),
            };
            f.assert(BoolExpr::implies(sel, gadget));
        }
        f.assert(BoolExpr::or(selectors));
    }

    /// Guess a set of nodes and edges forming a cycle of `id`; returns the
    /// condition that the guess is nonempty.
    fn cycle(&mut self, f: &mut Formula, ax: &str, id: NodeId, may: &Relation) -> BoolExpr {
        let p = self.prefix.clone();
        let support: Vec<usize> = may.support().iter().enumerate().filter(|(_, &s)| s).map(|(e, _)| e).collect();
        let mut nodes = Vec::new();
        for &e in &support {
            let c = f.bool_var(&names::cyc(&p, ax, e), true);
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            for x in 0..self.g.len() {
                if may.contains(x, e) {
                    ins.push(f.bool_var(&names::cyc_edge(&p, ax, x, e), true));
                }
                if may.contains(e, x) {
                    outs.push(f.bool_var(&names::cyc_edge(&p, ax, e, x), true));
                }
            }
            f.assert(BoolExpr::implies(c.clone(), BoolExpr::and([BoolExpr::or(ins), BoolExpr::or(outs)])));
            nodes.push(c);
        }
        for (a, b) in may.pairs() {
            let edge = f.bool_var(&names::cyc_edge(&p, ax, a, b), true);
            let l = self.lit(f, id, a, b);
            let ca = f.bool_var(&names::cyc(&p, ax, a), true);
            let cb = f.bool_var(&names::cyc(&p, ax, b), true);
            f.assert(BoolExpr::implies(edge, BoolExpr::and([l, ca, cb])));
        }
        BoolExpr::or(nodes)
    }

    /// Intern the terms the deadness constraints mention; precedes finalize.
    pub fn prepare_deadness(&mut self) {
        let m = MemoryModel::empty();
        let co = RelTerm::Base(BaseRel::Co);
        let rf = RelTerm::Base(BaseRel::Rf);
        let po = RelTerm::Base(BaseRel::Po);
        let lhs = RelTerm::seq(RelTerm::seq(imm(co.clone()), imm(co.clone())), imm(inv(co)));
        let rhs = RelTerm::seq(opt(rf.clone()), opt(RelTerm::seq(po, opt(inv(rf)))));
        let l = self.dag.intern_term(&lhs, &m, "dead");
        let r = self.dag.intern_term(&rhs, &m, "dead");
        let cd = self.dag.intern(Node::Base(BaseRel::Cd));
        self.dead = Some((l, r, cd));
    }

    /// Rule out executions that are dead: control-dependent reads must be
    /// sourced, and coherence chains of immediate successors must be observed.
    pub fn deadness(&mut self, f: &mut Formula, strict: bool) {
        let (l, r, cd) = self.dead.expect("prepare_deadness before finalize");
        self.ensure(f, l);
        self.ensure(f, r);
        self.ensure(f, cd);
        let g = self.g;
        for read in g.events.iter().filter(|e| e.is_read()).map(|e| e.eid) {
            let succ: Vec<usize> = self.may().get(cd).successors(read).collect();
            if succ.is_empty() {
                continue;
            }
            let dep = BoolExpr::or(succ.into_iter().map(|e| self.lit(f, cd, read, e)).collect::<Vec<_>>());
            let sources: Vec<BoolExpr> = (0..g.len())
                .filter(|&w| g.rf_may.contains(w, read) && !(strict && g.events[w].kind == EventKind::Init))
                .map(|w| self.rf(f, w, read))
                .collect();
            f.assert(BoolExpr::implies(dep, BoolExpr::or(sources)));
        }
        let pairs: Vec<(usize, usize)> = self.may().get(l).pairs().collect();
        for (a, b) in pairs {
            let lhs = self.lit(f, l, a, b);
            let rhs = self.lit(f, r, a, b);
            f.assert(BoolExpr::implies(lhs, rhs));
        }
    }
}
