//! Kleene-iteration semantics of models over a concrete execution.

use super::{AxiomKind, BaseRel, EventSet, MemoryModel, RelTerm};
use crate::rel::Relation;
use std::collections::{BTreeMap, HashMap};

/// Base relations and event classes of one execution. All relations range
/// over executed events only.
#[derive(Clone, Debug)]
pub struct Execution {
    pub n: usize,
    pub executed: Vec<bool>,
    /// Executed writes, initial writes included.
    pub writes: Vec<bool>,
    pub reads: Vec<bool>,
    pub base: HashMap<BaseRel, Relation>,
}

impl Execution {
    fn set(&self, s: EventSet) -> &[bool] {
        match s {
            EventSet::Ev => &self.executed,
            EventSet::W => &self.writes,
            EventSet::R => &self.reads,
        }
    }

    pub fn base(&self, b: BaseRel) -> Relation {
        self.base.get(&b).map(|r| r.restrict(&self.executed)).unwrap_or_else(|| Relation::empty(self.n))
    }
}

#[derive(Clone, Debug)]
pub struct AxiomResult {
    pub label: String,
    pub kind: AxiomKind,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub relations: BTreeMap<String, Relation>,
    pub axioms: Vec<AxiomResult>,
}

impl Evaluation {
    pub fn consistent(&self) -> bool {
        self.axioms.iter().all(|a| a.holds)
    }

    pub fn violated(&self) -> Vec<String> {
        self.axioms.iter().filter(|a| !a.holds).map(|a| a.label.clone()).collect()
    }
}

/// Evaluate `t` given values for the names it references.
pub fn eval_term(t: &RelTerm, x: &Execution, env: &HashMap<String, Relation>) -> Relation {
    let ev = |t: &RelTerm| eval_term(t, x, env);
    match t {
        RelTerm::Base(b) => x.base(*b),
        RelTerm::Name(n) => env.get(n).cloned().unwrap_or_else(|| Relation::empty(x.n)),
        RelTerm::Empty => Relation::empty(x.n),
        RelTerm::Union(a, b) => ev(a).union(&ev(b)),
        RelTerm::Inter(a, b) => ev(a).inter(&ev(b)),
        RelTerm::Diff(a, b) => ev(a).diff(&ev(b)),
        RelTerm::Seq(a, b) => ev(a).compose(&ev(b)),
        RelTerm::Inverse(a) => ev(a).inverse(),
        RelTerm::Plus(a) => ev(a).plus(),
        RelTerm::Star(a) => ev(a).plus().union(&Relation::identity(x.n, &x.executed)),
        RelTerm::Opt(a) => ev(a).union(&Relation::identity(x.n, &x.executed)),
        RelTerm::Id(s) => Relation::identity(x.n, x.set(*s)),
        RelTerm::Cart(a, b) => Relation::product(x.n, x.set(*a), x.set(*b)),
    }
}

/// Least solution of all definitions, then every axiom checked.
pub fn eval_model(m: &MemoryModel, x: &Execution) -> Evaluation {
    let plan = m.recursion_plan();
    let mut env: HashMap<String, Relation> = HashMap::new();
    for scc in &plan.sccs {
        let recursive = scc.iter().any(|n| plan.is_recursive(n));
        if !recursive {
            let n = &scc[0];
            let v = eval_term(m.definition(n).expect("planned name"), x, &env);
            env.insert(n.clone(), v);
            continue;
        }
        for n in scc {
            env.insert(n.clone(), Relation::empty(x.n));
        }
        loop {
            let mut changed = false;
            for n in scc {
                let v = eval_term(m.definition(n).expect("planned name"), x, &env);
                let cur = env.get_mut(n).expect("seeded");
                changed |= cur.union_with(&v);
            }
            if !changed {
                break;
            }
        }
    }
    let axioms = m
        .axioms
        .iter()
        .map(|a| {
            let r = eval_term(&a.term, x, &env);
            let holds = match a.kind {
                AxiomKind::Acyclic => r.is_acyclic(),
                AxiomKind::Irreflexive => r.is_irreflexive(),
            };
            AxiomResult { label: a.label.clone(), kind: a.kind, holds }
        })
        .collect();
    Evaluation { relations: env.into_iter().collect(), axioms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::{builtin_model, parse_cat};

    /// Three executed events in one thread: e0 po e1 po e2.
    fn line() -> Execution {
        let n = 3;
        let mut base = HashMap::new();
        base.insert(BaseRel::Po, Relation::from_pairs(n, [(0, 1), (1, 2), (0, 2)]));
        Execution { n, executed: vec![true; n], writes: vec![true, false, false], reads: vec![false, true, true], base }
    }

    #[test]
    fn composition() {
        let x = line();
        let m = parse_cat("model m\na := po ; po").unwrap();
        assert_eq!(eval_model(&m, &x).relations["a"].to_set(), [(0, 2)].into());
    }

    #[test]
    fn star_on_single_event() {
        let mut base = HashMap::new();
        base.insert(BaseRel::Po, Relation::empty(1));
        let x = Execution { n: 1, executed: vec![true], writes: vec![true], reads: vec![false], base };
        let t = parse_cat("model m\na := po^*").unwrap();
        assert_eq!(eval_model(&t, &x).relations["a"].to_set(), [(0, 0)].into());
    }

    #[test]
    fn toy_recursion_is_union() {
        let x = line();
        let m = parse_cat("model toy\nr3 := po & W*R\nr4 := id(R)\nr1 := r2 | r3\nr2 := r1 | r4").unwrap();
        let e = eval_model(&m, &x);
        let want = e.relations["r3"].union(&e.relations["r4"]);
        assert_eq!(e.relations["r1"], want);
        assert_eq!(e.relations["r2"], want);
    }

    #[test]
    fn unexecuted_events_never_participate() {
        let mut x = line();
        x.executed[2] = false;
        x.reads[2] = false;
        let m = parse_cat("model m\na := po | id(EV) | EV*EV").unwrap();
        let r = &eval_model(&m, &x).relations["a"];
        assert!(r.pairs().all(|(a, b)| a < 2 && b < 2));
    }

    #[test]
    fn fixpoint_is_stable() {
        let x = line();
        let m = builtin_model("power").unwrap();
        let e = eval_model(&m, &x);
        let env: HashMap<String, Relation> = e.relations.clone().into_iter().collect();
        for d in &m.definitions {
            assert_eq!(eval_term(&d.term, &x, &env), e.relations[&d.name], "{}", d.name);
        }
    }
}
