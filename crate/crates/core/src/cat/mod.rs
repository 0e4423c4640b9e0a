//! Core CAT: relation terms, memory models, recursion analysis and a
//! reference evaluator over concrete executions.

mod dag;
mod eval;
mod parse;

pub use dag::{ModelNodes, Node, NodeId, TermDag};
pub use eval::{eval_model, eval_term, Evaluation, Execution};
pub use parse::{parse_cat, CatError};

use petgraph::graph::DiGraph;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseRel {
    Po,
    Rf,
    Co,
    Ad,
    Dd,
    Cd,
    Int,
    Loc,
    Mfence,
    Sync,
    Lwsync,
    Isync,
}

impl BaseRel {
    pub const ALL: [BaseRel; 12] = [
        BaseRel::Po,
        BaseRel::Rf,
        BaseRel::Co,
        BaseRel::Ad,
        BaseRel::Dd,
        BaseRel::Cd,
        BaseRel::Int,
        BaseRel::Loc,
        BaseRel::Mfence,
        BaseRel::Sync,
        BaseRel::Lwsync,
        BaseRel::Isync,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseRel::Po => "po",
            BaseRel::Rf => "rf",
            BaseRel::Co => "co",
            BaseRel::Ad => "ad",
            BaseRel::Dd => "dd",
            BaseRel::Cd => "cd",
            BaseRel::Int => "int",
            BaseRel::Loc => "loc",
            BaseRel::Mfence => "mfence",
            BaseRel::Sync => "sync",
            BaseRel::Lwsync => "lwsync",
            BaseRel::Isync => "isync",
        }
    }

    pub fn from_name(s: &str) -> Option<BaseRel> {
        match s {
            "sthd" => Some(BaseRel::Int),
            "sloc" => Some(BaseRel::Loc),
            _ => BaseRel::ALL.into_iter().find(|b| b.name() == s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventSet {
    Ev,
    W,
    R,
}

impl EventSet {
    pub fn name(self) -> &'static str {
        match self {
            EventSet::Ev => "EV",
            EventSet::W => "W",
            EventSet::R => "R",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RelTerm {
    Base(BaseRel),
    Name(String),
    Empty,
    Union(Box<RelTerm>, Box<RelTerm>),
    Inter(Box<RelTerm>, Box<RelTerm>),
    Diff(Box<RelTerm>, Box<RelTerm>),
    Seq(Box<RelTerm>, Box<RelTerm>),
    Inverse(Box<RelTerm>),
    Plus(Box<RelTerm>),
    Star(Box<RelTerm>),
    Opt(Box<RelTerm>),
    Id(EventSet),
    Cart(EventSet, EventSet),
}

impl RelTerm {
    pub fn name(n: &str) -> RelTerm {
        RelTerm::Name(n.to_string())
    }

    pub fn union(a: RelTerm, b: RelTerm) -> RelTerm {
        RelTerm::Union(Box::new(a), Box::new(b))
    }

    pub fn inter(a: RelTerm, b: RelTerm) -> RelTerm {
        RelTerm::Inter(Box::new(a), Box::new(b))
    }

    pub fn diff(a: RelTerm, b: RelTerm) -> RelTerm {
        RelTerm::Diff(Box::new(a), Box::new(b))
    }

    pub fn seq(a: RelTerm, b: RelTerm) -> RelTerm {
        RelTerm::Seq(Box::new(a), Box::new(b))
    }

    /// Names referenced anywhere in the term.
    pub fn names(&self, out: &mut BTreeSet<String>) {
        match self {
            RelTerm::Name(n) => {
                out.insert(n.clone());
            }
            RelTerm::Union(a, b) | RelTerm::Inter(a, b) | RelTerm::Diff(a, b) | RelTerm::Seq(a, b) => {
                a.names(out);
                b.names(out);
            }
            RelTerm::Inverse(a) | RelTerm::Plus(a) | RelTerm::Star(a) | RelTerm::Opt(a) => a.names(out),
            RelTerm::Base(_) | RelTerm::Empty | RelTerm::Id(_) | RelTerm::Cart(..) => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            RelTerm::Union(..) => 1,
            RelTerm::Inter(..) => 2,
            RelTerm::Diff(..) => 3,
            RelTerm::Seq(..) => 4,
            RelTerm::Inverse(_) | RelTerm::Plus(_) | RelTerm::Star(_) | RelTerm::Opt(_) => 5,
            _ => 6,
        }
    }
}

impl fmt::Display for RelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, t: &RelTerm, min: u8| {
            if t.precedence() < min {
                write!(f, "({t})")
            } else {
                write!(f, "{t}")
            }
        };
        match self {
            RelTerm::Base(b) => f.write_str(b.name()),
            RelTerm::Name(n) => f.write_str(n),
            RelTerm::Empty => f.write_str("0"),
            RelTerm::Id(s) => write!(f, "id({})", s.name()),
            RelTerm::Cart(a, b) => write!(f, "{}*{}", a.name(), b.name()),
            RelTerm::Union(a, b) | RelTerm::Inter(a, b) | RelTerm::Diff(a, b) | RelTerm::Seq(a, b) => {
                let p = self.precedence();
                let op = match self {
                    RelTerm::Union(..) => " | ",
                    RelTerm::Inter(..) => " & ",
                    RelTerm::Diff(..) => " \\ ",
                    _ => " ; ",
                };
                sub(f, a, p)?;
                f.write_str(op)?;
                // Right operands of the same level need parentheses for `\` only.
                sub(f, b, if matches!(self, RelTerm::Diff(..)) { p + 1 } else { p })
            }
            RelTerm::Inverse(a) | RelTerm::Plus(a) | RelTerm::Star(a) | RelTerm::Opt(a) => {
                sub(f, a, 5)?;
                f.write_str(match self {
                    RelTerm::Inverse(_) => "^-1",
                    RelTerm::Plus(_) => "^+",
                    RelTerm::Star(_) => "^*",
                    _ => "^?",
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    Acyclic,
    Irreflexive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub term: RelTerm,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub term: RelTerm,
    /// Injected standard definition rather than written in the model file.
    pub prelude: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryModel {
    pub name: String,
    pub definitions: Vec<Definition>,
    pub axioms: Vec<Axiom>,
}

/// Standard derived relations available to every model.
pub const PRELUDE: &[(&str, &str)] = &[
    ("fr", "rf^-1 ; co"),
    ("rfe", "rf \\ int"),
    ("rfi", "rf & int"),
    ("coe", "co \\ int"),
    ("coi", "co & int"),
    ("fre", "fr \\ int"),
    ("fri", "fr & int"),
    ("com", "rf | co | fr"),
    ("poloc", "po & loc"),
];

impl MemoryModel {
    pub fn definition(&self, name: &str) -> Option<&RelTerm> {
        self.definitions.iter().find(|d| d.name == name).map(|d| &d.term)
    }

    /// SCC decomposition of the name-reference graph, dependencies first.
    pub fn recursion_plan(&self) -> RecursionPlan {
        let mut g = DiGraph::<&str, ()>::new();
        let idx: HashMap<&str, _> = self.definitions.iter().map(|d| (d.name.as_str(), g.add_node(&d.name))).collect();
        let mut self_loops = BTreeSet::new();
        for d in &self.definitions {
            let mut refs = BTreeSet::new();
            d.term.names(&mut refs);
            for r in refs {
                if r == d.name {
                    self_loops.insert(r.clone());
                }
                if let Some(&t) = idx.get(r.as_str()) {
                    g.add_edge(idx[d.name.as_str()], t, ());
                }
            }
        }
        let order: HashMap<&str, usize> = self.definitions.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
        let mut sccs = Vec::new();
        let mut recursive = BTreeSet::new();
        for comp in petgraph::algo::tarjan_scc(&g) {
            let mut names: Vec<String> = comp.iter().map(|&n| g[n].to_string()).collect();
            names.sort_by_key(|n| order[n.as_str()]);
            if names.len() > 1 || self_loops.contains(&names[0]) {
                recursive.extend(names.iter().cloned());
            }
            sccs.push(names);
        }
        RecursionPlan { sccs, recursive }
    }

    /// The `model empty` of no axioms.
    pub fn empty() -> MemoryModel {
        parse_cat("model empty").expect("static model")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionPlan {
    /// Strongly connected components in elaboration order.
    pub sccs: Vec<Vec<String>>,
    pub recursive: BTreeSet<String>,
}

impl RecursionPlan {
    pub fn is_recursive(&self, name: &str) -> bool {
        self.recursive.contains(name)
    }
}

pub const BUILTIN_IDS: &[&str] = &["sc", "tso", "power", "pso", "rmo", "alpha"];

/// Source text of a shipped model.
pub fn builtin_source(id: &str) -> Option<&'static str> {
    Some(match id {
        "sc" => include_str!("../../models/sc.cat"),
        "tso" => include_str!("../../models/tso.cat"),
        "power" => include_str!("../../models/power.cat"),
        "pso" => include_str!("../../models/pso.cat"),
        "rmo" => include_str!("../../models/rmo.cat"),
        "alpha" => include_str!("../../models/alpha.cat"),
        _ => return None,
    })
}

pub fn builtin_model(id: &str) -> Result<MemoryModel, CatError> {
    let src = builtin_source(id).ok_or_else(|| CatError::UnknownModel(id.to_string()))?;
    parse_cat(src)
}

/// Named relations of a model mapped to pair sets; handy in tests.
pub type NamedRelations = BTreeMap<String, BTreeSet<(usize, usize)>>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for id in BUILTIN_IDS {
            let m = builtin_model(id).unwrap();
            assert_eq!(m.name, *id);
        }
        assert!(matches!(builtin_model("arm"), Err(CatError::UnknownModel(_))));
    }

    #[test]
    fn tso_shape() {
        let m = builtin_model("tso").unwrap();
        assert_eq!(m.axioms.len(), 2);
        assert_eq!(m.axioms[0].label, "uniproc");
        assert_eq!(m.axioms[1].term.to_string(), "rfe | co | fr | po \\ W*R | mfence");
        assert!(m.recursion_plan().recursive.is_empty());
    }

    #[test]
    fn power_plan() {
        let m = builtin_model("power").unwrap();
        assert_eq!(m.axioms.len(), 4);
        let plan = m.recursion_plan();
        let rec: Vec<&str> = plan.recursive.iter().map(|s| s.as_str()).collect();
        assert_eq!(rec, ["cc", "ci", "ic", "ii"]);
        let pos = |n: &str| plan.sccs.iter().position(|c| c.iter().any(|x| x == n)).unwrap();
        assert!(pos("ii0") < pos("ii"));
        assert!(pos("ii") < pos("ppo"));
        assert_eq!(pos("ii"), pos("cc"));
    }

    #[test]
    fn toy_plan() {
        let m = parse_cat("model toy\nr3 := po\nr4 := rf\nr1 := r2 | r3\nr2 := r1 | r4").unwrap();
        let plan = m.recursion_plan();
        assert_eq!(plan.recursive, ["r1".to_string(), "r2".to_string()].into());
    }
}
