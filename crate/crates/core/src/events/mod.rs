//! Memory events of an acyclic program, the relations the program text
//! induces on them, and static candidate sets bounding every relation.

mod guard;
mod may;

pub use guard::Guard;
pub use may::{may, MaySets};

use crate::cat::BaseRel;
use crate::prog::{Iid, Instr, InstrKind, Program};
use crate::rel::Relation;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

pub type Eid = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Init,
    Write,
    Read,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub eid: Eid,
    /// Index into `Program::threads`; `None` for initial writes.
    pub thread: Option<usize>,
    pub kind: EventKind,
    pub loc: String,
    pub iid: Option<Iid>,
    /// Register read from (stores) or written (loads).
    pub reg: Option<String>,
    pub hl: Option<i64>,
}

impl Event {
    pub fn is_write(&self) -> bool {
        matches!(self.kind, EventKind::Init | EventKind::Write)
    }

    pub fn is_read(&self) -> bool {
        self.kind == EventKind::Read
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("program contains loops; unroll it first")]
    NonAcyclicProgram,
    #[error("malformed program: {0}")]
    Invalid(String),
}

/// Pairs of an induced relation, each active when both endpoints execute and
/// its guard over instruction-execution flags holds.
pub type Guarded = BTreeMap<(Eid, Eid), Guard>;

#[derive(Clone, Debug)]
pub struct EventGraph {
    pub program: Program,
    pub events: Vec<Event>,
    pub locations: Vec<String>,
    pub event_of_iid: HashMap<Iid, Eid>,
    /// Induced relations keyed by base name (every base except rf and co).
    pub induced: BTreeMap<BaseRel, Guarded>,
    pub rf_may: Relation,
    pub co_may: Relation,
    /// Pairs of events that some control path executes together.
    pub coexec: Relation,
}

/// Position of an instruction: thread, textual index, enclosing branch arms.
#[derive(Clone, Debug)]
struct Site {
    pos: usize,
    arms: Vec<(Iid, bool)>,
}

fn exclusive(a: &Site, b: &Site) -> bool {
    a.arms.iter().any(|(i, arm)| b.arms.iter().any(|(j, brm)| i == j && arm != brm))
}

struct ThreadWalk<'a> {
    thread: usize,
    events: &'a mut Vec<Event>,
    sites: &'a mut Vec<Site>,
    fences: Vec<(crate::prog::FenceKind, Iid, Site)>,
    next_pos: usize,
    arms: Vec<(Iid, bool)>,
    event_of_iid: &'a mut HashMap<Iid, Eid>,
    /// Register → load event → guard under which the value depends on it.
    deps: HashMap<String, BTreeMap<Eid, Guard>>,
    /// Loads the current branch is control dependent on.
    ctx: BTreeMap<Eid, Guard>,
    dd: Guarded,
    cd: Guarded,
}

fn join(into: &mut BTreeMap<Eid, Guard>, from: &BTreeMap<Eid, Guard>) {
    for (e, g) in from {
        let cur = into.remove(e).unwrap_or(Guard::False);
        into.insert(*e, Guard::or(vec![cur, g.clone()]));
    }
}

impl ThreadWalk<'_> {
    fn site(&mut self) -> Site {
        self.next_pos += 1;
        Site { pos: self.next_pos, arms: self.arms.clone() }
    }

    fn event(&mut self, i: &Instr, kind: EventKind, loc: &str, reg: &str) -> Eid {
        let eid = self.events.len();
        let site = self.site();
        self.events.push(Event {
            eid,
            thread: Some(self.thread),
            kind,
            loc: loc.to_string(),
            iid: Some(i.iid),
            reg: Some(reg.to_string()),
            hl: i.hl,
        });
        self.sites.push(site);
        self.event_of_iid.insert(i.iid, eid);
        for (l, g) in &self.ctx {
            self.cd.insert((*l, eid), g.clone());
        }
        eid
    }

    fn expr_deps(&self, regs: &BTreeSet<String>) -> BTreeMap<Eid, Guard> {
        let mut out = BTreeMap::new();
        for r in regs {
            if let Some(d) = self.deps.get(r) {
                join(&mut out, d);
            }
        }
        out
    }

    fn walk(&mut self, i: &Instr) {
        match &i.kind {
            InstrKind::Local { reg, expr } => {
                let mut used = BTreeSet::new();
                expr.registers(&mut used);
                let d = self.expr_deps(&used);
                self.deps.insert(reg.clone(), d);
            }
            InstrKind::Load { reg, loc } => {
                let e = self.event(i, EventKind::Read, loc, reg);
                self.deps.insert(reg.clone(), [(e, Guard::True)].into());
            }
            InstrKind::Store { loc, reg } => {
                let e = self.event(i, EventKind::Write, loc, reg);
                for (l, g) in self.deps.get(reg).cloned().unwrap_or_default() {
                    self.dd.insert((l, e), g);
                }
            }
            InstrKind::Fence(k) => {
                let s = self.site();
                self.fences.push((*k, i.iid, s));
            }
            InstrKind::Skip => {}
            InstrKind::Seq(a, b) => {
                self.walk(a);
                self.walk(b);
            }
            InstrKind::If { cond, then, els } => {
                let mut used = BTreeSet::new();
                cond.registers(&mut used);
                let pdeps = self.expr_deps(&used);
                let saved_ctx = self.ctx.clone();
                join(&mut self.ctx, &pdeps);
                let before = self.deps.clone();
                self.arms.push((i.iid, true));
                self.walk(then);
                self.arms.pop();
                let after_then = std::mem::replace(&mut self.deps, before);
                self.arms.push((i.iid, false));
                self.walk(els);
                self.arms.pop();
                let after_else = std::mem::take(&mut self.deps);
                self.ctx = saved_ctx;
                let regs: BTreeSet<&String> = after_then.keys().chain(after_else.keys()).collect();
                let empty = BTreeMap::new();
                for r in regs {
                    let dt = after_then.get(r).unwrap_or(&empty);
                    let de = after_else.get(r).unwrap_or(&empty);
                    let loads: BTreeSet<&Eid> = dt.keys().chain(de.keys()).collect();
                    let mut merged = BTreeMap::new();
                    for l in loads {
                        let gt = dt.get(l).cloned().unwrap_or(Guard::False);
                        let ge = de.get(l).cloned().unwrap_or(Guard::False);
                        // Past the merge exactly one arm ran, so equal guards need no arm condition.
                        let g = if gt == ge {
                            gt
                        } else {
                            Guard::or(vec![
                                Guard::and(vec![Guard::Cf(then.iid), gt]),
                                Guard::and(vec![Guard::Cf(els.iid), ge]),
                            ])
                        };
                        if g != Guard::False {
                            merged.insert(*l, g);
                        }
                    }
                    self.deps.insert(r.clone(), merged);
                }
            }
            InstrKind::While { .. } => unreachable!("compile rejects loops"),
        }
    }
}

impl EventGraph {
    /// Compile an acyclic program.
    pub fn compile(p: &Program) -> Result<EventGraph, CompileError> {
        if !p.is_acyclic() {
            return Err(CompileError::NonAcyclicProgram);
        }
        if let Some(d) = p.validate(true).first() {
            return Err(CompileError::Invalid(d.to_string()));
        }
        let locations: Vec<String> = p.locations().into_iter().collect();
        let mut events: Vec<Event> = locations
            .iter()
            .enumerate()
            .map(|(eid, l)| Event { eid, thread: None, kind: EventKind::Init, loc: l.clone(), iid: None, reg: None, hl: None })
            .collect();
        let mut sites: Vec<Site> = locations.iter().map(|_| Site { pos: 0, arms: vec![] }).collect();
        let mut event_of_iid = HashMap::new();
        let mut induced: BTreeMap<BaseRel, Guarded> = BaseRel::ALL
            .into_iter()
            .filter(|b| !matches!(b, BaseRel::Rf | BaseRel::Co))
            .map(|b| (b, Guarded::new()))
            .collect();
        let mut fence_lists = Vec::new();
        for (t, th) in p.threads.iter().enumerate() {
            let mut w = ThreadWalk {
                thread: t,
                events: &mut events,
                sites: &mut sites,
                fences: Vec::new(),
                next_pos: 0,
                arms: Vec::new(),
                event_of_iid: &mut event_of_iid,
                deps: HashMap::new(),
                ctx: BTreeMap::new(),
                dd: Guarded::new(),
                cd: Guarded::new(),
            };
            w.walk(&th.body);
            let (dd, cd, fences) = (w.dd, w.cd, w.fences);
            induced.get_mut(&BaseRel::Dd).unwrap().extend(dd.into_iter().filter(|(_, g)| *g != Guard::False));
            induced.get_mut(&BaseRel::Cd).unwrap().extend(cd.into_iter().filter(|(_, g)| *g != Guard::False));
            fence_lists.push(fences);
        }
        let n = events.len();
        let mut coexec = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                let same = events[a].thread.is_some() && events[a].thread == events[b].thread;
                if !(same && exclusive(&sites[a], &sites[b])) {
                    coexec.insert(a, b);
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if !coexec.contains(a, b) {
                    continue;
                }
                let (ea, eb) = (&events[a], &events[b]);
                let same_thread = ea.thread.is_some() && ea.thread == eb.thread;
                if same_thread || a == b {
                    induced.get_mut(&BaseRel::Int).unwrap().insert((a, b), Guard::True);
                }
                if ea.loc == eb.loc {
                    induced.get_mut(&BaseRel::Loc).unwrap().insert((a, b), Guard::True);
                }
                if same_thread && sites[a].pos < sites[b].pos {
                    induced.get_mut(&BaseRel::Po).unwrap().insert((a, b), Guard::True);
                    let fences = &fence_lists[ea.thread.unwrap()];
                    for (kind, rel) in [
                        (crate::prog::FenceKind::Mfence, BaseRel::Mfence),
                        (crate::prog::FenceKind::Sync, BaseRel::Sync),
                        (crate::prog::FenceKind::Lwsync, BaseRel::Lwsync),
                        (crate::prog::FenceKind::Isync, BaseRel::Isync),
                    ] {
                        let between: Vec<Guard> = fences
                            .iter()
                            .filter(|(k, _, s)| {
                                *k == kind
                                    && sites[a].pos < s.pos
                                    && s.pos < sites[b].pos
                                    && !exclusive(s, &sites[a])
                                    && !exclusive(s, &sites[b])
                            })
                            .map(|(_, iid, _)| Guard::Cf(*iid))
                            .collect();
                        if !between.is_empty() {
                            induced.get_mut(&rel).unwrap().insert((a, b), Guard::or(between));
                        }
                    }
                }
            }
        }
        let mut rf_may = Relation::empty(n);
        let mut co_may = Relation::empty(n);
        for w in (0..n).filter(|&w| events[w].is_write()) {
            for e in (0..n).filter(|&e| e != w && events[e].loc == events[w].loc && coexec.contains(w, e)) {
                match events[e].kind {
                    EventKind::Read => {
                        rf_may.insert(w, e);
                    }
                    EventKind::Write => {
                        co_may.insert(w, e);
                    }
                    EventKind::Init => {}
                }
            }
        }
        Ok(EventGraph { program: p.clone(), events, locations, event_of_iid, induced, rf_may, co_may, coexec })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn init_event(&self, loc: &str) -> Option<Eid> {
        self.events.iter().position(|e| e.kind == EventKind::Init && e.loc == loc)
    }

    /// Pairs an induced relation may contain, ignoring guards.
    pub fn induced_pairs(&self, b: BaseRel) -> Relation {
        match b {
            BaseRel::Rf => self.rf_may.clone(),
            BaseRel::Co => self.co_may.clone(),
            _ => Relation::from_pairs(self.len(), self.induced[&b].keys().copied()),
        }
    }

    /// Short display name such as `Wx` or `Ry`, suffixed by the event id.
    pub fn describe(&self, e: Eid) -> String {
        let ev = &self.events[e];
        let k = match ev.kind {
            EventKind::Init => "I",
            EventKind::Write => "W",
            EventKind::Read => "R",
        };
        format!("{k}{}#{e}", ev.loc)
    }

    /// Thread name of an event, `init` for initial writes.
    pub fn thread_name(&self, e: Eid) -> &str {
        match self.events[e].thread {
            Some(t) => &self.program.threads[t].tid,
            None => "init",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prog::parse_program;

    fn pairs(g: &EventGraph, b: BaseRel) -> Vec<(String, String)> {
        g.induced[&b].keys().map(|&(a, c)| (g.describe(a), g.describe(c))).collect()
    }

    pub(crate) const IRIW: &str = "program iriw
thread t0
  y := 1
thread t1
  x := 1
thread t2
  r1 <- x;
  r2 <- y
thread t3
  r1 <- y;
  r2 <- x
";

    #[test]
    fn iriw_events() {
        let g = EventGraph::compile(&parse_program(IRIW).unwrap()).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.events.iter().filter(|e| e.kind == EventKind::Init).count(), 2);
        assert!(g.induced[&BaseRel::Dd].is_empty());
        assert!(g.induced[&BaseRel::Cd].is_empty());
        assert_eq!(pairs(&g, BaseRel::Po), [("Rx#4".into(), "Ry#5".into()), ("Ry#6".into(), "Rx#7".into())]);
    }

    #[test]
    fn control_and_data_dependency() {
        let p = parse_program("program p\nthread t0\n r <- x;\n if (r = 1) { y := r }").unwrap();
        let g = EventGraph::compile(&p).unwrap();
        let want = vec![("Rx#2".to_string(), "Wy#3".to_string())];
        assert_eq!(pairs(&g, BaseRel::Cd), want);
        assert_eq!(pairs(&g, BaseRel::Dd), want);
        assert_eq!(g.induced[&BaseRel::Dd].values().next(), Some(&Guard::True));
    }

    #[test]
    fn fence_between() {
        let p = parse_program("program p\nthread t0\n x := 1;\n mfence;\n r <- y").unwrap();
        let g = EventGraph::compile(&p).unwrap();
        assert_eq!(pairs(&g, BaseRel::Mfence), [("Wx#2".into(), "Ry#3".into())]);
        assert!(g.induced[&BaseRel::Sync].is_empty());
    }

    #[test]
    fn branch_sensitive_dependency() {
        // The store depends on the load only when the overwrite is skipped.
        let p = parse_program("program p\nthread t0\n r <- x;\n if (r = 0) { r = 5 };\n y := r").unwrap();
        let g = EventGraph::compile(&p).unwrap();
        let guard = &g.induced[&BaseRel::Dd][&(2, 3)];
        assert!(matches!(guard, Guard::Or(_) | Guard::Cf(_)), "{guard:?}");
    }

    #[test]
    fn exclusive_branches_are_not_coexecutable() {
        let p = parse_program("program p\nthread t0\n r <- x;\n if (r = 0) { y := 1 } else { y := 2 }").unwrap();
        let g = EventGraph::compile(&p).unwrap();
        let (w1, w2) = (3, 4);
        assert!(!g.coexec.contains(w1, w2));
        assert!(!g.co_may.contains(w1, w2));
        assert!(!g.induced[&BaseRel::Po].contains_key(&(w1, w2)));
        assert!(g.co_may.contains(1, w1));
        assert!(!g.co_may.contains(w1, 1));
    }

    #[test]
    fn rejects_loops() {
        let p = parse_program("program p\nthread t0\n while (r0 = 0) { r0 <- x }").unwrap();
        assert_eq!(EventGraph::compile(&p).unwrap_err(), CompileError::NonAcyclicProgram);
    }
}
