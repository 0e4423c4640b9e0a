//! Reduction programs as test fixtures: a guessed assignment of a Boolean
//! formula gating a non-portable seed program.

mod formula;

pub use formula::{Formula, FormulaError};

use crate::prog::{CmpOp, Expr, Instr, InstrKind, Pred, Program, Thread};
use std::collections::{BTreeMap, BTreeSet};

/// Initial value of every generated location; distinct from the Boolean encodings 0 and 1.
pub const INIT: i64 = 3;

/// Store buffering.
pub fn sb_seed() -> Program {
    crate::prog::parse_program(
        "program sb\nthread t0\n x := 1;\n r0 <- y\nthread t1\n y := 1;\n r1 <- x",
    )
    .expect("seed parses")
}

/// Store-buffering seed whose locations all end at 3 under SC, while TSO
/// may also leave `z` at 1.
pub fn state_seed() -> Program {
    crate::prog::parse_program(
        "program np\ninit a = 3\ninit b = 3\ninit f = 3\ninit z = 3\n\
         thread t0\n a := 1;\n r1 <- b;\n rf <- f;\n if (r1 = 3 && rf = 1) { z := 1 };\n a := 3\n\
         thread t1\n b := 1;\n r2 <- a;\n if (r2 = 3) { f := 1 };\n f := 3;\n b := 3",
    )
    .expect("seed parses")
}

/// A quantified formula: variables whose names start with `y` are
/// existential, all others universal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Psi {
    pub vars: Vec<String>,
    pub body: Formula,
}

impl Psi {
    /// Formula over exactly the variables it mentions.
    pub fn parse(text: &str) -> Result<Psi, FormulaError> {
        let body = Formula::parse(text)?;
        Ok(Psi { vars: body.vars().into_iter().collect(), body })
    }

    pub fn universal(&self) -> Vec<String> {
        self.vars.iter().filter(|v| !v.starts_with('y')).cloned().collect()
    }

    pub fn existential(&self) -> Vec<String> {
        self.vars.iter().filter(|v| v.starts_with('y')).cloned().collect()
    }

    pub fn is_tautology(&self) -> bool {
        (0..1u64 << self.vars.len()).all(|row| self.holds(row))
    }

    /// Truth of `∀ universal ∃ existential: body`.
    pub fn is_valid_qbf(&self) -> bool {
        let (u, e) = (self.universal(), self.existential());
        (0..1u64 << u.len()).all(|a| {
            (0..1u64 << e.len()).any(|b| {
                let value = |v: &str| match u.iter().position(|x| x == v) {
                    Some(j) => a >> j & 1 == 1,
                    None => b >> e.iter().position(|x| x == v).expect("declared variable") & 1 == 1,
                };
                self.body.eval(&value)
            })
        })
    }

    fn holds(&self, row: u64) -> bool {
        self.body.eval(&|v: &str| row >> self.vars.iter().position(|x| x == v).expect("declared variable") & 1 == 1)
    }
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (0..).map(|i| format!("{base}_{i}")).find(|n| !taken.contains(n)).expect("unbounded")
}

fn rename_expr(e: &mut Expr, regs: &BTreeMap<String, String>) {
    match e {
        Expr::Const(_) => {}
        Expr::Reg(r) => {
            if let Some(n) = regs.get(r) {
                *r = n.clone();
            }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            rename_expr(a, regs);
            rename_expr(b, regs);
        }
    }
}

fn rename_pred(p: &mut Pred, regs: &BTreeMap<String, String>) {
    match p {
        Pred::Bool(_) => {}
        Pred::Cmp(_, a, b) => {
            rename_expr(a, regs);
            rename_expr(b, regs);
        }
        Pred::And(a, b) | Pred::Or(a, b) => {
            rename_pred(a, regs);
            rename_pred(b, regs);
        }
        Pred::Not(a) => rename_pred(a, regs),
    }
}

/// Rename locations and registers of `p` away from the taken names; returns
/// the renamed program and the location map.
fn rename_apart(p: &Program, locs: &BTreeSet<String>, regs: &BTreeSet<String>) -> (Program, BTreeMap<String, String>) {
    let mut taken_l = locs.clone();
    taken_l.extend(p.locations());
    let mut loc_map = BTreeMap::new();
    for l in p.locations() {
        let n = if locs.contains(&l) { fresh(&format!("{l}_np"), &taken_l) } else { l.clone() };
        taken_l.insert(n.clone());
        loc_map.insert(l, n);
    }
    let mut out = p.clone();
    out.init = p.init.iter().map(|(l, v)| (loc_map[l].clone(), *v)).collect();
    for t in &mut out.threads {
        let own = Program::registers(t);
        let mut taken_r = regs.clone();
        taken_r.extend(own.iter().cloned());
        let mut reg_map = BTreeMap::new();
        for r in own.into_iter().filter(|r| regs.contains(r)) {
            let n = fresh(&format!("{r}_np"), &taken_r);
            taken_r.insert(n.clone());
            reg_map.insert(r, n);
        }
        let rn = |r: &mut String| {
            if let Some(n) = reg_map.get(r) {
                *r = n.clone();
            }
        };
        t.body.walk_mut(&mut |i| match &mut i.kind {
            InstrKind::Local { reg, expr } => {
                rn(reg);
                rename_expr(expr, &reg_map);
            }
            InstrKind::Load { reg, loc } | InstrKind::Store { loc, reg } => {
                rn(reg);
                *loc = loc_map[loc.as_str()].clone();
            }
            InstrKind::If { cond, .. } | InstrKind::While { cond, .. } => rename_pred(cond, &reg_map),
            _ => {}
        });
    }
    (out, loc_map)
}

fn constant(reg: &str, v: i64) -> Instr {
    Instr::local(reg, Expr::Const(v))
}

fn reg_eq(reg: &str, v: i64) -> Pred {
    Pred::eq_const(reg, v)
}

fn conj(items: impl IntoIterator<Item = Pred>) -> Pred {
    items.into_iter().reduce(Pred::and).unwrap_or(Pred::Bool(true))
}

fn var_reg(v: &str) -> String {
    format!("r_{v}")
}

/// Locations and registers of the guessing threads.
struct Names {
    vars: Vec<String>,
    /// Per-variable synchronisation locations, state construction only.
    sync: Vec<String>,
    result: String,
    locs: BTreeSet<String>,
    regs: BTreeSet<String>,
}

impl Names {
    fn new(vars: &[String], with_sync: bool) -> Names {
        let mut locs: BTreeSet<String> = vars.iter().cloned().collect();
        let sync: Vec<String> = if with_sync {
            vars.iter().map(|v| {
                let s = fresh(&format!("s_{v}"), &locs);
                locs.insert(s.clone());
                s
            }).collect()
        } else {
            Vec::new()
        };
        let result = fresh("y", &locs);
        locs.insert(result.clone());
        let mut regs: BTreeSet<String> = ["rc0", "rc1", "rc2", "rc3", "ry", "rz"].into_iter().map(String::from).collect();
        for v in vars {
            regs.insert(var_reg(v));
            regs.insert(format!("rs_{v}"));
        }
        Names { vars: vars.to_vec(), sync, result, locs, regs }
    }
}

fn assemble(name: &str, names: &Names, np: Program, threads: Vec<Instr>) -> Program {
    let mut p = Program::new(name);
    for l in &names.locs {
        p.init.insert(l.clone(), INIT);
    }
    p.init.extend(np.init);
    p.threads = threads.into_iter().enumerate().map(|(i, body)| Thread { tid: format!("t{}", i + 1), body }).collect();
    p.renumber();
    p
}

fn seed_thread(np: &Program, i: usize) -> Instr {
    np.threads.get(i).map(|t| t.body.clone()).unwrap_or_else(Instr::skip)
}

/// Order of the guessing thread's writes and reads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Layout {
    /// `x_i := 0; r_i <- x_i` per variable. Every write-to-read pair in
    /// program order then shares a location.
    #[default]
    Interleaved,
    /// All writes, then all reads. With two or more variables this contains
    /// the R shape (`W x2; R x1` against `W x1; W x2`), which TSO allows and
    /// SC forbids.
    Grouped,
}

/// `∀ψ` reduction: the first two threads guess an assignment and set the
/// result location to 1 exactly when it falsifies `ψ`; every thread then runs
/// its part of `p_np` once it reads 1.
pub fn gen_forall(psi: &Psi, p_np: &Program, layout: Layout) -> Program {
    let names = Names::new(&psi.vars, false);
    let (np, _) = rename_apart(p_np, &names.locs, &names.regs);
    let y = names.result.as_str();
    let mut t1 = vec![constant("rc0", 0), constant("rc1", 1), constant("rc2", 2)];
    match layout {
        Layout::Interleaved => {
            for v in &names.vars {
                t1.extend([Instr::store(v, "rc0"), Instr::load(&var_reg(v), v)]);
            }
        }
        Layout::Grouped => {
            t1.extend(names.vars.iter().map(|v| Instr::store(v, "rc0")));
            t1.extend(names.vars.iter().map(|v| Instr::load(&var_reg(v), v)));
        }
    }
    t1.push(Instr::if_(psi.body.to_pred(&var_reg), Instr::store(y, "rc2"), Instr::store(y, "rc1")));
    let mut t2 = vec![constant("rc1", 1)];
    t2.extend(names.vars.iter().map(|v| Instr::store(v, "rc1")));
    let k = np.threads.len().max(2);
    let threads = (0..k)
        .map(|i| {
            let head = match i {
                0 => Instr::seq(t1.clone()),
                1 => Instr::seq(t2.clone()),
                _ => Instr::skip(),
            };
            Instr::seq(vec![head, Instr::load("ry", y), Instr::if_(reg_eq("ry", 1), seed_thread(&np, i), Instr::skip())])
        })
        .collect();
    assemble(&format!("forall_{}", p_np.name), &names, np, threads)
}

/// `∀∃ψ` state reduction. The guess is synchronised through per-variable
/// locations (result 2 if incomplete, else 1 or 0 by the truth of `ψ`). On 0
/// the seed runs; if its `flag` location reads 1 the first thread resets it
/// and pretends success. Existential variables are overwritten with 1 last.
pub fn gen_state(psi: &Psi, p_np: &Program, flag: &str) -> Program {
    let names = Names::new(&psi.vars, true);
    let (np, loc_map) = rename_apart(p_np, &names.locs, &names.regs);
    let z = loc_map.get(flag).cloned().unwrap_or_else(|| flag.to_string());
    let y = names.result.as_str();
    let vars = &names.vars;
    let sync_reg = |v: &str| format!("rs_{v}");

    let mut t1 = vec![constant("rc0", 0), constant("rc1", 1), constant("rc2", 2), constant("rc3", 3)];
    t1.extend(vars.iter().map(|v| Instr::store(v, "rc0")));
    t1.extend(vars.iter().zip(&names.sync).map(|(v, s)| Instr::load(&sync_reg(v), s)));
    t1.extend(vars.iter().map(|v| Instr::load(&var_reg(v), v)));
    let complete = conj(vars.iter().map(|v| Pred::Cmp(CmpOp::Eq, Expr::Reg(var_reg(v)), Expr::Reg(sync_reg(v)))));
    t1.push(Instr::if_(
        Pred::Not(Box::new(complete)),
        Instr::store(y, "rc2"),
        Instr::if_(psi.body.to_pred(&var_reg), Instr::store(y, "rc1"), Instr::store(y, "rc0")),
    ));
    t1.push(Instr::load("ry", y));
    let pretend = Instr::if_(reg_eq("rz", 1), Instr::seq(vec![Instr::store(&z, "rc3"), Instr::store(y, "rc1")]), Instr::skip());
    t1.push(Instr::if_(reg_eq("ry", 0), Instr::seq(vec![seed_thread(&np, 0), Instr::load("rz", &z), pretend]), Instr::skip()));
    t1.extend(psi.existential().iter().map(|v| Instr::store(v, "rc1")));

    let mut t2 = vec![constant("rc1", 1), constant("rc3", 3)];
    t2.extend(vars.iter().map(|v| Instr::store(v, "rc1")));
    t2.extend(vars.iter().map(|v| Instr::load(&var_reg(v), v)));
    t2.extend(vars.iter().zip(&names.sync).map(|(v, s)| Instr::store(s, &var_reg(v))));
    t2.extend(names.sync.iter().map(|s| Instr::store(s, "rc3")));

    let k = np.threads.len().max(2);
    let threads = (0..k)
        .map(|i| match i {
            0 => Instr::seq(t1.clone()),
            _ => {
                let head = if i == 1 { Instr::seq(t2.clone()) } else { Instr::skip() };
                Instr::seq(vec![head, Instr::load("ry", y), Instr::if_(reg_eq("ry", 0), seed_thread(&np, i), Instr::skip())])
            }
        })
        .collect();
    assemble(&format!("state_{}", p_np.name), &names, np, threads)
}
