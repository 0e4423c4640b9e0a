//! Acceptance criteria 1-9, one PASS/FAIL line each.

use porthos::cat::{builtin_model, eval_model, parse_cat, MemoryModel};
use porthos::check::{check_portability, Verdict};
use porthos::encode::{encode_portability, encode_reachability_pred, BoolExpr, Options};
use porthos::events::{EventGraph, EventKind};
use porthos::gen::{gen_forall, sb_seed, Formula, Layout, Psi};
use porthos::oracle::portable_bruteforce;
use porthos::prog::{parse_program, FenceKind, Pred, Program};
use porthos::solve::{emit_smt, solve, SolverConfig, Status, Value};
use porthos::witness::{decode, from_json, to_execution, ExecutionWitness, Pairs};
use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

const LITMUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/litmus");
const CLASSIC: &[&str] = &["sb", "mp", "lb", "wrc", "iriw", "r", "s", "2+2w", "corr", "coww"];
const MODELS: &[&str] = &["sc", "tso", "power"];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// Per program: (source, target, expected portable).
type Rows<'a> = &'a [(&'a str, &'a [(&'a str, &'a str, bool)])];

fn lit_path(name: &str) -> String {
    format!("{LITMUS}/{name}.lit")
}

fn program(name: &str) -> Program {
    parse_program(&std::fs::read_to_string(lit_path(name)).unwrap()).unwrap().unroll(1)
}

fn graph(name: &str) -> EventGraph {
    EventGraph::compile(&program(name)).unwrap()
}

fn corpus() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(LITMUS)
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn model(id: &str) -> MemoryModel {
    builtin_model(id).unwrap()
}

fn verdict(g: &EventGraph, s: &str, t: &str, opts: &Options) -> Verdict {
    check_portability(g, &model(s), &model(t), opts, &SolverConfig::default()).unwrap().0
}

fn porthos(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_porthos")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn po(g: &EventGraph, a: usize, b: usize) -> bool {
    let (x, y) = (&g.events[a], &g.events[b]);
    x.thread.is_some() && x.thread == y.thread && a < b
}

fn fr(w: &ExecutionWitness) -> Pairs {
    let mut out = Pairs::new();
    for &(src, r) in &w.rf {
        for &(a, b) in &w.co {
            if a == src {
                out.insert((r, b));
            }
        }
    }
    out
}

/// Some simple cycle among `edges` whose edge kinds read rf, po, fr, rf, po, fr up to rotation.
fn has_iriw_cycle(w: &ExecutionWitness, g: &EventGraph, edges: &Pairs) -> bool {
    let fr = fr(w);
    let kind = |a: usize, b: usize| {
        if w.rf.contains(&(a, b)) && g.events[a].thread != g.events[b].thread {
            "rf"
        } else if po(g, a, b) {
            "po"
        } else if fr.contains(&(a, b)) {
            "fr"
        } else {
            "?"
        }
    };
    fn dfs(start: usize, at: usize, path: &mut Vec<usize>, edges: &Pairs, found: &mut Vec<Vec<usize>>) {
        for &(a, b) in edges {
            if a != at {
                continue;
            }
            if b == start {
                found.push(path.clone());
            } else if !path.contains(&b) && path.len() < 6 {
                path.push(b);
                dfs(start, b, path, edges, found);
                path.pop();
            }
        }
    }
    let nodes: BTreeSet<usize> = edges.iter().map(|&(a, _)| a).collect();
    let want = ["rf", "po", "fr", "rf", "po", "fr"];
    for &s in &nodes {
        let mut found = Vec::new();
        dfs(s, s, &mut vec![s], edges, &mut found);
        for cyc in found.into_iter().filter(|c| c.len() == 6) {
            let kinds: Vec<&str> = (0..6).map(|i| kind(cyc[i], cyc[(i + 1) % 6])).collect();
            if (0..6).any(|r| (0..6).all(|i| kinds[(i + r) % 6] == want[i])) {
                return true;
            }
        }
    }
    false
}

fn iriw_verdicts() -> Outcome {
    let dir = tempfile_dir();
    let json = format!("{dir}/iriw.json");
    let dot = format!("{dir}/iriw.dot");
    let t = Instant::now();
    let (code, out) = porthos(&["check", "-p", &lit_path("iriw"), "-s", "tso", "-t", "power", "--json", &json, "--dot", &dot]);
    let bug_time = t.elapsed();
    if code != 1 || !out.contains("verdict: NotPortable") {
        return Err(format!("tso->power exit {code}: {out}"));
    }
    let (_, w) = from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let g = graph("iriw");
    if !has_iriw_cycle(&w, &g, &w.cycle) {
        return Err(format!("witness cycle {:?} is not rf;po;fr;rf;po;fr", w.cycle));
    }
    if !std::fs::read_to_string(&dot).unwrap().starts_with("digraph") {
        return Err("no DOT output".into());
    }
    let t = Instant::now();
    let (code, out) = porthos(&["check", "-p", &lit_path("iriw"), "-s", "sc", "-t", "tso"]);
    let ok_time = t.elapsed();
    if code != 0 || !out.contains("verdict: Portable") {
        return Err(format!("sc->tso exit {code}: {out}"));
    }
    let limit = Duration::from_secs(30);
    if bug_time > limit || ok_time > limit {
        return Err(format!("too slow: {bug_time:?}, {ok_time:?}"));
    }
    Ok(format!("tso->power NotPortable with rf/po/fr cycle ({bug_time:.2?}), sc->tso Portable ({ok_time:.2?})"))
}

fn tempfile_dir() -> String {
    let d = std::env::temp_dir().join(format!("porthos-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.to_string_lossy().into_owned()
}

fn mutex_rows() -> Outcome {
    let t = Instant::now();
    let expect: Rows = &[
        ("peterson", &[("sc", "tso", false), ("sc", "power", false), ("tso", "power", false)]),
        ("dekker", &[("sc", "tso", false), ("sc", "power", false), ("tso", "power", false)]),
        ("peterson-x86", &[("sc", "tso", true), ("tso", "power", false)]),
        ("dekker-x86", &[("sc", "tso", true), ("tso", "power", false)]),
    ];
    let mut rows = 0;
    for (name, pairs) in expect {
        let g = graph(name);
        for &(s, tg, portable) in pairs.iter() {
            let v = verdict(&g, s, tg, &Options::default());
            if matches!(v, Verdict::Portable) != portable || matches!(v, Verdict::Unknown(_)) {
                return Err(format!("{name} {s}->{tg}: {}", v.name()));
            }
            rows += 1;
        }
        let synced = EventGraph::compile(&program(name).with_fences_after_accesses(FenceKind::Sync)).unwrap();
        let v = verdict(&synced, "tso", "power", &Options::default());
        if !matches!(v, Verdict::Portable) {
            return Err(format!("{name} with sync everywhere tso->power: {}", v.name()));
        }
        rows += 1;
    }
    if t.elapsed() > Duration::from_secs(300) {
        return Err(format!("too slow: {:?}", t.elapsed()));
    }
    Ok(format!("{rows} verdicts as expected, including sync-everywhere ({:.2?})", t.elapsed()))
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut n = 0;
    let mut programs = 0;
    for name in corpus() {
        let g = graph(&name);
        let mut compared = false;
        for s in MODELS {
            for tg in MODELS {
                let brute = match portable_bruteforce(&g, &model(s), &model(tg), 16) {
                    Ok(b) => b,
                    Err(_) if !CLASSIC.contains(&name.as_str()) => continue,
                    Err(e) => return Err(format!("{name}: {e}")),
                };
                let v = verdict(&g, s, tg, &Options::default());
                let smt_bug = match v {
                    Verdict::NotPortable(_) => true,
                    Verdict::Portable => false,
                    Verdict::Unknown(m) => return Err(format!("{name} {s}->{tg}: unknown ({m})")),
                };
                if smt_bug != brute.is_some() {
                    return Err(format!("{name} {s}->{tg}: smt {} vs oracle {}", smt_bug, brute.is_some()));
                }
                n += 1;
                compared = true;
            }
        }
        programs += compared as usize;
    }
    if programs < 10 || t.elapsed() > Duration::from_secs(600) {
        return Err(format!("{programs} programs, {:?}", t.elapsed()));
    }
    Ok(format!("{n} checks over {programs} programs agree ({:.2?})", t.elapsed()))
}

fn fixpoint_exactness() -> Outcome {
    let names = ["ii", "ic", "ci", "cc", "ppo"];
    let mut witnesses = 0;
    let mut compared = 0;
    for prog in corpus() {
        let g = graph(&prog);
        for s in MODELS {
            for tg in MODELS {
                if *s != "power" && *tg != "power" {
                    continue;
                }
                let Verdict::NotPortable(w) = verdict(&g, s, tg, &Options::default()) else { continue };
                witnesses += 1;
                let ev = eval_model(&model("power"), &to_execution(&w, &g));
                for (ns, id) in [("src", s), ("tgt", tg)] {
                    if *id != "power" {
                        continue;
                    }
                    for rel in names {
                        let want: Pairs = ev.relations[rel].pairs().collect();
                        let got = w.derived.get(&format!("{ns}.{rel}")).cloned().unwrap_or_default();
                        if got != want {
                            return Err(format!("{prog} {s}->{tg} {ns}.{rel}: decoded {got:?}, fixpoint {want:?}"));
                        }
                        compared += 1;
                    }
                }
            }
        }
    }
    if witnesses == 0 {
        return Err("no witness involving power".into());
    }
    Ok(format!("{compared} relation sets equal over {witnesses} witnesses"))
}

fn recursion_toy() -> Outcome {
    let g = EventGraph::compile(&parse_program("program toy\nthread t0\n x := 1;\n x := 2\nthread t1\n r0 <- x;\n r1 <- x").unwrap()).unwrap();
    let events = g.events.iter().filter(|e| e.kind != EventKind::Init).count();
    if events != 4 {
        return Err(format!("graph has {events} events"));
    }
    let m = parse_cat("model toy\nr3 := rf\nr4 := po\nr1 := r2 | r3\nr2 := r1 | r4\nacyclic r1 as one\nacyclic r2 as two").unwrap();
    let mut e = encode_reachability_pred(&g, &m, &Pred::Bool(true)).unwrap();
    let nodes = e.tgt.clone().unwrap();
    let mut models = 0;
    while models < 20 {
        let r = solve(&e.formula, &SolverConfig::default()).unwrap();
        if r.status != Status::Sat {
            break;
        }
        let w = decode(&r, &e.enc, &[&nodes]).unwrap();
        let mut want: Pairs = w.rf.clone();
        for &a in &w.executed {
            for &b in &w.executed {
                if po(&g, a, b) {
                    want.insert((a, b));
                }
            }
        }
        for rel in ["m.r1", "m.r2"] {
            if w.derived.get(rel) != Some(&want) {
                return Err(format!("{rel} = {:?}, expected r3 | r4 = {want:?}", w.derived.get(rel)));
            }
        }
        models += 1;
        let block: Vec<BoolExpr> = r
            .assignment
            .iter()
            .filter_map(|(k, v)| match v {
                Value::Bool(b) => {
                    let var = BoolExpr::Var(k.as_str().into());
                    Some(if *b { BoolExpr::not(var) } else { var })
                }
                Value::Int(_) => None,
            })
            .collect();
        e.formula.assert(BoolExpr::or(block));
    }
    if models < 2 {
        return Err(format!("only {models} models"));
    }
    Ok(format!("r1 = r2 = r3 | r4 in all {models} enumerated models"))
}

fn deadness_monotonicity() -> Outcome {
    let dead = Options { dead: true, dead_strict: false };
    let mut checked = 0;
    let mut dead_bugs = 0;
    for name in corpus() {
        let g = graph(&name);
        for (s, t) in [("sc", "tso"), ("tso", "power")] {
            let with_dead = verdict(&g, s, t, &dead);
            if matches!(with_dead, Verdict::NotPortable(_)) {
                dead_bugs += 1;
                if !matches!(verdict(&g, s, t, &Options::default()), Verdict::NotPortable(_)) {
                    return Err(format!("{name} {s}->{t}: dead bug without plain bug"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} checks, {dead_bugs} dead bugs, zero violations"))
}

fn forall_property() -> Outcome {
    let t = Instant::now();
    let vars: Vec<String> = ["x1", "x2", "x3"].map(String::from).to_vec();
    let (sc, tso) = (model("sc"), model("tso"));
    for table in 0..256u64 {
        let psi = Psi { vars: vars.clone(), body: Formula::from_truth_table(&vars, table) };
        let g = EventGraph::compile(&gen_forall(&psi, &sb_seed(), Layout::default())).unwrap();
        let smt = check_portability(&g, &sc, &tso, &Options::default(), &SolverConfig::default()).unwrap().0;
        let brute = portable_bruteforce(&g, &sc, &tso, 24).map_err(|e| e.to_string())?;
        let want = psi.is_tautology();
        if matches!(smt, Verdict::Portable) != want || brute.is_none() != want || matches!(smt, Verdict::Unknown(_)) {
            return Err(format!("table {table:#04x}: smt {}, oracle portable {}", smt.name(), brute.is_none()));
        }
    }
    if t.elapsed() > Duration::from_secs(1800) {
        return Err(format!("too slow: {:?}", t.elapsed()));
    }
    Ok(format!("256 functions, Portable exactly for the tautology, SMT = oracle ({:.2?})", t.elapsed()))
}

fn state_separation() -> Outcome {
    let (code, out) = porthos(&["check", "-p", &lit_path("iriw0"), "-s", "tso", "-t", "power"]);
    if code != 1 || !out.contains("verdict: NotPortable") {
        return Err(format!("plain: exit {code}: {out}"));
    }
    let (code, out) = porthos(&["check", "-p", &lit_path("iriw0"), "-s", "tso", "-t", "power", "--state"]);
    if !out.contains("verdict: NotPortable+StateReachable") || !out.contains("reachability queries: 1\n") {
        return Err(format!("--state: exit {code}: {out}"));
    }
    Ok("NotPortable plain, StateReachable after exactly 1 query".into())
}

fn substitution(prior: &[(usize, bool)]) -> Outcome {
    for (c, ok) in prior {
        if (*c == 3 || *c == 6) && !ok {
            return Err(format!("substitute criterion {c} failed"));
        }
    }
    let g = graph("iriw");
    let (tso, power) = (model("tso"), model("power"));
    let opts = Options { dead: true, dead_strict: false };
    let a = emit_smt(&encode_portability(&g, &tso, &power, &opts).formula);
    let b = emit_smt(&encode_portability(&g, &tso, &power, &opts).formula);
    if a != b {
        return Err("emission is not deterministic".into());
    }
    let e = encode_portability(&g, &tso, &power, &Options::default());
    let n = g.len();
    let bound = e.enc.dag.len() * n * n * (usize::BITS - n.leading_zeros()) as usize;
    if e.formula.num_vars() > bound {
        return Err(format!("{} variables exceed {bound}", e.formula.num_vars()));
    }
    Ok(format!("population and timing figures substituted by criteria 3 and 6, deterministic emission, {} <= {bound} variables", e.formula.num_vars()))
}

fn main() {
    let criteria: &[Criterion] = &[
        ("IRIW verdicts", iriw_verdicts),
        ("mutual exclusion rows", mutex_rows),
        ("oracle equivalence", oracle_equivalence),
        ("fixpoint exactness", fixpoint_exactness),
        ("recursion toy case", recursion_toy),
        ("deadness monotonicity", deadness_monotonicity),
        ("forall reduction", forall_property),
        ("state separation", state_separation),
    ];
    let mut results = Vec::new();
    let mut failed = 0;
    let mut report = |i: usize, name: &str, outcome: Outcome, results: &mut Vec<(usize, bool)>| {
        match &outcome {
            Ok(msg) => println!("criterion {i} PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {i} FAIL {name}: {msg}");
            }
        }
        results.push((i, outcome.is_ok()));
    };
    for (i, &(name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        report(i + 1, name, outcome, &mut results);
    }
    let outcome = substitution(&results);
    report(9, "documented substitution", outcome, &mut results);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
