use super::*;
use crate::cat::{builtin_model, parse_cat};
use crate::events::EventGraph;
use crate::prog::{parse_pred, parse_program};
use crate::solve::{emit_smt, solve, SolverConfig, Status};
use crate::witness::{decode, reach_state, validate_witness};

fn graph(src: &str) -> EventGraph {
    EventGraph::compile(&parse_program(src).unwrap().unroll(1)).unwrap()
}

fn litmus(name: &str) -> EventGraph {
    let path = format!("{}/litmus/{name}.lit", env!("CARGO_MANIFEST_DIR"));
    graph(&std::fs::read_to_string(path).unwrap())
}

fn status(f: &Formula) -> Status {
    solve(f, &SolverConfig::default()).unwrap().status
}

#[test]
fn iriw_tso_to_power() {
    let g = litmus("iriw");
    let (tso, power) = (builtin_model("tso").unwrap(), builtin_model("power").unwrap());
    let e = encode_portability(&g, &tso, &power, &Options::default());
    let r = solve(&e.formula, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, Status::Sat);
    let w = decode(&r, &e.enc, &[e.tgt.as_ref().unwrap(), e.src.as_ref().unwrap()]).unwrap();
    let report = validate_witness(&w, &g, Some(&tso), Some(&power));
    assert!(report.ok(), "{:?}", report.problems);
    assert_eq!(w.violated, ["tso"]);
    let s = reach_state(&w, &g);
    assert_eq!((s["t2:r1"], s["t2:r2"], s["t3:r1"], s["t3:r2"]), (1, 0, 1, 0));
}

#[test]
fn iriw_sc_to_tso_is_portable() {
    let g = litmus("iriw");
    let e = encode_portability(&g, &builtin_model("sc").unwrap(), &builtin_model("tso").unwrap(), &Options::default());
    assert_eq!(status(&e.formula), Status::Unsat);
}

#[test]
fn same_model_is_portable() {
    for name in ["sb", "mp", "lb+datas"] {
        let g = litmus(name);
        for m in ["sc", "tso", "power"] {
            let m = builtin_model(m).unwrap();
            let e = encode_portability(&g, &m, &m, &Options::default());
            assert_eq!(status(&e.formula), Status::Unsat, "{name} {}", m.name);
        }
    }
}

#[test]
fn sb_sc_to_tso() {
    let g = litmus("sb");
    let (sc, tso) = (builtin_model("sc").unwrap(), builtin_model("tso").unwrap());
    let e = encode_portability(&g, &sc, &tso, &Options::default());
    let r = solve(&e.formula, &SolverConfig::default()).unwrap();
    let w = decode(&r, &e.enc, &[e.tgt.as_ref().unwrap(), e.src.as_ref().unwrap()]).unwrap();
    assert!(validate_witness(&w, &g, Some(&sc), Some(&tso)).ok());
    let s = reach_state(&w, &g);
    assert_eq!((s["t0:r0"], s["t1:r1"]), (0, 0));
}

#[test]
fn sb_reachability() {
    let g = litmus("sb");
    let sigma: State = [("x", 1), ("y", 1), ("t0:r0", 0), ("t1:r1", 0)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let tso = encode_reachability(&g, &builtin_model("tso").unwrap(), &sigma).unwrap();
    assert_eq!(status(&tso.formula), Status::Sat);
    let sc = encode_reachability(&g, &builtin_model("sc").unwrap(), &sigma).unwrap();
    assert_eq!(status(&sc.formula), Status::Unsat);
    let pred = parse_pred("t0:r0 = 0 && t1:r1 = 0").unwrap();
    let sc = encode_reachability_pred(&g, &builtin_model("sc").unwrap(), &pred).unwrap();
    assert_eq!(status(&sc.formula), Status::Unsat);
    let mut bad = sigma.clone();
    bad.insert("nowhere".into(), 0);
    assert!(encode_reachability(&g, &builtin_model("sc").unwrap(), &bad).is_err());
}

#[test]
fn deterministic_emission() {
    let g = litmus("iriw");
    let (tso, power) = (builtin_model("tso").unwrap(), builtin_model("power").unwrap());
    let a = emit_smt(&encode_portability(&g, &tso, &power, &Options { dead: true, dead_strict: false }).formula);
    let b = emit_smt(&encode_portability(&g, &tso, &power, &Options { dead: true, dead_strict: false }).formula);
    assert_eq!(a, b);
}

#[test]
fn branch_arms_are_balanced() {
    // The then-arm assigns r twice, the else-arm once; both reach the final version.
    let g = graph("program p\nthread t0\n r0 <- x;\n if (r0 = 0) { r = 1; r = r + 1 } else { r = 7 };\n y := r");
    let m = crate::cat::MemoryModel::empty();
    for (want, ok) in [(2, Status::Sat), (7, Status::Unsat), (1, Status::Unsat)] {
        let pred = parse_pred(&format!("y = {want}")).unwrap();
        let e = encode_reachability_pred(&g, &m, &pred).unwrap();
        assert_eq!(status(&e.formula), ok, "y = {want}");
    }
    let pred = parse_pred("t0:r = 7").unwrap();
    assert_eq!(status(&encode_reachability_pred(&g, &m, &pred).unwrap().formula), Status::Unsat);
}

#[test]
fn boolean_only_formula_uses_lia() {
    let g = graph("program p\nthread t0\n skip");
    let e = encode_portability(&g, &builtin_model("sc").unwrap(), &builtin_model("sc").unwrap(), &Options::default());
    assert_eq!(crate::solve::logic(&e.formula), "QF_LIA");
    assert_eq!(status(&e.formula), Status::Unsat);
}

#[test]
fn irreflexive_violation_over_identity() {
    let g = litmus("sb");
    let m = parse_cat("model m\nirreflexive id(EV) as refl").unwrap();
    let e = encode_portability(&g, &m, &MemoryModel::empty(), &Options::default());
    assert_eq!(status(&e.formula), Status::Sat);
    let e = encode_portability(&g, &MemoryModel::empty(), &MemoryModel::empty(), &Options::default());
    assert_eq!(status(&e.formula), Status::Unsat);
}

#[test]
fn recursion_certificates_force_least_fixpoint() {
    // r1 and r2 reference each other; any larger fixpoint would let the
    // irreflexive violation pick a pair outside r3 | r4.
    let g = litmus("mp");
    let m = parse_cat("model m\nr3 := rf\nr4 := po\nr1 := r2 | r3\nr2 := r1 | r4\nirreflexive (r1 \\ (r3 | r4)) ; (r1 \\ (r3 | r4))^-1 as extra").unwrap();
    let e = encode_portability(&g, &m, &MemoryModel::empty(), &Options::default());
    assert_eq!(status(&e.formula), Status::Unsat);
}

#[test]
fn variable_count_stays_small() {
    let g = litmus("iriw");
    let e = encode_portability(&g, &builtin_model("tso").unwrap(), &builtin_model("power").unwrap(), &Options::default());
    let n = g.len();
    let log = (usize::BITS - n.leading_zeros()) as usize;
    let nodes = e.enc.dag.len();
    assert!(e.formula.num_vars() <= nodes * n * n * log, "{} vars", e.formula.num_vars());
    assert!(e.formula.num_vars() < 2500, "{} vars", e.formula.num_vars());
}
