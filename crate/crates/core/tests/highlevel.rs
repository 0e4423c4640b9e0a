//! Portability of a labelled high-level program across two compilations.

use porthos::cat::builtin_model;
use porthos::check::{check_highlevel, HighLevelVerdict};
use porthos::events::EventGraph;
use porthos::prog::parse_program;
use porthos::solve::SolverConfig;
use porthos::witness::validate_witness;

const HIGH: &str = "program mp\nthread t0\n x := 1 @hl=1;\n y := 1 @hl=2\nthread t1\n r0 <- y @hl=3;\n r1 <- x @hl=4";
const FENCED: &str = "program mp\nthread t0\n x := 1 @hl=1;\n sync;\n y := 1 @hl=2\nthread t1\n r0 <- y @hl=3;\n sync;\n r1 <- x @hl=4";

fn graph(text: &str) -> EventGraph {
    EventGraph::compile(&parse_program(text).unwrap()).unwrap()
}

fn check(src_prog: &str, tgt_prog: &str, src: &str, tgt: &str) -> HighLevelVerdict {
    let high = parse_program(HIGH).unwrap();
    let (s, t) = (graph(src_prog), graph(tgt_prog));
    let (sm, tm) = (builtin_model(src).unwrap(), builtin_model(tgt).unwrap());
    let (v, _) = check_highlevel(&high, &s, &t, &sm, &tm, &SolverConfig::default()).unwrap();
    if let HighLevelVerdict::NotPortable { source, target } = &v {
        assert!(validate_witness(target, &t, None, Some(&tm)).ok());
        assert!(validate_witness(source, &s, Some(&sm), None).ok());
    }
    v
}

#[test]
fn unfenced_power_compilation_breaks_message_passing() {
    assert!(matches!(check(HIGH, HIGH, "tso", "power"), HighLevelVerdict::NotPortable { .. }));
}

#[test]
fn fenced_power_compilation_is_portable() {
    assert!(matches!(check(HIGH, FENCED, "tso", "power"), HighLevelVerdict::Portable));
    assert!(matches!(check(HIGH, HIGH, "tso", "tso"), HighLevelVerdict::Portable));
}

#[test]
fn unlabelled_access_is_rejected() {
    let high = parse_program(HIGH).unwrap();
    let bad = graph("program mp\nthread t0\n x := 1;\n y := 1 @hl=2\nthread t1\n r0 <- y @hl=3;\n r1 <- x @hl=4");
    let ok = graph(HIGH);
    let sc = builtin_model("sc").unwrap();
    assert!(check_highlevel(&high, &ok, &bad, &sc, &sc, &SolverConfig::default()).is_err());
}
