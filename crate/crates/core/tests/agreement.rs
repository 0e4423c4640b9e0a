//! SMT verdicts against exhaustive enumeration on the litmus corpus.

use porthos::cat::builtin_model;
use porthos::check::{check_portability, Verdict};
use porthos::encode::Options;
use porthos::events::EventGraph;
use porthos::oracle::portable_bruteforce;
use porthos::prog::parse_program;
use porthos::solve::SolverConfig;
use porthos::witness::validate_witness;

fn corpus() -> Vec<(String, EventGraph)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/litmus");
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let p = parse_program(&std::fs::read_to_string(&path).unwrap()).unwrap().unroll(1);
        let g = EventGraph::compile(&p).unwrap();
        out.push((path.file_stem().unwrap().to_string_lossy().into_owned(), g));
    }
    out
}

#[test]
fn smt_agrees_with_enumeration() {
    let models = ["sc", "tso", "power"];
    let mut compared = 0;
    for (name, g) in corpus() {
        for s in models {
            for t in models {
                let (src, tgt) = (builtin_model(s).unwrap(), builtin_model(t).unwrap());
                let Ok(brute) = portable_bruteforce(&g, &src, &tgt, 16) else { continue };
                let (v, _) = check_portability(&g, &src, &tgt, &Options::default(), &SolverConfig::default()).unwrap();
                match v {
                    Verdict::Portable => assert!(brute.is_none(), "{name} {s}->{t}: enumeration found a bug"),
                    Verdict::NotPortable(w) => {
                        assert!(brute.is_some(), "{name} {s}->{t}: enumeration found no bug");
                        let r = validate_witness(&w, &g, Some(&src), Some(&tgt));
                        assert!(r.ok(), "{name} {s}->{t}: {:?}", r.problems);
                    }
                    Verdict::Unknown(m) => panic!("{name} {s}->{t}: {m}"),
                }
                compared += 1;
            }
        }
    }
    assert!(compared >= 9 * 15, "only {compared} comparisons");
}
