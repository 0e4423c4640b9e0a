use porthos::cat::builtin_model;
use porthos::events::EventGraph;
use porthos::gen::Formula;
use porthos::oracle::{enumerate_executions, is_consistent};
use porthos::prog::parse_program;
use porthos::rel::Relation;
use porthos::witness::{check_wellformed, from_json, reach_state, to_json};
use proptest::prelude::*;
use std::collections::BTreeSet;

const N: usize = 7;

fn relation() -> impl Strategy<Value = BTreeSet<(usize, usize)>> {
    prop::collection::btree_set((0..N, 0..N), 0..16)
}

fn naive_closure(r: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut c = r.clone();
    loop {
        let step: Vec<_> = c.iter().flat_map(|&(a, b)| c.iter().filter(move |&&(x, _)| x == b).map(move |&(_, d)| (a, d))).collect();
        let before = c.len();
        c.extend(step);
        if c.len() == before {
            return c;
        }
    }
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![any::<bool>().prop_map(Formula::Const), (1..4u8).prop_map(|i| Formula::var(&format!("x{i}")))];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::negate),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
        ]
    })
}

/// One access or local step of a generated thread.
fn step(tid: usize) -> impl Strategy<Value = String> {
    let loc = prop_oneof![Just("x"), Just("y")];
    prop_oneof![
        (0..2usize, loc.clone()).prop_map(move |(r, l)| format!("r{r} <- {l}")),
        (1..3i64, loc.clone()).prop_map(move |(c, l)| format!("rc = {c}; {l} := rc")),
        (0..2usize, 0..3i64, loc).prop_map(move |(r, c, l)| format!("r{r} <- {l}; if (r{r} = {c}) {{ rc = {}; {l} := rc }}", tid + 1)),
    ]
}

fn program() -> impl Strategy<Value = String> {
    (prop::collection::vec(step(0), 1..3), prop::collection::vec(step(1), 1..3)).prop_map(|(a, b)| {
        format!("program rand\nthread t0\n r0 = 0; r1 = 0;\n {}\nthread t1\n r0 = 0; r1 = 0;\n {}", a.join(";\n "), b.join(";\n "))
    })
}

proptest! {
    #[test]
    fn set_operations_match_btreeset(a in relation(), b in relation()) {
        let (ra, rb) = (Relation::from_pairs(N, a.iter().copied()), Relation::from_pairs(N, b.iter().copied()));
        prop_assert_eq!(ra.union(&rb).to_set(), a.union(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(ra.inter(&rb).to_set(), a.intersection(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(ra.diff(&rb).to_set(), a.difference(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(ra.len(), a.len());
        let comp: BTreeSet<_> = a.iter().flat_map(|&(x, y)| b.iter().filter(move |&&(y2, _)| y2 == y).map(move |&(_, z)| (x, z))).collect();
        prop_assert_eq!(ra.compose(&rb).to_set(), comp);
        prop_assert_eq!(ra.inverse().inverse(), ra.clone());
    }

    #[test]
    fn closure_is_least_transitive_superset(a in relation()) {
        let r = Relation::from_pairs(N, a.iter().copied());
        let plus = r.plus();
        prop_assert_eq!(plus.to_set(), naive_closure(&a));
        prop_assert_eq!(r.is_acyclic(), plus.is_irreflexive());
    }

    #[test]
    fn formula_display_round_trips(f in formula()) {
        let g = Formula::parse(&f.to_string()).unwrap();
        let vars: Vec<String> = (1..4).map(|i| format!("x{i}")).collect();
        for row in 0..8u32 {
            let value = |v: &str| vars.iter().position(|w| w == v).is_some_and(|i| row >> i & 1 == 1);
            prop_assert_eq!(f.eval(&value), g.eval(&value), "{}", f);
        }
    }

    #[test]
    fn truth_table_evaluates_to_its_bits(table in 0..256u64) {
        let vars: Vec<String> = (1..4).map(|i| format!("x{i}")).collect();
        let f = Formula::from_truth_table(&vars, table);
        for row in 0..8u64 {
            let value = |v: &str| vars.iter().position(|w| w == v).is_some_and(|i| row >> i & 1 == 1);
            prop_assert_eq!(f.eval(&value), table >> row & 1 == 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn program_text_round_trips(text in program()) {
        let p = parse_program(&text).unwrap();
        prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn models_are_nested_and_executions_wellformed(text in program()) {
        let g = EventGraph::compile(&parse_program(&text).unwrap()).unwrap();
        let [sc, tso, power] = ["sc", "tso", "power"].map(|m| builtin_model(m).unwrap());
        let all = enumerate_executions(&g, 16).unwrap();
        prop_assert!(!all.is_empty());
        for w in &all {
            prop_assert!(check_wellformed(w, &g).is_empty(), "{:?}", check_wellformed(w, &g));
            if is_consistent(w, &g, &sc) {
                prop_assert!(is_consistent(w, &g, &tso));
            }
            if is_consistent(w, &g, &tso) {
                prop_assert!(is_consistent(w, &g, &power));
            }
        }
    }

    #[test]
    fn witness_json_round_trips(text in program(), pick in any::<prop::sample::Index>()) {
        let g = EventGraph::compile(&parse_program(&text).unwrap()).unwrap();
        let all = enumerate_executions(&g, 16).unwrap();
        let w = &all[pick.index(all.len())];
        let (doc, back) = from_json(&to_json(w, &g, "sc", "tso", "NotPortable")).unwrap();
        prop_assert_eq!(&doc.program, "rand");
        prop_assert_eq!(&back.executed, &w.executed);
        prop_assert_eq!(&back.rf, &w.rf);
        prop_assert_eq!(&back.co, &w.co);
        prop_assert_eq!(&back.values, &w.values);
        prop_assert_eq!(doc.state, reach_state(w, &g));
    }
}
