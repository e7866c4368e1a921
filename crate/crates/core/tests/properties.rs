//! Property tests. Each case draws a seed and builds its inputs with the
//! crate's generators; the assertions go through the oracles in `common`.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{check_tree, oracle_eval};
use treelog::automata::{compile, simulate, QueryAutomaton};
use treelog::datalog::{is_tmnf, Program};
use treelog::elog::{datalog_to_elog_over, eval_elog, eval_elog_direct, Extents};
use treelog::eval::{evaluate, naive_fixpoint};
use treelog::normalize::{to_tmnf, NormalizeOptions, Signature};
use treelog::random::{
    random_binary_tree, random_program, random_terminating_ranked, random_tree, random_tree_upto, ProgramShape, QaShape,
};
use treelog::tree::{parse_term_tree, serialize_tree, Label, NodeId, TreeFormat};
use treelog::wrap::{build_output_tree, WrapperSpec};

fn idb(p: &Program) -> Vec<String> {
    p.idb_predicates().into_iter().map(str::to_string).collect()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn generated_trees_are_well_formed(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = StdRng::seed_from_u64(seed);
        let t = random_tree(&mut rng, n, &["a", "b", "c"]);
        prop_assert_eq!(t.len(), n);
        prop_assert_eq!(check_tree(&t), Ok(()));
    }

    #[test]
    fn term_round_trip(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = StdRng::seed_from_u64(seed);
        let t = random_tree(&mut rng, n, &["a", "b", "c"]);
        let s = serialize_tree(&t, TreeFormat::Term);
        let back = parse_term_tree(&s).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(serialize_tree(&back, TreeFormat::Term), s);
    }

    #[test]
    fn engines_agree_with_oracle(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_program(&mut rng, &ProgramShape::unranked());
        let t = random_tree_upto(&mut rng, 10, &["a", "b"]);
        let linear = evaluate(&p, &t).unwrap();
        let naive = naive_fixpoint(&p, &t).unwrap();
        let want = oracle_eval(&p, &t);
        for q in idb(&p) {
            let w: BTreeSet<usize> = want.get(&q).cloned().unwrap_or_default();
            let l: BTreeSet<usize> = linear.nodes_of(&q).into_iter().collect();
            let n: BTreeSet<usize> = naive.nodes_of(&q).into_iter().map(|x| x.0).collect();
            prop_assert_eq!(&l, &w, "linear, {} on {}\n{}", q, t, p);
            prop_assert_eq!(&n, &w, "naive, {} on {}\n{}", q, t, p);
        }
    }
}

proptest! {
    #![proptest_config(config(60))]

    #[test]
    fn tmnf_preserves_queries(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_program(&mut rng, &ProgramShape::unranked());
        let n = to_tmnf(&p, &NormalizeOptions { signature: Signature::Unranked, ..Default::default() }).unwrap();
        prop_assert!(is_tmnf(&n.program).is_ok(), "{}", n.program);
        for _ in 0..4 {
            let t = random_tree_upto(&mut rng, 8, &["a", "b"]);
            let want = oracle_eval(&p, &t);
            let got = evaluate(&n.program, &t).unwrap();
            for q in idb(&p) {
                let w: BTreeSet<usize> = want.get(&q).cloned().unwrap_or_default();
                let g: BTreeSet<usize> = got.nodes_of(&q).into_iter().collect();
                prop_assert_eq!(&g, &w, "{} on {}\n{}\n=>\n{}", q, t, p, n.program);
            }
        }
    }

    #[test]
    fn elog_compiled_matches_direct(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_program(&mut rng, &ProgramShape::unranked());
        let alphabet: BTreeSet<Label> = ["a", "b"].into_iter().map(|l| Label::new(l).unwrap()).collect();
        let e = datalog_to_elog_over(&p, &alphabet).unwrap();
        for _ in 0..4 {
            let t = random_tree_upto(&mut rng, 10, &["a", "b"]);
            prop_assert_eq!(eval_elog(&e, &t).unwrap(), eval_elog_direct(&e, &t), "on {}\n{}", t, e);
        }
    }

    #[test]
    fn ranked_automata_compile_faithfully(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let probes: Vec<_> = (0..6).map(|_| random_binary_tree(&mut rng, 9, &["a", "b"])).collect();
        let a = QueryAutomaton::Ranked(random_terminating_ranked(&mut rng, &QaShape::default(), &probes, 10_000));
        let p = compile(&a);
        for t in &probes {
            let run = simulate(&a, t, 10_000).unwrap();
            let r = evaluate(&p, t).unwrap();
            prop_assert_eq!(r.holds("accept", NodeId::ROOT), run.accepted, "on {}\n{}", t, a);
            prop_assert_eq!(r.set_of("query"), run.query(), "on {}\n{}", t, a);
        }
    }

    #[test]
    fn wrapper_output_respects_ancestry_and_order(
        seed in any::<u64>(),
        n in 1usize..30,
        picks in proptest::collection::vec((0usize..30, 0usize..3), 0..15),
    ) {
        let mut rng = StdRng::seed_from_u64(seed);
        let t = random_tree(&mut rng, n, &["a", "b"]);
        let pats = ["x", "y", "z"];
        let mut ext: Extents = BTreeMap::new();
        for &(node, pat) in &picks {
            ext.entry(pats[pat].to_string()).or_default().insert(NodeId(node % n));
        }
        let o = build_output_tree(&t, &ext, &WrapperSpec::identity(pats)).unwrap();
        let selected: BTreeSet<NodeId> = ext.values().flatten().copied().collect();
        let origins: Vec<NodeId> = o.origin.iter().flatten().copied().collect();

        // Every selected node appears once, in document order.
        prop_assert_eq!(origins.iter().copied().collect::<BTreeSet<_>>(), selected.clone());
        prop_assert!(origins.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(o.has_synthetic_root(), o.tree.len() != selected.len());

        for i in 0..o.tree.len() {
            let Some(src) = o.origin[i] else { continue };
            let nearest = std::iter::successors(t.parent(src), |&a| t.parent(a)).find(|a| selected.contains(a));
            let out_parent = o.tree.parent(NodeId(i)).and_then(|p| o.origin[p.0]);
            prop_assert_eq!(out_parent, nearest);
            // The first pattern of the map that selects a node names it.
            let first = pats.iter().find(|p| ext.get(**p).is_some_and(|s| s.contains(&src))).unwrap();
            prop_assert_eq!(o.tree.label(NodeId(i)).as_str(), *first);
        }
    }
}
