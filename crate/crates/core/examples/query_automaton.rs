//! Runs a ranked query automaton, prints its configurations, and checks the
//! compiled program selects the same nodes.

use treelog::automata::{compile, parse_qa, simulate, DEFAULT_MAX_STEPS};
use treelog::eval::evaluate;
use treelog::tree::{parse_term_tree, NodeId};

fn main() {
    let a = parse_qa(include_str!("../tests/data/parity.qa")).unwrap();
    let t = parse_term_tree("a(b(a,a),a)").unwrap();
    let run = simulate(&a, &t, DEFAULT_MAX_STEPS).unwrap();
    let states = &a.core().states;
    for (i, c) in run.configurations().iter().enumerate() {
        let cells: Vec<String> = c.iter().map(|(n, q)| format!("{}:{}", n.0, states[*q])).collect();
        println!("c{i}: {}", cells.join(" "));
    }
    println!("accepted: {}, selected: {:?}", run.accepted, run.query());

    let p = compile(&a);
    let r = evaluate(&p, &t).unwrap();
    println!("compiled: {} rules, accept {}, query {:?}", p.rules.len(), r.holds("accept", NodeId::ROOT), r.nodes_of("query"));
}
