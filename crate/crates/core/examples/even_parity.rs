//! Evaluates the even-subtree program on a small tree with both engines.

use treelog::datalog::parse_program;
use treelog::eval::{evaluate, naive_fixpoint};
use treelog::tree::parse_term_tree;

fn main() {
    let p = parse_program(include_str!("../tests/data/even.dl")).unwrap();
    let t = parse_term_tree("a(a,a,a)").unwrap();

    let r = evaluate(&p, &t).unwrap();
    println!("{} rules, {} nodes", p.rules.len(), t.len());
    for q in ["C0", "C1"] {
        println!("{q}: {:?}", r.nodes_of(q));
    }

    let naive = naive_fixpoint(&p, &t).unwrap();
    for (i, round) in naive.rounds.iter().enumerate() {
        let atoms: Vec<String> = round.iter().map(|a| a.to_string()).collect();
        println!("round {}: {}", i + 1, atoms.join(" "));
    }
}
