use treelog::automata::{compile, parse_qa, simulate, DEFAULT_MAX_STEPS};
use treelog::eval::evaluate;
use treelog::tree::parse_term_tree;

fn main() {
    let a = parse_qa(include_str!("../tests/data/alternate.qa")).unwrap();
    let p = compile(&a);
    for src in ["a(b,b,b,b)", "a(b,b,b)", "a(b,a,b)"] {
        let t = parse_term_tree(src).unwrap();
        let run = simulate(&a, &t, DEFAULT_MAX_STEPS).unwrap();
        let r = evaluate(&p, &t).unwrap();
        println!("{src}: simulator {:?} in {} steps, compiled {:?}", run.query(), run.step_count(), r.set_of("query"));
    }
}
