//! Document order as a caterpillar atom, then the same program in TMNF.

use treelog::datalog::parse_program;
use treelog::eval::evaluate;
use treelog::normalize::{to_tmnf, NormalizeOptions};
use treelog::tree::parse_term_tree;

fn main() {
    let p = parse_program(
        "after_b(Y) :- label_b(X), cat(X, Y, \"(firstchild | nextsibling | (firstchild^-1 | nextsibling^-1)*.nextsibling)+\").\n\
         @query after_b.",
    )
    .unwrap();
    let t = parse_term_tree("r(a,b(a,a),a(a))").unwrap();
    println!("after_b: {:?}", evaluate(&p, &t).unwrap().nodes_of("after_b"));

    let n = to_tmnf(&p, &NormalizeOptions::default()).unwrap();
    println!("{} TMNF rules", n.program.rules.len());
    println!("after_b: {:?}", evaluate(&n.program, &t).unwrap().nodes_of("after_b"));
}
