use treelog::datalog::{is_tmnf, parse_program};
use treelog::normalize::{to_tmnf, NormalizeOptions};

fn main() {
    let p = parse_program(
        "deep(X) :- child(X, Y), child(Y, Z), label_b(Z), lastchild(X, W), label_a(W).\n\
         @query deep.",
    )
    .unwrap();
    println!("{p}");
    let n = to_tmnf(&p, &NormalizeOptions::default()).unwrap();
    for w in &n.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", n.program);
    println!("tmnf: {}", is_tmnf(&n.program).is_ok());
}
