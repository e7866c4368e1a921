use treelog::datalog::parse_program;
use treelog::eval::evaluate_query;
use treelog::mso::{encode_program, eval_mso_unary};
use treelog::tree::parse_term_tree;

fn main() {
    let p = parse_program("sel(X) :- label_b(X), firstchild(Y, X).\nsel(X) :- sel(Y), nextsibling(Y, X).").unwrap();
    let f = encode_program(&p, "sel").unwrap();
    println!("{f}");
    let t = parse_term_tree("a(b,a,a)").unwrap();
    println!("mso: {:?}", eval_mso_unary(&t, &f).unwrap());
    println!("datalog: {:?}", evaluate_query(&p, &t, "sel").unwrap());
}
