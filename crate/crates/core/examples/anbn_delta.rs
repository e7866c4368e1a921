//! A Δ-wrapper recognizing flat trees whose children spell aⁿbⁿ.

use treelog::elog::{eval_elog, parse_elog};
use treelog::tree::parse_term_tree;

fn main() {
    let w = parse_elog(include_str!("../tests/data/anbn.elog")).unwrap();
    for word in ["ab", "aabb", "aab", "abab", "aaabbb", "ba"] {
        let kids: Vec<String> = word.chars().map(String::from).collect();
        let t = parse_term_tree(&format!("r({})", kids.join(","))).unwrap();
        let e = eval_elog(&w, &t).unwrap();
        let yes = e.get("anbn").is_some_and(|s| !s.is_empty());
        println!("{word}: {yes}");
    }
}
