use treelog::elog::{elog_to_datalog, eval_elog, parse_elog};
use treelog::tree::{parse_html, HtmlOptions};

fn main() {
    let page = b"<html><body><table><tr><td>x</td><td>y</td></tr><tr><td>z</td></tr></table></body></html>";
    let t = parse_html(page, &HtmlOptions::default()).unwrap();
    println!("{t}");
    let w = parse_elog(include_str!("../tests/data/table.elog")).unwrap();
    for (pat, nodes) in eval_elog(&w, &t).unwrap() {
        let ids: Vec<usize> = nodes.iter().map(|n| n.0).collect();
        println!("{pat}: {ids:?}");
    }
    println!("{}", elog_to_datalog(&w).unwrap());
}
