use treelog::elog::parse_elog;
use treelog::tree::HtmlOptions;
use treelog::wrap::{run_wrapper, WrapperSpec};

fn main() {
    let page = include_bytes!("../tests/data/html/19_products.html");
    let w = parse_elog(include_str!("../tests/data/table.elog")).unwrap();
    let mut spec = WrapperSpec::parse_map(include_str!("../tests/data/table.map")).unwrap();
    spec.include_text = true;
    let out = run_wrapper(page, &HtmlOptions::default(), &w, &spec).unwrap();
    println!("{}", out.to_term());
    print!("{}", out.to_xml());
}
