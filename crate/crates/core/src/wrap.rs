//! Wrapper output: relabel the selected nodes of a document, drop the rest,
//! and reconnect each survivor to its nearest selected ancestor.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::elog::{eval_elog, ElogError, ElogProgram, Extents};
use crate::tree::{parse_html, HtmlOptions, Label, NodeId, Tree, TreeBuilder, TreeError};

#[derive(Debug, Error)]
pub enum WrapError {
    #[error("map line {line}: {message}")]
    Map { line: usize, message: String },
    #[error("node {node} is selected by several patterns: {}", patterns.join(", "))]
    Conflict { node: NodeId, patterns: Vec<String> },
    #[error(transparent)]
    Elog(#[from] ElogError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConflictPolicy {
    /// The first matching entry of the map wins; a warning is recorded.
    #[default]
    First,
    Error,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WrapperSpec {
    pub entries: Vec<(String, Label)>,
    pub conflict: ConflictPolicy,
    pub include_text: bool,
}

impl WrapperSpec {
    /// Reads `pattern => label` lines. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn parse_map(text: &str) -> Result<Self, WrapError> {
        let mut entries: Vec<(String, Label)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let map_err = |message: String| WrapError::Map { line, message };
            let (pat, label) = s.split_once("=>").ok_or_else(|| map_err("expected `pattern => label`".into()))?;
            let (pat, label) = (pat.trim(), label.trim());
            if pat.is_empty() || !pat.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '$') {
                return Err(map_err(format!("bad pattern name `{pat}`")));
            }
            if entries.iter().any(|(p, _)| p == pat) {
                return Err(map_err(format!("pattern `{pat}` mapped twice")));
            }
            let label = Label::new(label).map_err(|e| map_err(e.to_string()))?;
            entries.push((pat.to_string(), label));
        }
        Ok(WrapperSpec { entries, ..Default::default() })
    }

    /// Maps every pattern to itself.
    pub fn identity<'a>(patterns: impl IntoIterator<Item = &'a str>) -> Self {
        let entries = patterns.into_iter().filter_map(|p| Some((p.to_string(), Label::new(p).ok()?))).collect();
        WrapperSpec { entries, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputTree {
    pub tree: Tree,
    /// Source node of each output node; `None` only for a synthetic root.
    pub origin: Vec<Option<NodeId>>,
    pub warnings: Vec<String>,
}

impl OutputTree {
    pub fn has_synthetic_root(&self) -> bool {
        self.origin[0].is_none()
    }

    pub fn to_term(&self) -> String {
        self.tree.to_string()
    }

    /// `<label>…</label>` elements, one per line, indented by depth.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        xml_node(&self.tree, self.tree.root(), 0, &mut out);
        out
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn xml_node(t: &Tree, n: NodeId, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let l = t.label(n).as_str();
    match (t.text(n), t.is_leaf(n)) {
        (Some(text), true) => {
            let _ = writeln!(out, "{pad}<{l}>{}</{l}>", escape(text));
        }
        (_, true) => {
            let _ = writeln!(out, "{pad}<{l}/>");
        }
        _ => {
            let _ = writeln!(out, "{pad}<{l}>");
            for c in t.children(n) {
                xml_node(t, c, depth + 1, out);
            }
            let _ = writeln!(out, "{pad}</{l}>");
        }
    }
}

pub fn build_output_tree(t: &Tree, extents: &Extents, spec: &WrapperSpec) -> Result<OutputTree, WrapError> {
    let mut warnings = Vec::new();
    let mut chosen: BTreeMap<NodeId, (Label, Vec<String>)> = BTreeMap::new();
    for (pat, label) in &spec.entries {
        let Some(nodes) = extents.get(pat) else { continue };
        for &n in nodes {
            chosen.entry(n).or_insert_with(|| (label.clone(), Vec::new())).1.push(pat.clone());
        }
    }
    for (n, (label, pats)) in &chosen {
        if pats.len() > 1 {
            if spec.conflict == ConflictPolicy::Error {
                return Err(WrapError::Conflict { node: *n, patterns: pats.clone() });
            }
            warnings.push(format!("node {n} selected by {}; labeled {label}", pats.join(", ")));
        }
    }

    let selected = |n: NodeId| chosen.contains_key(&n);
    let top: Vec<NodeId> = chosen
        .keys()
        .copied()
        .filter(|&n| {
            let mut a = t.parent(n);
            while let Some(p) = a {
                if selected(p) {
                    return false;
                }
                a = t.parent(p);
            }
            true
        })
        .collect();

    let mut b = TreeBuilder::new();
    let mut origin = Vec::with_capacity(chosen.len() + 1);
    let synthetic = top.len() != 1;
    if synthetic {
        b.open(Label::new("result")?)?;
        origin.push(None);
    }
    // Selected nodes in document order; an open-node stack of source ids
    // gives each one its nearest selected ancestor.
    let mut stack: Vec<NodeId> = Vec::new();
    for (&n, (label, _)) in &chosen {
        while let Some(&top) = stack.last() {
            if t.is_ancestor(top, n) {
                break;
            }
            stack.pop();
            b.close()?;
        }
        let text = if spec.include_text && t.label(n).as_str() == "text" { t.text(n).map(str::to_string) } else { None };
        origin.push(Some(n));
        if text.is_some() {
            b.leaf_with_text(label.clone(), text)?;
            continue;
        }
        b.open(label.clone())?;
        stack.push(n);
    }
    let tree = b.finish()?;
    Ok(OutputTree { tree, origin, warnings })
}

/// Parses an HTML page, evaluates the wrapper and builds the output tree.
pub fn run_wrapper(
    document: &[u8],
    html: &HtmlOptions,
    wrapper: &ElogProgram,
    spec: &WrapperSpec,
) -> Result<OutputTree, WrapError> {
    let t = parse_html(document, html)?;
    let extents = eval_elog(wrapper, &t)?;
    build_output_tree(&t, &extents, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_term_tree;

    fn ext(pairs: &[(&str, &[usize])]) -> Extents {
        pairs.iter().map(|(p, ns)| (p.to_string(), ns.iter().map(|&i| NodeId(i)).collect())).collect()
    }

    fn spec(text: &str) -> WrapperSpec {
        WrapperSpec::parse_map(text).unwrap()
    }

    #[test]
    fn nesting_follows_ancestry() {
        let t = parse_term_tree("a(b(c),b)").unwrap();
        let o = build_output_tree(&t, &ext(&[("x", &[1, 3]), ("y", &[2])]), &spec("x => item\ny => sub\n")).unwrap();
        assert_eq!(o.to_term(), "result(item(sub),item)");
        assert_eq!(o.origin, vec![None, Some(NodeId(1)), Some(NodeId(2)), Some(NodeId(3))]);
    }

    #[test]
    fn empty_extents_give_synthetic_root() {
        let t = parse_term_tree("a(b)").unwrap();
        let o = build_output_tree(&t, &Extents::new(), &spec("x => item")).unwrap();
        assert_eq!(o.to_term(), "result");
        assert!(o.has_synthetic_root());
    }

    #[test]
    fn selecting_everything_keeps_shape() {
        let t = parse_term_tree("a(b(c,d),e(f))").unwrap();
        let o = build_output_tree(&t, &ext(&[("all", &[0, 1, 2, 3, 4, 5])]), &spec("all => n")).unwrap();
        assert_eq!(o.to_term(), "n(n(n,n),n(n))");
        assert!(!o.has_synthetic_root());
    }

    #[test]
    fn conflicts() {
        let t = parse_term_tree("a(b)").unwrap();
        let e = ext(&[("x", &[1]), ("y", &[1])]);
        let mut s = spec("x => one\ny => two");
        let o = build_output_tree(&t, &e, &s).unwrap();
        assert_eq!(o.to_term(), "one");
        assert_eq!(o.warnings.len(), 1);
        s.conflict = ConflictPolicy::Error;
        match build_output_tree(&t, &e, &s) {
            Err(WrapError::Conflict { node, patterns }) => {
                assert_eq!(node, NodeId(1));
                assert_eq!(patterns, vec!["x", "y"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_errors() {
        assert!(matches!(WrapperSpec::parse_map("x -> y"), Err(WrapError::Map { line: 1, .. })));
        assert!(matches!(WrapperSpec::parse_map("# c\nx => a\nx => b"), Err(WrapError::Map { line: 3, .. })));
        assert!(matches!(WrapperSpec::parse_map("x =>"), Err(WrapError::Map { line: 1, .. })));
    }

    #[test]
    fn table_with_text() {
        let html = b"<table><tr><td>1 &lt; 2</td><td>b</td></tr><tr><td>c</td></tr></table>";
        let w = crate::elog::parse_elog(
            "row(X) :- root(X0), subelem(X0, X, \"table.tr\").\n\
             cell(X) :- row(X0), subelem(X0, X, \"td\").\n\
             txt(X) :- cell(X0), subelem(X0, X, \"text\").\n",
        )
        .unwrap();
        let mut s = spec("row => row\ncell => cell\ntxt => v");
        s.include_text = true;
        let o = run_wrapper(html, &HtmlOptions::default(), &w, &s).unwrap();
        assert_eq!(o.to_term(), "result(row(cell(v),cell(v)),row(cell(v)))");
        let xml = o.to_xml();
        assert!(xml.contains("<v>1 &lt; 2</v>"), "{xml}");
        assert_eq!(run_wrapper(html, &HtmlOptions::default(), &w, &s).unwrap(), o);
    }
}
