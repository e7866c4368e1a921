use std::fmt::Write as _;

use serde::Serialize;

use super::{Label, NodeId, Tree, TreeBuilder, TreeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeFormat {
    Term,
    JsonLines,
}

/// Parses `tree := label ["(" tree ("," tree)* ")"]`.
///
/// Labels are bare identifiers (letters, digits, `-`, `:`, `#`) or
/// double-quoted strings with `\"` and `\\` escapes. Whitespace between
/// tokens is ignored.
pub fn parse_term_tree(text: &str) -> Result<Tree, TreeError> {
    let mut p = TermParser { src: text.as_bytes(), text, pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(TreeError::EmptyInput);
    }
    let mut b = TreeBuilder::new();
    p.tree(&mut b)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input after tree"));
    }
    b.finish()
}

struct TermParser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl TermParser<'_> {
    fn err(&self, message: &str) -> TreeError {
        TreeError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    // Iterative to survive very deep trees.
    fn tree(&mut self, b: &mut TreeBuilder) -> Result<(), TreeError> {
        let base = b.depth();
        loop {
            self.skip_ws();
            let label = self.label()?;
            b.open(label)?;
            self.skip_ws();
            if self.peek() == Some(b'(') {
                self.pos += 1;
                continue;
            }
            b.close()?;
            loop {
                self.skip_ws();
                if b.depth() == base {
                    return Ok(());
                }
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                        break;
                    }
                    Some(b')') => {
                        self.pos += 1;
                        b.close()?;
                    }
                    Some(_) => return Err(self.err("expected `,` or `)`")),
                    None => return Err(self.err("unexpected end of input, expected `)`")),
                }
            }
        }
    }

    fn label(&mut self) -> Result<Label, TreeError> {
        match self.peek() {
            Some(b'"') => {
                let start = self.pos;
                self.pos += 1;
                let mut out = String::new();
                loop {
                    let rest = &self.text[self.pos..];
                    let mut chars = rest.chars();
                    match chars.next() {
                        None => {
                            self.pos = start;
                            return Err(self.err("unterminated quoted label"));
                        }
                        Some('"') => {
                            self.pos += 1;
                            break;
                        }
                        Some('\\') => match chars.next() {
                            Some(c @ ('"' | '\\')) => {
                                out.push(c);
                                self.pos += 2;
                            }
                            _ => return Err(self.err("invalid escape in quoted label")),
                        },
                        Some(c) => {
                            out.push(c);
                            self.pos += c.len_utf8();
                        }
                    }
                }
                Label::new(out).map_err(|_| {
                    self.pos = start;
                    self.err("empty label")
                })
            }
            Some(_) => {
                let start = self.pos;
                for c in self.text[self.pos..].chars() {
                    if c.is_alphanumeric() || c == '-' || c == ':' || c == '#' {
                        self.pos += c.len_utf8();
                    } else {
                        break;
                    }
                }
                if self.pos == start {
                    return Err(self.err("expected a label"));
                }
                Ok(Label(self.text[start..self.pos].to_string()))
            }
            None => Err(self.err("unexpected end of input, expected a label")),
        }
    }
}

fn write_label(out: &mut String, l: &Label) {
    if l.is_bare() {
        out.push_str(l.as_str());
    } else {
        out.push('"');
        for c in l.as_str().chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
    }
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    id: usize,
    label: &'a str,
    parent: Option<usize>,
    text: Option<&'a str>,
}

pub fn serialize_tree(t: &Tree, format: TreeFormat) -> String {
    match format {
        TreeFormat::Term => term(t),
        TreeFormat::JsonLines => {
            let mut out = String::new();
            for n in t.nodes() {
                let rec = NodeRecord {
                    id: n.0,
                    label: t.label(n).as_str(),
                    parent: t.parent(n).map(|p| p.0),
                    text: t.text(n),
                };
                out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
                out.push('\n');
            }
            out
        }
    }
}

fn term(t: &Tree) -> String {
    let mut out = String::with_capacity(t.len() * 3);
    // Preorder walk with explicit close markers.
    let mut stack: Vec<(NodeId, bool)> = vec![(t.root(), false)];
    while let Some((n, closing)) = stack.pop() {
        if closing {
            out.push(')');
            continue;
        }
        if t.prev_sibling(n).is_some() {
            out.push(',');
        }
        write_label(&mut out, t.label(n));
        if !t.is_leaf(n) {
            out.push('(');
            stack.push((n, true));
            for c in t.children(n).rev() {
                stack.push((c, false));
            }
        }
    }
    out
}

impl std::fmt::Display for Tree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&term(self))
    }
}

/// Writes a tree as indented outline, one node per line, for debugging.
pub fn outline(t: &Tree) -> String {
    let mut out = String::new();
    for n in t.nodes() {
        let _ = writeln!(out, "{}{} {}", "  ".repeat(t.depth(n)), n.0, t.label(n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for s in ["a(a,a(a,a),a)", "a", "a(b,c)", "\"x y\"(\"q\\\"\",b)", "div(\"p.note\",\"my_tag\")"] {
            let t = parse_term_tree(s).unwrap();
            assert_eq!(serialize_tree(&t, TreeFormat::Term), s);
        }
    }

    #[test]
    fn whitespace_tolerated() {
        let t = parse_term_tree("  a ( b , c ( d ) )\n").unwrap();
        assert_eq!(t.to_string(), "a(b,c(d))");
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(parse_term_tree(""), Err(TreeError::EmptyInput));
        assert_eq!(parse_term_tree("   "), Err(TreeError::EmptyInput));
        match parse_term_tree("a(b,") {
            Err(TreeError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse_term_tree("a(b c)") {
            Err(TreeError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_term_tree("a(b))").is_err());
        assert!(parse_term_tree("a()").is_err());
        assert!(parse_term_tree("\"\"").is_err());
        assert!(parse_term_tree("\"abc").is_err());
    }

    #[test]
    fn json_lines() {
        let t = parse_term_tree("a(b)").unwrap();
        let s = serialize_tree(&t, TreeFormat::JsonLines);
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], r#"{"id":0,"label":"a","parent":null,"text":null}"#);
        assert_eq!(lines[1], r#"{"id":1,"label":"b","parent":0,"text":null}"#);
    }

    #[test]
    fn deep_tree_does_not_overflow() {
        let depth = 200_000;
        let s = format!("{}a{}", "a(".repeat(depth), ")".repeat(depth));
        let t = parse_term_tree(&s).unwrap();
        assert_eq!(t.len(), depth + 1);
        assert_eq!(t.to_string(), s);
    }
}
