//! A small tag-soup HTML reader.
//!
//! Not a conforming HTML5 parser. Recovery rules:
//! - void elements never receive children;
//! - `li`, `p`, `td`/`th`, `tr`, `dt`/`dd` and `option` implicitly close an
//!   open element of the same family;
//! - a close tag closes every element opened after its most recent match and
//!   is ignored when there is no match;
//! - whatever is still open at end of input is closed.

use super::{Label, Tree, TreeBuilder, TreeError};

#[derive(Clone, Debug, Default)]
pub struct HtmlOptions {
    /// Append `.` and the class attribute (spaces replaced by `.`) to labels.
    pub class_labels: bool,
    /// Keep text runs that consist only of whitespace.
    pub keep_whitespace_text: bool,
}

const VOID: &[&str] = &[
    "br", "img", "hr", "input", "meta", "link", "area", "base", "col", "embed", "param", "source",
    "track", "wbr",
];

const RAW_TEXT: &[&str] = &["script", "style"];

/// Elements that close when a sibling from the listed set opens.
fn implied_close(open: &str, incoming: &str) -> bool {
    match open {
        "li" => incoming == "li",
        "p" => matches!(
            incoming,
            "p" | "div" | "ul" | "ol" | "table" | "h1" | "h2" | "h3" | "h4" | "h5" | "h6" | "pre"
                | "blockquote" | "dl" | "section" | "form" | "hr"
        ),
        "td" | "th" => matches!(incoming, "td" | "th" | "tr"),
        "tr" => incoming == "tr",
        "dt" | "dd" => matches!(incoming, "dt" | "dd"),
        "option" => incoming == "option",
        _ => false,
    }
}

/// Elements that bound the search for an implied close.
fn is_scope_boundary(tag: &str) -> bool {
    matches!(tag, "ul" | "ol" | "table" | "dl" | "select" | "html" | "body" | "div")
}

fn decode(bytes: &[u8]) -> Result<String, TreeError> {
    if bytes.contains(&0) {
        return Err(TreeError::Undecodable);
    }
    match std::str::from_utf8(bytes) {
        Ok(s) => Ok(s.strip_prefix('\u{feff}').unwrap_or(s).to_string()),
        // Latin-1 maps every byte to the code point of the same value.
        Err(_) => Ok(bytes.iter().map(|&b| b as char).collect()),
    }
}

pub fn parse_html(bytes: &[u8], opts: &HtmlOptions) -> Result<Tree, TreeError> {
    let src = decode(bytes)?;
    let tokens = tokenize(&src);
    build(tokens, opts)
}

#[derive(Debug, PartialEq)]
enum Token {
    Open { name: String, class: Option<String>, self_closing: bool },
    Close(String),
    Text(String),
}

fn tokenize(src: &str) -> Vec<Token> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut text_start = 0;
    let flush = |out: &mut Vec<Token>, from: usize, to: usize| {
        if from < to {
            out.push(Token::Text(decode_entities(&src[from..to])));
        }
    };
    while i < b.len() {
        if b[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &src[i..];
        if rest.starts_with("<!--") {
            flush(&mut out, text_start, i);
            i = rest.find("-->").map_or(b.len(), |e| i + e + 3);
            text_start = i;
        } else if rest.starts_with("<!") || rest.starts_with("<?") {
            flush(&mut out, text_start, i);
            i = rest.find('>').map_or(b.len(), |e| i + e + 1);
            text_start = i;
        } else if rest.starts_with("</") && rest[2..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            flush(&mut out, text_start, i);
            let end = rest.find('>').map_or(b.len(), |e| i + e + 1);
            let name = tag_name(&src[i + 2..end]);
            out.push(Token::Close(name));
            i = end;
            text_start = i;
        } else if rest[1..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            flush(&mut out, text_start, i);
            let end = find_tag_end(src, i + 1);
            let inner = &src[i + 1..end.saturating_sub(1).max(i + 1)];
            let name = tag_name(inner);
            let self_closing = inner.trim_end().ends_with('/');
            let class = attribute(inner, "class");
            i = end;
            if RAW_TEXT.contains(&name.as_str()) {
                // Contents of script/style are dropped along with the element.
                let close = format!("</{name}");
                let lower = src[i..].to_ascii_lowercase();
                i = match lower.find(&close) {
                    Some(p) => src[i + p..].find('>').map_or(b.len(), |e| i + p + e + 1),
                    None => b.len(),
                };
            } else {
                out.push(Token::Open { name, class, self_closing });
            }
            text_start = i;
        } else {
            i += 1;
        }
    }
    flush(&mut out, text_start, b.len());
    out
}

/// Index just past the `>` closing a tag that starts at `from`, honouring
/// quoted attribute values.
fn find_tag_end(src: &str, from: usize) -> usize {
    let b = src.as_bytes();
    let mut quote: Option<u8> = None;
    let mut i = from;
    while i < b.len() {
        let c = b[i];
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == b'"' || c == b'\'' => quote = Some(c),
            None if c == b'>' => return i + 1,
            None => {}
        }
        i += 1;
    }
    b.len()
}

fn tag_name(inner: &str) -> String {
    inner
        .chars()
        .take_while(|c| !c.is_whitespace() && *c != '/' && *c != '>')
        .collect::<String>()
        .to_ascii_lowercase()
}

fn attribute(inner: &str, key: &str) -> Option<String> {
    let mut rest = inner.trim_start_matches(|c: char| !c.is_whitespace());
    loop {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '/');
        if rest.is_empty() {
            return None;
        }
        let name_end = rest.find(|c: char| c.is_whitespace() || c == '=' || c == '/').unwrap_or(rest.len());
        let name = rest[..name_end].to_ascii_lowercase();
        rest = rest[name_end..].trim_start();
        let mut value = None;
        if let Some(after) = rest.strip_prefix('=') {
            let after = after.trim_start();
            let (v, remaining) = match after.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let body = &after[1..];
                    let close = body.find(q).unwrap_or(body.len());
                    (&body[..close], body.get(close + 1..).unwrap_or(""))
                }
                _ => {
                    let end = after.find(char::is_whitespace).unwrap_or(after.len());
                    (&after[..end], &after[end..])
                }
            };
            value = Some(decode_entities(v));
            rest = remaining;
        }
        if name == key {
            return value;
        }
    }
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(p) = rest.find('&') {
        out.push_str(&rest[..p]);
        rest = &rest[p..];
        let semi = rest[1..].find(';').map(|q| q + 1).filter(|&q| q <= 10);
        let decoded = semi.and_then(|q| {
            let ent = &rest[1..q];
            let c = if let Some(num) = ent.strip_prefix('#') {
                let v = if let Some(hex) = num.strip_prefix(['x', 'X']) {
                    u32::from_str_radix(hex, 16).ok()
                } else {
                    num.parse().ok()
                };
                v.and_then(char::from_u32)
            } else {
                match ent {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some('\u{a0}'),
                    "copy" => Some('\u{a9}'),
                    "euro" => Some('\u{20ac}'),
                    "mdash" => Some('\u{2014}'),
                    "ndash" => Some('\u{2013}'),
                    _ => None,
                }
            };
            c.map(|c| (c, q + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn label_for(name: &str, class: Option<&str>, opts: &HtmlOptions) -> Label {
    let mut s = name.to_string();
    if opts.class_labels {
        if let Some(c) = class {
            let parts: Vec<&str> = c.split_whitespace().collect();
            if !parts.is_empty() {
                s.push('.');
                s.push_str(&parts.join("."));
            }
        }
    }
    Label(s)
}

fn build(tokens: Vec<Token>, opts: &HtmlOptions) -> Result<Tree, TreeError> {
    let Some(first_elem) = tokens.iter().position(|t| matches!(t, Token::Open { .. })) else {
        return Err(TreeError::NoElements);
    };
    let root_is_html = matches!(&tokens[first_elem], Token::Open { name, .. } if name == "html")
        && tokens[..first_elem].iter().all(|t| matches!(t, Token::Text(s) if s.trim().is_empty()));
    let mut b = TreeBuilder::new();
    // Tag names of the open elements; index 0 is the root.
    let mut open: Vec<String> = Vec::new();
    let mut root_done = false;
    if !root_is_html {
        b.open(Label("html".into()))?;
        open.push("html".into());
    }
    let keep = |s: &str| opts.keep_whitespace_text || !s.trim().is_empty();
    for tok in tokens {
        match tok {
            Token::Text(s) => {
                if !open.is_empty() && keep(&s) {
                    b.leaf_with_text(Label("text".into()), Some(s))?;
                }
            }
            Token::Open { name, class, self_closing } => {
                let label = label_for(&name, class.as_deref(), opts);
                if open.is_empty() {
                    // Only the explicit html root opens here; content after
                    // it has closed is dropped.
                    if !root_done {
                        root_done = true;
                        b.open(label)?;
                        open.push(name);
                        if self_closing {
                            open.pop();
                            b.close()?;
                        }
                    }
                    continue;
                }
                while let Some(k) = implied_target(&open, &name) {
                    while open.len() > k {
                        open.pop();
                        b.close()?;
                    }
                }
                b.open(label)?;
                if VOID.contains(&name.as_str()) || self_closing {
                    b.close()?;
                } else {
                    open.push(name);
                }
            }
            Token::Close(name) => {
                if let Some(k) = open.iter().rposition(|o| *o == name) {
                    if k == 0 && !root_is_html {
                        continue;
                    }
                    while open.len() > k {
                        open.pop();
                        b.close()?;
                    }
                }
            }
        }
    }
    b.finish()
}

/// Stack index of an element implicitly closed by opening `incoming`,
/// searching down from the top until a scope boundary. The root is never
/// closed this way.
fn implied_target(open: &[String], incoming: &str) -> Option<usize> {
    for k in (1..open.len()).rev() {
        if implied_close(&open[k], incoming) {
            return Some(k);
        }
        if is_scope_boundary(&open[k]) {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{serialize_tree, TreeFormat};

    fn term(src: &str) -> String {
        serialize_tree(&parse_html(src.as_bytes(), &HtmlOptions::default()).unwrap(), TreeFormat::Term)
    }

    #[test]
    fn nested_a_elements() {
        assert_eq!(term("<a><a></a><a><a></a><a></a></a><a></a></a>"), "html(a(a,a(a,a),a))");
    }

    #[test]
    fn html_root_kept() {
        assert_eq!(term("<html></html>"), "html");
        assert_eq!(term("<!DOCTYPE html>\n<html><body></body></html>"), "html(body)");
    }

    #[test]
    fn list_items_auto_close() {
        let t = parse_html(b"<ul><li>x<li>y</ul>", &HtmlOptions::default()).unwrap();
        assert_eq!(t.to_string(), "html(ul(li(text),li(text)))");
        assert_eq!(t.text(crate::tree::NodeId(3)), Some("x"));
        assert_eq!(t.text(crate::tree::NodeId(5)), Some("y"));
    }

    #[test]
    fn void_and_raw_text() {
        assert_eq!(
            term("<html><body><br><img src='x>y'><p>a<script>if (a<b) {}</script></p></body></html>"),
            "html(body(br,img,p(text)))"
        );
        assert_eq!(term("<html><style>p { }</style><!-- c --><hr/></html>"), "html(hr)");
    }

    #[test]
    fn mismatched_close_tags() {
        assert_eq!(term("<html><div><span>x</div>y</html>"), "html(div(span(text)),text)");
        assert_eq!(term("<html><div></b>x</div></html>"), "html(div(text))");
    }

    #[test]
    fn tables_and_paragraphs() {
        assert_eq!(
            term("<table><tr><td>1<td>2<tr><td>3</table>"),
            "html(table(tr(td(text),td(text)),tr(td(text))))"
        );
        assert_eq!(term("<html><p>a<p>b<div>c</div></html>"), "html(p(text),p(text),div(text))");
    }

    #[test]
    fn entities_and_latin1() {
        let t = parse_html(b"<p>a&amp;b&#65;&#x42;&bogus;</p>", &HtmlOptions::default()).unwrap();
        assert_eq!(t.text(crate::tree::NodeId(2)), Some("a&bAB&bogus;"));
        let t = parse_html(b"<p>caf\xe9</p>", &HtmlOptions::default()).unwrap();
        assert_eq!(t.text(crate::tree::NodeId(2)), Some("caf\u{e9}"));
    }

    #[test]
    fn class_labels() {
        let opts = HtmlOptions { class_labels: true, ..Default::default() };
        let t = parse_html(br#"<div class="a  b"><span class=x>t</span></div>"#, &opts).unwrap();
        assert_eq!(t.to_string(), r#"html("div.a.b"("span.x"(text)))"#);
    }

    #[test]
    fn whitespace_text() {
        let src = b"<html> <p> </p> </html>";
        assert_eq!(parse_html(src, &HtmlOptions::default()).unwrap().to_string(), "html(p)");
        let opts = HtmlOptions { keep_whitespace_text: true, ..Default::default() };
        assert_eq!(parse_html(src, &opts).unwrap().to_string(), "html(text,p(text),text)");
    }

    #[test]
    fn errors() {
        assert_eq!(parse_html(b"just text", &HtmlOptions::default()), Err(TreeError::NoElements));
        assert_eq!(parse_html(b"<p>\0</p>", &HtmlOptions::default()), Err(TreeError::Undecodable));
    }
}
