//! The `.mso` s-expression syntax.

use super::{Formula, MsoError};
use crate::tree::Relation;

const WIDTH: usize = 80;

fn flat(f: &Formula) -> String {
    let (head, args) = parts(f);
    let mut s = format!("({head}");
    for a in args {
        s.push(' ');
        match a {
            Part::Word(w) => s.push_str(&w),
            Part::Sub(g) => s.push_str(&flat(g)),
        }
    }
    s.push(')');
    s
}

enum Part<'a> {
    Word(String),
    Sub(&'a Formula),
}

fn parts(f: &Formula) -> (String, Vec<Part<'_>>) {
    let w = |s: &String| Part::Word(s.clone());
    match f {
        Formula::Rel(r, args) => (r.to_string(), args.iter().map(w).collect()),
        Formula::Eq(x, y) => ("=".into(), vec![w(x), w(y)]),
        Formula::In(x, p) => ("in".into(), vec![w(x), w(p)]),
        Formula::Not(a) => ("not".into(), vec![Part::Sub(a)]),
        Formula::And(v) => ("and".into(), v.iter().map(Part::Sub).collect()),
        Formula::Or(v) => ("or".into(), v.iter().map(Part::Sub).collect()),
        Formula::Implies(a, b) => ("implies".into(), vec![Part::Sub(a), Part::Sub(b)]),
        Formula::Iff(a, b) => ("iff".into(), vec![Part::Sub(a), Part::Sub(b)]),
        Formula::Exists(x, a) => ("exists".into(), vec![w(x), Part::Sub(a)]),
        Formula::Forall(x, a) => ("forall".into(), vec![w(x), Part::Sub(a)]),
        Formula::ExistsSet(p, a) => ("exists-set".into(), vec![w(p), Part::Sub(a)]),
        Formula::ForallSet(p, a) => ("forall-set".into(), vec![w(p), Part::Sub(a)]),
    }
}

fn pretty_at(f: &Formula, indent: usize, out: &mut String) {
    let one = flat(f);
    if indent + one.len() <= WIDTH {
        out.push_str(&one);
        return;
    }
    let (head, args) = parts(f);
    out.push('(');
    out.push_str(&head);
    let mut words = true;
    for a in args {
        match a {
            Part::Word(s) if words => {
                out.push(' ');
                out.push_str(&s);
            }
            Part::Word(s) => {
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                out.push_str(&s);
            }
            Part::Sub(g) => {
                words = false;
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                pretty_at(g, indent + 2, out);
            }
        }
    }
    out.push(')');
}

pub(super) fn pretty(f: &Formula) -> String {
    let mut s = String::new();
    pretty_at(f, 0, &mut s);
    s
}

#[derive(Debug)]
enum Sx {
    Atom(usize, String),
    List(usize, Vec<Sx>),
}

fn perr(offset: usize, message: impl Into<String>) -> MsoError {
    MsoError::Parse { offset, message: message.into() }
}

fn read(text: &str) -> Result<Sx, MsoError> {
    let mut stack: Vec<(usize, Vec<Sx>)> = Vec::new();
    let mut done: Option<Sx> = None;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b';' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if done.is_some() {
            return Err(perr(i, "trailing input after formula"));
        }
        let item = match c {
            b'(' => {
                stack.push((i, Vec::new()));
                i += 1;
                continue;
            }
            b')' => {
                let (start, items) = stack.pop().ok_or_else(|| perr(i, "unbalanced `)`"))?;
                i += 1;
                Sx::List(start, items)
            }
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'(' | b')' | b';') {
                    i += 1;
                }
                Sx::Atom(start, text[start..i].to_string())
            }
        };
        match stack.last_mut() {
            Some((_, items)) => items.push(item),
            None => done = Some(item),
        }
    }
    if let Some((start, _)) = stack.last() {
        return Err(perr(*start, "unclosed `(`"));
    }
    done.ok_or_else(|| perr(0, "empty input"))
}

fn word(s: &Sx) -> Result<String, MsoError> {
    match s {
        Sx::Atom(_, w) if w.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '$') => Ok(w.clone()),
        Sx::Atom(o, w) => Err(perr(*o, format!("bad variable name `{w}`"))),
        Sx::List(o, _) => Err(perr(*o, "expected a variable")),
    }
}

fn build(s: &Sx) -> Result<Formula, MsoError> {
    let (start, items) = match s {
        Sx::Atom(o, w) => return Err(perr(*o, format!("expected `(`, found `{w}`"))),
        Sx::List(o, items) => (*o, items),
    };
    let Some(Sx::Atom(_, head)) = items.first() else {
        return Err(perr(start, "expected an operator"));
    };
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(perr(start, format!("`{head}` takes {n} arguments, found {}", args.len())))
        }
    };
    let sub = |i: usize| build(&args[i]).map(Box::new);
    Ok(match head.as_str() {
        "and" => Formula::And(args.iter().map(build).collect::<Result<_, _>>()?),
        "or" => Formula::Or(args.iter().map(build).collect::<Result<_, _>>()?),
        "not" => {
            arity(1)?;
            Formula::Not(sub(0)?)
        }
        "implies" | "iff" => {
            arity(2)?;
            if head == "iff" {
                Formula::Iff(sub(0)?, sub(1)?)
            } else {
                Formula::Implies(sub(0)?, sub(1)?)
            }
        }
        "exists" | "forall" | "exists-set" | "forall-set" => {
            arity(2)?;
            let v = word(&args[0])?;
            let b = sub(1)?;
            match head.as_str() {
                "exists" => Formula::Exists(v, b),
                "forall" => Formula::Forall(v, b),
                "exists-set" => Formula::ExistsSet(v, b),
                _ => Formula::ForallSet(v, b),
            }
        }
        "in" => {
            arity(2)?;
            Formula::In(word(&args[0])?, word(&args[1])?)
        }
        "=" => {
            arity(2)?;
            Formula::Eq(word(&args[0])?, word(&args[1])?)
        }
        name => {
            let r = Relation::from_name(name).ok_or_else(|| perr(start, format!("unknown relation `{name}`")))?;
            arity(r.arity())?;
            Formula::Rel(r, args.iter().map(word).collect::<Result<_, _>>()?)
        }
    })
}

/// Parses the s-expression form printed by `Formula`'s `Display`.
pub fn parse_mso(text: &str) -> Result<Formula, MsoError> {
    build(&read(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for text in [
            "(forall-set P (implies (forall z (implies (root z) (in z P))) (in x P)))",
            "(exists y (and (child_2 x y) (not (= x y)) (or) (label_a y)))",
            "(iff (exists-set Q (in x Q)) (and))",
        ] {
            let f = parse_mso(text).unwrap();
            assert_eq!(flat(&f), text);
            assert_eq!(parse_mso(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn long_formulas_break_lines() {
        let mut f = parse_mso("(root x)").unwrap();
        for i in 0..12 {
            f = Formula::forall(&format!("y{i}"), Formula::implies(parse_mso("(leaf x)").unwrap(), f));
        }
        let s = f.to_string();
        assert!(s.lines().count() > 1);
        assert_eq!(parse_mso(&s).unwrap(), f);
    }

    #[test]
    fn errors() {
        assert!(parse_mso("(root x").is_err());
        assert!(parse_mso("(root x y)").is_err());
        assert!(parse_mso("(bogus x)").is_err());
        assert!(parse_mso("(root x) (root y)").is_err());
        assert!(parse_mso("; nothing\n").is_err());
    }
}
