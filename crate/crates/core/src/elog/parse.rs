//! The `.elog` surface syntax.

use super::{validate_elog, Condition, DistanceTolerance, ElogError, ElogProgram, ElogRule, Mode, Parent, PathPattern};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
}

#[derive(Clone, Debug, PartialEq)]
enum Arg {
    Var(String),
    Str(String),
    Num(f64),
}

struct RawAtom {
    name: String,
    args: Vec<Arg>,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    line: usize,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.char_indices().peekable(), text, line: 1, line_start: 0 }
    }

    fn err(&self, at: usize, message: impl Into<String>) -> ElogError {
        ElogError::Parse { line: self.line, col: at - self.line_start + 1, message: message.into() }
    }

    /// Next token with its `(line, col)`, or `None` at the end. `%mode` lines
    /// are reported through `mode`.
    fn next(&mut self, mode: &mut Option<(Mode, usize)>) -> Result<Option<(Tok, usize, usize)>, ElogError> {
        while let Some(&(i, c)) = self.chars.peek() {
            if c == '\n' {
                self.chars.next();
                self.line += 1;
                self.line_start = i + 1;
            } else if c.is_whitespace() {
                self.chars.next();
            } else if c == '%' {
                let end = self.text[i..].find('\n').map_or(self.text.len(), |n| i + n);
                let comment = &self.text[i..end];
                if let Some(rest) = comment.strip_prefix("%mode") {
                    let m = match rest.trim() {
                        "minus" => Mode::Minus,
                        "delta" => Mode::Delta,
                        other => return Err(self.err(i, format!("unknown mode `{other}` (minus|delta)"))),
                    };
                    if mode.is_some() {
                        return Err(self.err(i, "duplicate %mode line"));
                    }
                    *mode = Some((m, self.line));
                }
                while self.chars.peek().is_some_and(|&(j, _)| j < end) {
                    self.chars.next();
                }
            } else {
                break;
            }
        }
        let Some((i, c)) = self.chars.next() else {
            return Ok(None);
        };
        let (line, col) = (self.line, i - self.line_start + 1);
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' => {
                if self.chars.next_if(|&(_, c)| c == '-').is_none() {
                    return Err(self.err(i, "expected `:-`"));
                }
                Tok::If
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\n')) | None => return Err(self.err(i, "unterminated string")),
                        Some((_, ch)) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut end = i + 1;
                while let Some(&(j, ch)) = self.chars.peek() {
                    let decimal_point =
                        ch == '.' && self.text[j + 1..].chars().next().is_some_and(|d| d.is_ascii_digit());
                    if ch.is_ascii_digit() || decimal_point {
                        self.chars.next();
                        end = j + 1;
                    } else {
                        break;
                    }
                }
                let v = self.text[i..end].parse().map_err(|_| self.err(i, "bad number"))?;
                Tok::Num(v)
            }
            c if c.is_alphabetic() || c == '_' || c == '$' => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, ch)) = self.chars.peek() {
                    if ch.is_alphanumeric() || ch == '_' || ch == '$' {
                        self.chars.next();
                        end = j + ch.len_utf8();
                    } else {
                        break;
                    }
                }
                Tok::Ident(self.text[i..end].to_string())
            }
            other => return Err(self.err(i, format!("unexpected character `{other}`"))),
        };
        Ok(Some((tok, line, col)))
    }
}

fn perr(line: usize, col: usize, message: impl Into<String>) -> ElogError {
    ElogError::Parse { line, col, message: message.into() }
}

fn tokens(text: &str) -> Result<(Vec<(Tok, usize, usize)>, Mode), ElogError> {
    let mut lx = Lexer::new(text);
    let mut mode = None;
    let mut out = Vec::new();
    while let Some(t) = lx.next(&mut mode)? {
        out.push(t);
    }
    Ok((out, mode.map_or(Mode::Minus, |(m, _)| m)))
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn pos(&self) -> (usize, usize) {
        self.toks.get(self.at).or(self.toks.last()).map_or((1, 1), |t| (t.1, t.2))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ElogError> {
        let (l, c) = self.pos();
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            Err(perr(l, c, format!("expected {what}")))
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ElogError> {
        let (line, col) = self.pos();
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return Err(perr(line, col, "expected a predicate name"));
        };
        self.at += 1;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            let (l, c) = self.pos();
            let arg = match self.peek().cloned() {
                Some(Tok::Ident(v)) => Arg::Var(v),
                Some(Tok::Str(s)) => Arg::Str(s),
                Some(Tok::Num(n)) => Arg::Num(n),
                _ => return Err(perr(l, c, "expected an argument")),
            };
            self.at += 1;
            args.push(arg);
            match self.peek() {
                Some(Tok::Comma) => self.at += 1,
                Some(Tok::RParen) => {
                    self.at += 1;
                    break;
                }
                _ => {
                    let (l, c) = self.pos();
                    return Err(perr(l, c, "expected `,` or `)`"));
                }
            }
        }
        Ok(RawAtom { name, args, line, col })
    }
}

fn var(a: &RawAtom, i: usize) -> Result<String, ElogError> {
    match a.args.get(i) {
        Some(Arg::Var(v)) => Ok(v.clone()),
        _ => Err(perr(a.line, a.col, format!("argument {} of `{}` must be a variable", i + 1, a.name))),
    }
}

fn path(a: &RawAtom, i: usize) -> Result<PathPattern, ElogError> {
    match a.args.get(i) {
        Some(Arg::Str(s)) => s.parse().map_err(|m: String| perr(a.line, a.col, m)),
        _ => Err(perr(a.line, a.col, format!("argument {} of `{}` must be a quoted path", i + 1, a.name))),
    }
}

fn num(a: &RawAtom, i: usize) -> Result<f64, ElogError> {
    match a.args.get(i) {
        Some(Arg::Num(n)) => Ok(*n),
        _ => Err(perr(a.line, a.col, format!("argument {} of `{}` must be a number", i + 1, a.name))),
    }
}

fn arity(a: &RawAtom, n: usize) -> Result<(), ElogError> {
    if a.args.len() == n {
        Ok(())
    } else {
        Err(perr(a.line, a.col, format!("`{}` takes {n} arguments, found {}", a.name, a.args.len())))
    }
}

fn condition(a: &RawAtom) -> Result<Option<Condition>, ElogError> {
    let c = match a.name.as_str() {
        "leaf" | "firstsibling" | "lastsibling" => {
            arity(a, 1)?;
            let x = var(a, 0)?;
            match a.name.as_str() {
                "leaf" => Condition::Leaf(x),
                "firstsibling" => Condition::FirstSibling(x),
                _ => Condition::LastSibling(x),
            }
        }
        "nextsibling" => {
            arity(a, 2)?;
            Condition::NextSibling(var(a, 0)?, var(a, 1)?)
        }
        "contains" => {
            arity(a, 3)?;
            Condition::Contains(var(a, 0)?, var(a, 1)?, path(a, 2)?)
        }
        "before" => {
            arity(a, 6)?;
            let tolerance = DistanceTolerance::new(num(a, 4)?, num(a, 5)?).map_err(|m| perr(a.line, a.col, m))?;
            Condition::Before { anchor: var(a, 0)?, x: var(a, 1)?, y: var(a, 2)?, path: path(a, 3)?, tolerance }
        }
        "notafter" | "notbefore" => {
            arity(a, 3)?;
            let (anchor, x, path) = (var(a, 0)?, var(a, 1)?, path(a, 2)?);
            if a.name == "notafter" {
                Condition::NotAfter { anchor, x, path }
            } else {
                Condition::NotBefore { anchor, x, path }
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(c))
}

fn rule(p: &mut Parser) -> Result<ElogRule, ElogError> {
    let head = p.atom()?;
    arity(&head, 1)?;
    let hv = var(&head, 0)?;
    if head.name == "root" {
        return Err(perr(head.line, head.col, "`root` cannot be defined"));
    }
    p.expect(Tok::If, "`:-`")?;
    let mut body = vec![p.atom()?];
    while p.peek() == Some(&Tok::Comma) {
        p.at += 1;
        body.push(p.atom()?);
    }
    p.expect(Tok::Dot, "`.`")?;

    let first = &body[0];
    arity(first, 1)?;
    let parent = match first.name.as_str() {
        "root" => Parent::Root,
        n if super::is_reserved(n) => {
            return Err(perr(first.line, first.col, format!("the first body atom must be a parent pattern, found `{n}`")))
        }
        n => Parent::Pattern(n.to_string()),
    };
    let parent_var = var(first, 0)?;
    let mut link: Option<PathPattern> = None;
    let mut conditions = Vec::new();
    let mut refs = Vec::new();
    for a in &body[1..] {
        if a.name == "subelem" {
            arity(a, 3)?;
            if link.is_some() {
                return Err(perr(a.line, a.col, "more than one subelem atom"));
            }
            if var(a, 0)? != parent_var || var(a, 1)? != hv {
                return Err(perr(a.line, a.col, "subelem must lead from the parent variable to the head variable"));
            }
            link = Some(path(a, 2)?);
        } else if let Some(c) = condition(a)? {
            conditions.push(c);
        } else if a.name == "root" || super::is_reserved(&a.name) {
            return Err(perr(a.line, a.col, format!("`{}` is not a condition predicate", a.name)));
        } else {
            arity(a, 1)?;
            refs.push((a.name.clone(), var(a, 0)?));
        }
    }
    if link.is_none() && parent_var != hv {
        return Err(perr(first.line, first.col, "a rule without subelem must use the head variable in its parent"));
    }
    Ok(ElogRule {
        head: head.name.clone(),
        var: hv,
        parent,
        parent_var,
        path: link.unwrap_or_default(),
        conditions,
        refs,
        line: head.line,
    })
}

/// Parses and shape-checks an `.elog` program.
pub fn parse_elog(text: &str) -> Result<ElogProgram, ElogError> {
    let (toks, mode) = tokens(text)?;
    let mut p = Parser { toks, at: 0 };
    let mut rules = Vec::new();
    while p.peek().is_some() {
        rules.push(rule(&mut p)?);
    }
    let prog = ElogProgram { mode, rules };
    validate_elog(&prog)?;
    Ok(prog)
}
