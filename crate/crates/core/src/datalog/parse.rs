use super::{Atom, DatalogError, Pos, Pred, Program, Rule};
use crate::normalize::CatExpr;
use crate::tree::{Label, Relation};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    At,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1, col: 1 }
    }

    fn here(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.src[self.pos..].chars().next()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, Pos), DatalogError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let pos = self.here();
        let Some(c) = self.bump() else {
            return Ok((Tok::Eof, pos));
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '@' => Tok::At,
            ':' | '<' => {
                if self.peek() == Some('-') {
                    self.bump();
                    Tok::Neck
                } else {
                    return Err(DatalogError::Syntax { pos, message: format!("expected `{c}-`") });
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(DatalogError::Syntax { pos, message: "unterminated string".into() }),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            Some('n') => s.push('\n'),
                            _ => {
                                return Err(DatalogError::Syntax { pos, message: "invalid escape in string".into() })
                            }
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if is_ident_char(c) => {
                let start = self.pos - c.len_utf8();
                while self.peek().is_some_and(is_ident_char) {
                    self.bump();
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            other => return Err(DatalogError::Syntax { pos, message: format!("unexpected character `{other}`") }),
        };
        Ok((tok, pos))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn is_variable(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_uppercase() || c == '$' || c == '_')
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    pos: Pos,
}

enum Arg {
    Var(String),
    Str(String),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, DatalogError> {
        let mut lex = Lexer::new(src);
        let (tok, pos) = lex.next()?;
        Ok(Parser { lex, tok, pos })
    }

    fn advance(&mut self) -> Result<(), DatalogError> {
        let (tok, pos) = self.lex.next()?;
        self.tok = tok;
        self.pos = pos;
        Ok(())
    }

    fn syntax(&self, message: impl Into<String>) -> DatalogError {
        DatalogError::Syntax { pos: self.pos, message: message.into() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), DatalogError> {
        if self.tok == t {
            self.advance()
        } else {
            Err(self.syntax(format!("expected {what}")))
        }
    }

    fn program(&mut self) -> Result<Program, DatalogError> {
        let mut p = Program::default();
        while self.tok != Tok::Eof {
            if self.tok == Tok::At {
                self.directive(&mut p)?;
            } else {
                let r = self.rule()?;
                p.rules.push(r);
            }
        }
        Ok(p)
    }

    fn directive(&mut self, p: &mut Program) -> Result<(), DatalogError> {
        self.advance()?;
        match &self.tok {
            Tok::Ident(d) if d == "query" => {}
            _ => return Err(self.syntax("unknown directive, expected `@query`")),
        }
        self.advance()?;
        loop {
            match &self.tok {
                Tok::Ident(n) => {
                    if !p.queries.contains(n) {
                        p.queries.push(n.clone());
                    }
                }
                _ => return Err(self.syntax("expected a predicate name")),
            }
            self.advance()?;
            if self.tok == Tok::Comma {
                self.advance()?;
            } else {
                break;
            }
        }
        self.expect(Tok::Dot, "`.`")
    }

    fn rule(&mut self) -> Result<Rule, DatalogError> {
        let pos = self.pos;
        let head = self.atom()?;
        let mut body = Vec::new();
        if self.tok == Tok::Neck {
            self.advance()?;
            loop {
                body.push(self.atom()?);
                if self.tok == Tok::Comma {
                    self.advance()?;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Dot, "`,` or `.`")?;
        let mut r = Rule { head, body, pos: Some(pos) };
        r.dedup_body();
        Ok(r)
    }

    fn atom(&mut self) -> Result<Atom, DatalogError> {
        let pos = self.pos;
        let name = match &self.tok {
            Tok::Ident(n) => n.clone(),
            _ => return Err(self.syntax("expected an atom")),
        };
        self.advance()?;
        if self.tok != Tok::LParen {
            if Relation::from_name(&name).is_some() || is_reserved(&name) {
                return Err(DatalogError::Reserved {
                    pos,
                    name,
                    message: "builtin relation used without arguments".into(),
                });
            }
            return Ok(Atom { pred: Pred::Prop(name), args: Vec::new() });
        }
        self.advance()?;
        let mut args = Vec::new();
        loop {
            let apos = self.pos;
            match &self.tok {
                Tok::Ident(v) => args.push((Arg::Var(v.clone()), apos)),
                Tok::Str(s) => args.push((Arg::Str(s.clone()), apos)),
                _ => return Err(self.syntax("expected a variable")),
            }
            self.advance()?;
            if self.tok == Tok::Comma {
                self.advance()?;
            } else {
                break;
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        resolve(name, args, pos)
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "label" | "not_label" | "cat")
        || name.starts_with("child_")
        || name.starts_with("label_")
        || name.starts_with("not_label_")
}

fn vars_only(args: Vec<(Arg, Pos)>) -> Result<Vec<String>, DatalogError> {
    args.into_iter()
        .map(|(a, pos)| match a {
            Arg::Var(v) if is_variable(&v) => Ok(v),
            Arg::Var(c) | Arg::Str(c) => Err(DatalogError::Constant { pos, constant: c }),
        })
        .collect()
}

fn resolve(name: String, mut args: Vec<(Arg, Pos)>, pos: Pos) -> Result<Atom, DatalogError> {
    match name.as_str() {
        "label" | "not_label" => {
            let shape_ok = args.len() == 2 && matches!(args[1].0, Arg::Str(_));
            if !shape_ok {
                return Err(DatalogError::Reserved {
                    pos,
                    name,
                    message: "expected `(Var, \"label\")`".into(),
                });
            }
            let Some((Arg::Str(l), lpos)) = args.pop() else { unreachable!() };
            let label = Label::new(l).map_err(|_| DatalogError::Syntax { pos: lpos, message: "empty label".into() })?;
            let rel = if name == "label" { Relation::Label(label) } else { Relation::NotLabel(label) };
            Ok(Atom { pred: Pred::Builtin(rel), args: vars_only(args)? })
        }
        "cat" => {
            let shape_ok = args.len() == 3 && matches!(args[2].0, Arg::Str(_));
            if !shape_ok {
                return Err(DatalogError::Reserved {
                    pos,
                    name,
                    message: "expected `(Var, Var, \"expression\")`".into(),
                });
            }
            let Some((Arg::Str(src), epos)) = args.pop() else { unreachable!() };
            let e = CatExpr::parse(&src).map_err(|m| DatalogError::Syntax { pos: epos, message: m })?;
            Ok(Atom { pred: Pred::Cat(e), args: vars_only(args)? })
        }
        _ => {
            if let Some(rel) = Relation::from_name(&name) {
                return Ok(Atom { pred: Pred::Builtin(rel), args: vars_only(args)? });
            }
            if is_reserved(&name) {
                let message = if name.starts_with("child_") {
                    "`child_` must be followed by a positive integer"
                } else {
                    "malformed label predicate"
                };
                return Err(DatalogError::Reserved { pos, name, message: message.into() });
            }
            Ok(Atom { pred: Pred::Idb(name), args: vars_only(args)? })
        }
    }
}

pub fn parse_program(text: &str) -> Result<Program, DatalogError> {
    Parser::new(text)?.program()
}

/// Parses exactly one rule.
pub fn parse_rule(text: &str) -> Result<Rule, DatalogError> {
    let mut p = Parser::new(text)?;
    let r = p.rule()?;
    if p.tok != Tok::Eof {
        return Err(p.syntax("trailing input after rule"));
    }
    Ok(r)
}
