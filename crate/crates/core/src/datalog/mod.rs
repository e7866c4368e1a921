//! Monadic datalog over the tree signatures: syntax, printing, validation and
//! the structural tests (connectedness, acyclicity, TMNF shape).
//!
//! Surface syntax:
//!
//! ```text
//! % comment
//! @query C0.
//! B0(X) :- leaf(X).
//! C1(X) :- B0(X), label(X, "a").
//! R0(X0) :- C1(X0), nextsibling(X0, X), R1(X).
//! ```
//!
//! `label(X,"l")` and `label_l(X)` are the same atom, as are the `not_label`
//! forms. `child_<k>` is the k-th child relation. `cat(X,Y,"expr")` is a
//! caterpillar atom (see [`crate::normalize::CatExpr`]). A name without an
//! argument list is a propositional atom.

mod graph;
mod parse;

pub use graph::{components, is_acyclic, is_connected, is_tmnf, is_tmnf_rule, query_graph, QueryGraph, TmnfViolation};
pub use parse::{parse_program, parse_rule};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::normalize::CatExpr;
use crate::tree::{Label, Relation};

/// A predicate symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    /// Extensional relation supplied by the tree.
    Builtin(Relation),
    /// Binary caterpillar relation; only appears in intermediate programs.
    Cat(CatExpr),
    /// Intensional (monadic) predicate.
    Idb(String),
    /// Nullary predicate.
    Prop(String),
}

impl Pred {
    pub fn idb(name: impl Into<String>) -> Pred {
        Pred::Idb(name.into())
    }

    pub fn label(l: &str) -> Pred {
        Pred::Builtin(Relation::Label(Label::new(l).expect("nonempty label")))
    }

    pub fn arity(&self) -> usize {
        match self {
            Pred::Builtin(r) => r.arity(),
            Pred::Cat(_) => 2,
            Pred::Idb(_) => 1,
            Pred::Prop(_) => 0,
        }
    }

    pub fn is_extensional(&self) -> bool {
        matches!(self, Pred::Builtin(_) | Pred::Cat(_))
    }

    pub fn is_binary_extensional(&self) -> bool {
        match self {
            Pred::Builtin(r) => r.is_binary(),
            Pred::Cat(_) => true,
            _ => false,
        }
    }

    pub fn is_unary_builtin(&self) -> bool {
        matches!(self, Pred::Builtin(r) if !r.is_binary())
    }

    /// Name of an intensional or propositional predicate.
    pub fn name(&self) -> Option<&str> {
        match self {
            Pred::Idb(n) | Pred::Prop(n) => Some(n),
            _ => None,
        }
    }
}

/// An atom. Arguments are variable names; labels live in the predicate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(pred: Pred, args: &[&str]) -> Atom {
        Atom { pred, args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn unary(pred: Pred, x: &str) -> Atom {
        Atom { pred, args: vec![x.to_string()] }
    }

    pub fn binary(pred: Pred, x: &str, y: &str) -> Atom {
        Atom { pred, args: vec![x.to_string(), y.to_string()] }
    }

    pub fn rel(rel: Relation, args: &[&str]) -> Atom {
        Atom::new(Pred::Builtin(rel), args)
    }

    pub fn idb(name: &str, x: &str) -> Atom {
        Atom::unary(Pred::idb(name), x)
    }

    pub fn prop(name: &str) -> Atom {
        Atom { pred: Pred::Prop(name.to_string()), args: Vec::new() }
    }
}

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// `head :- body.` An empty body makes a fact.
#[derive(Clone, Debug, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub pos: Option<Pos>,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.body == other.body
    }
}

impl std::hash::Hash for Rule {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.head.hash(state);
        self.body.hash(state);
    }
}

impl PartialOrd for Rule {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rule {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.head, &self.body).cmp(&(&other.head, &other.body))
    }
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Rule {
        Rule { head, body, pos: None }
    }

    /// Variables in order of first occurrence, head first.
    pub fn vars(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for a in std::iter::once(&self.head).chain(&self.body) {
            for v in &a.args {
                if seen.insert(v.as_str()) {
                    out.push(v.as_str());
                }
            }
        }
        out
    }

    /// Removes literally repeated body atoms, keeping first occurrences.
    pub fn dedup_body(&mut self) {
        let mut seen = BTreeSet::new();
        self.body.retain(|a| seen.insert(a.clone()));
    }

    pub fn size(&self) -> usize {
        1 + self.body.len()
    }
}

/// A set of rules plus the declared query predicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub queries: Vec<String>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Program {
        Program { rules, queries: Vec::new() }
    }

    pub fn with_query(mut self, q: &str) -> Program {
        if !self.queries.iter().any(|x| x == q) {
            self.queries.push(q.to_string());
        }
        self
    }

    /// Number of atoms, the program size |P|.
    pub fn size(&self) -> usize {
        self.rules.iter().map(Rule::size).sum()
    }

    /// Intensional predicates defined by some rule head.
    pub fn defined(&self) -> BTreeSet<&str> {
        self.rules.iter().filter_map(|r| r.head.pred.name()).collect()
    }

    /// Every intensional (unary) predicate named anywhere.
    pub fn idb_predicates(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for a in std::iter::once(&r.head).chain(&r.body) {
                if let Pred::Idb(n) = &a.pred {
                    out.insert(n.as_str());
                }
            }
        }
        for q in &self.queries {
            out.insert(q.as_str());
        }
        out
    }

    /// Every predicate name, including propositional ones.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for a in std::iter::once(&r.head).chain(&r.body) {
                if let Some(n) = a.pred.name() {
                    out.insert(n.to_string());
                }
            }
        }
        out.extend(self.queries.iter().cloned());
        out
    }

    /// Labels mentioned by label/not_label atoms.
    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for a in &r.body {
                match &a.pred {
                    Pred::Builtin(Relation::Label(l) | Relation::NotLabel(l)) => {
                        out.insert(l.clone());
                    }
                    Pred::Cat(e) => out.extend(e.labels()),
                    _ => {}
                }
            }
        }
        out
    }

    /// Largest k of any child_k atom (0 when there is none).
    pub fn max_child_k(&self) -> u32 {
        let mut k = 0;
        for r in &self.rules {
            for a in &r.body {
                match &a.pred {
                    Pred::Builtin(Relation::ChildK(j)) => k = k.max(*j),
                    Pred::Cat(e) => k = k.max(e.max_child_k()),
                    _ => {}
                }
            }
        }
        k
    }

    pub fn uses_relation(&self, f: impl Fn(&Relation) -> bool) -> bool {
        self.rules.iter().flat_map(|r| &r.body).any(|a| matches!(&a.pred, Pred::Builtin(r) if f(r)))
    }

    pub fn has_cat_atoms(&self) -> bool {
        self.rules.iter().flat_map(|r| &r.body).any(|a| matches!(a.pred, Pred::Cat(_)))
    }

    /// Query predicates, or every defined predicate when none is declared.
    pub fn effective_queries(&self) -> Vec<String> {
        if self.queries.is_empty() {
            self.defined().into_iter().map(String::from).collect()
        } else {
            self.queries.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub pos: Option<Pos>,
    pub message: String,
}

impl Diagnostic {
    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        match self.pos {
            Some(p) => format!("{file}:{}:{}: {}: {}", p.line, p.col, self.severity, self.message),
            None => format!("{file}: {}: {}", self.severity, self.message),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("<input>"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatalogError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: reserved name `{name}`: {message}")]
    Reserved { pos: Pos, name: String, message: String },
    #[error("{pos}: constant `{constant}` in non-label position")]
    Constant { pos: Pos, constant: String },
    #[error("invalid program: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Static checks: safety, monadicity, builtin arity, defined predicates.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let defined = p.defined();
    let mut undefined_reported = BTreeSet::new();
    for r in &p.rules {
        let err = |m: String| Diagnostic { severity: Severity::Error, pos: r.pos, message: m };
        match &r.head.pred {
            Pred::Idb(n) => {
                if r.head.args.len() != 1 {
                    out.push(err(format!(
                        "intensional predicate `{n}` must be unary (monadic datalog), head has {} argument(s)",
                        r.head.args.len()
                    )));
                }
            }
            Pred::Prop(n) => {
                if !r.head.args.is_empty() {
                    out.push(err(format!("propositional predicate `{n}` takes no arguments")));
                }
            }
            other => out.push(err(format!("extensional predicate `{}` cannot be a rule head", PredDisplay(other)))),
        }
        if r.body.is_empty() && !r.head.args.is_empty() {
            out.push(err("facts are only allowed for propositional predicates".into()));
        }
        for a in &r.body {
            if a.args.len() != a.pred.arity() {
                let what = match &a.pred {
                    Pred::Idb(n) => format!("intensional predicate `{n}` must be unary"),
                    other => format!("`{}` takes {} argument(s)", PredDisplay(other), other.arity()),
                };
                out.push(err(format!("{what}, got {}", a.args.len())));
            }
            if let Pred::Idb(n) | Pred::Prop(n) = &a.pred {
                if !defined.contains(n.as_str()) && undefined_reported.insert(n.clone()) {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        pos: r.pos,
                        message: format!("predicate `{n}` is never defined; its extension is empty"),
                    });
                }
            }
        }
        let body_vars: BTreeSet<&str> = r.body.iter().flat_map(|a| a.args.iter().map(String::as_str)).collect();
        for v in &r.head.args {
            if !body_vars.contains(v.as_str()) {
                out.push(err(format!("unsafe rule: head variable `{v}` does not occur in the body")));
            }
        }
    }
    for q in &p.queries {
        if !defined.contains(q.as_str()) && !undefined_reported.contains(q) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                pos: None,
                message: format!("query predicate `{q}` has no defining rule"),
            });
        }
    }
    out
}

/// Errors out when [`validate`] reports an error.
pub fn check(p: &Program) -> Result<(), DatalogError> {
    let errors: Vec<_> = validate(p).into_iter().filter(|d| d.severity == Severity::Error).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(DatalogError::Invalid(errors))
    }
}

struct PredDisplay<'a>(&'a Pred);

impl fmt::Display for PredDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Pred::Builtin(r) => write!(f, "{r}"),
            Pred::Cat(e) => write!(f, "cat[{e}]"),
            Pred::Idb(n) | Pred::Prop(n) => f.write_str(n),
        }
    }
}

fn label_is_ident(l: &Label) -> bool {
    l.as_str().chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self.args.join(",");
        match &self.pred {
            Pred::Builtin(Relation::Label(l)) if !label_is_ident(l) => {
                write!(f, "label({args},{})", quote(l.as_str()))
            }
            Pred::Builtin(Relation::NotLabel(l)) if !label_is_ident(l) => {
                write!(f, "not_label({args},{})", quote(l.as_str()))
            }
            Pred::Builtin(r) => write!(f, "{r}({args})"),
            Pred::Cat(e) => write!(f, "cat({args},{})", quote(&e.to_string())),
            Pred::Idb(n) => write!(f, "{n}({args})"),
            Pred::Prop(n) => {
                if self.args.is_empty() {
                    f.write_str(n)
                } else {
                    write!(f, "{n}({args})")
                }
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
        }
        f.write_str(".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.queries {
            writeln!(f, "@query {q}.")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Fresh-name supply that avoids every name already in use.
///
/// Generated names start with `$`, which user programs may contain but
/// rarely do; collisions are checked regardless.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    used: BTreeSet<String>,
    counters: BTreeMap<String, usize>,
}

impl FreshNames {
    pub fn for_program(p: &Program) -> FreshNames {
        let mut f = FreshNames::default();
        f.used.extend(p.all_names());
        for r in &p.rules {
            for v in r.vars() {
                f.used.insert(v.to_string());
            }
        }
        f
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    /// A new name `$<prefix><n>`.
    pub fn fresh(&mut self, prefix: &str) -> String {
        let c = self.counters.entry(prefix.to_string()).or_insert(0);
        loop {
            let cand = format!("${prefix}{c}");
            *c += 1;
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_flags_unsafe_and_monadicity() {
        let p = parse_program("q(X) :- root(Y).").unwrap();
        let d = validate(&p);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("unsafe"));
        assert_eq!(d[0].render("x.dl"), "x.dl:1:1: error: unsafe rule: head variable `X` does not occur in the body");

        let p = parse_program("q(X,Y) :- firstchild(X,Y).").unwrap();
        let d = validate(&p);
        assert!(d.iter().any(|d| d.message.contains("must be unary")));
    }

    #[test]
    fn validate_builtin_arity_and_undefined() {
        let p = parse_program("q(X) :- firstchild(X), r(X).").unwrap();
        let d = validate(&p);
        assert!(d.iter().any(|d| d.severity == Severity::Error && d.message.contains("takes 2")));
        assert!(d.iter().any(|d| d.severity == Severity::Warning && d.message.contains("`r`")));
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let p = parse_program("$p0(X) :- root(X). q(X) :- $p0(X).").unwrap();
        let mut f = FreshNames::for_program(&p);
        assert_eq!(f.fresh("p"), "$p1");
        assert_eq!(f.fresh("p"), "$p2");
    }

    #[test]
    fn print_parse_round_trip() {
        let src = "@query q.\nq(X) :- label(X,\"div.x\"), not_label_td(X), cat(X,Y,\"nextsibling*\"), b.\nb.\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.to_string(), src);
        assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }
}
