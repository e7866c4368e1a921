//! Elog-style wrapper programs: rules that locate a pattern below (or at)
//! an instance of a parent pattern along a fixed label path, refined by
//! sibling and containment conditions.
//!
//! ```text
//! %mode minus
//! row(X) :- root(X0), subelem(X0, X, "table._.tr").
//! cell(X) :- row(X0), subelem(X0, X, "td").
//! first(X) :- cell(X), firstsibling(X).
//! ```
//!
//! In `delta` mode rules may also use `before(X0, X, Y, "path", alpha, beta)`,
//! `notafter(X0, X, "path")` and `notbefore(X0, X, "path")`; such programs are
//! evaluated directly instead of being compiled to datalog.

mod eval;
mod parse;
mod translate;

pub use eval::{eval_elog, eval_elog_direct, Extents};
pub use parse::parse_elog;
pub use translate::{datalog_to_elog, datalog_to_elog_over, elog_to_datalog, expand_subelem};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::eval::EvalError;
use crate::tree::{Label, Relation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElogError {
    #[error("{line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("line {line}: {message}")]
    Shape { line: usize, message: String },
    #[error("line {line}: `{atom}` needs %mode delta")]
    DeltaAtom { line: usize, atom: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PathStep {
    Any,
    Label(Label),
}

/// A dot-separated label path; `_` matches any label. The empty path is ε.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathPattern {
    pub steps: Vec<PathStep>,
}

impl PathPattern {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn label(l: &Label) -> PathPattern {
        PathPattern { steps: vec![PathStep::Label(l.clone())] }
    }

    pub fn any() -> PathPattern {
        PathPattern { steps: vec![PathStep::Any] }
    }
}

impl FromStr for PathPattern {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(PathPattern::default());
        }
        let steps = s
            .split('.')
            .map(|part| match part {
                "_" => Ok(PathStep::Any),
                _ => Label::new(part).map(PathStep::Label).map_err(|e| format!("bad path step `{part}`: {e}")),
            })
            .collect::<Result<_, _>>()?;
        Ok(PathPattern { steps })
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            match s {
                PathStep::Any => f.write_str("_")?,
                PathStep::Label(l) => write!(f, "{l}")?,
            }
        }
        Ok(())
    }
}

/// Percentages `alpha..=beta` of the anchor's child count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceTolerance {
    pub alpha: f64,
    pub beta: f64,
}

impl DistanceTolerance {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, String> {
        if !(0.0 <= alpha && alpha <= beta && beta <= 100.0) {
            return Err(format!("distance tolerance {alpha}%-{beta}% outside 0 <= alpha <= beta <= 100"));
        }
        Ok(DistanceTolerance { alpha, beta })
    }

    /// Whether `distance` lies within the tolerance for `k` children.
    pub fn admits(&self, k: usize, distance: i64) -> bool {
        let d = distance as f64 * 100.0;
        let k = k as f64;
        k * self.alpha <= d && d <= k * self.beta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Condition {
    Leaf(String),
    FirstSibling(String),
    LastSibling(String),
    NextSibling(String, String),
    /// `contains(X, Y, "path")`: Y is reached from X along a nonempty path.
    Contains(String, String, PathPattern),
    /// X and Y are children of the anchor, Y is reached from the anchor
    /// along the path, and Y is within the tolerance to the right of X.
    Before { anchor: String, x: String, y: String, path: PathPattern, tolerance: DistanceTolerance },
    /// No node reached from the anchor along the path precedes X in document order.
    NotAfter { anchor: String, x: String, path: PathPattern },
    /// No node reached from the anchor along the path follows X in document order.
    NotBefore { anchor: String, x: String, path: PathPattern },
}

impl Condition {
    pub fn is_delta(&self) -> bool {
        matches!(self, Condition::Before { .. } | Condition::NotAfter { .. } | Condition::NotBefore { .. })
    }

    pub fn vars(&self) -> Vec<&str> {
        match self {
            Condition::Leaf(x) | Condition::FirstSibling(x) | Condition::LastSibling(x) => vec![x],
            Condition::NextSibling(x, y) | Condition::Contains(x, y, _) => vec![x, y],
            Condition::Before { anchor, x, y, .. } => vec![anchor, x, y],
            Condition::NotAfter { anchor, x, .. } | Condition::NotBefore { anchor, x, .. } => vec![anchor, x],
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Leaf(x) => write!(f, "leaf({x})"),
            Condition::FirstSibling(x) => write!(f, "firstsibling({x})"),
            Condition::LastSibling(x) => write!(f, "lastsibling({x})"),
            Condition::NextSibling(x, y) => write!(f, "nextsibling({x}, {y})"),
            Condition::Contains(x, y, p) => write!(f, "contains({x}, {y}, \"{p}\")"),
            Condition::Before { anchor, x, y, path, tolerance } => {
                write!(f, "before({anchor}, {x}, {y}, \"{path}\", {}, {})", tolerance.alpha, tolerance.beta)
            }
            Condition::NotAfter { anchor, x, path } => write!(f, "notafter({anchor}, {x}, \"{path}\")"),
            Condition::NotBefore { anchor, x, path } => write!(f, "notbefore({anchor}, {x}, \"{path}\")"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Parent {
    Root,
    Pattern(String),
}

/// `p(X) :- p0(X0), subelem(X0, X, "path"), conditions, references.`
/// With an empty path and `X0 = X` this is a specialization rule.
#[derive(Clone, Debug)]
pub struct ElogRule {
    pub head: String,
    pub var: String,
    pub parent: Parent,
    pub parent_var: String,
    pub path: PathPattern,
    pub conditions: Vec<Condition>,
    /// Pattern references `(pattern, variable)`.
    pub refs: Vec<(String, String)>,
    pub line: usize,
}

impl PartialEq for ElogRule {
    fn eq(&self, o: &Self) -> bool {
        (&self.head, &self.var, &self.parent, &self.parent_var, &self.path, &self.conditions, &self.refs)
            == (&o.head, &o.var, &o.parent, &o.parent_var, &o.path, &o.conditions, &o.refs)
    }
}

impl ElogRule {
    pub fn is_specialization(&self) -> bool {
        self.path.is_empty() && self.parent_var == self.var
    }
}

impl fmt::Display for ElogRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- ", self.head, self.var)?;
        match &self.parent {
            Parent::Root => write!(f, "root({})", self.parent_var)?,
            Parent::Pattern(p) => write!(f, "{p}({})", self.parent_var)?,
        }
        if !self.is_specialization() {
            write!(f, ", subelem({}, {}, \"{}\")", self.parent_var, self.var, self.path)?;
        }
        for c in &self.conditions {
            write!(f, ", {c}")?;
        }
        for (p, v) in &self.refs {
            write!(f, ", {p}({v})")?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Minus,
    Delta,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElogProgram {
    pub mode: Mode,
    pub rules: Vec<ElogRule>,
}

impl ElogProgram {
    /// Pattern names in order of first definition.
    pub fn patterns(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rules {
            if !out.contains(&r.head.as_str()) {
                out.push(&r.head);
            }
        }
        out
    }
}

impl fmt::Display for ElogProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Minus => "minus",
            Mode::Delta => "delta",
        };
        writeln!(f, "%mode {mode}")?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

const RESERVED: [&str; 10] = [
    "root",
    "leaf",
    "firstsibling",
    "nextsibling",
    "lastsibling",
    "subelem",
    "contains",
    "before",
    "notafter",
    "notbefore",
];

/// Whether `name` collides with a builtin of either Elog or the tree signature.
pub fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name) || Relation::from_name(name).is_some()
}

/// Shape checks on a parsed program: reserved names, ε in `contains`,
/// Δ atoms outside delta mode, and connectedness of every rule.
pub fn validate_elog(e: &ElogProgram) -> Result<(), ElogError> {
    for r in &e.rules {
        let shape = |m: String| ElogError::Shape { line: r.line, message: m };
        for name in std::iter::once(&r.head).chain(r.refs.iter().map(|(p, _)| p)) {
            if is_reserved(name) {
                return Err(shape(format!("pattern name `{name}` is reserved")));
            }
        }
        if let Parent::Pattern(p) = &r.parent {
            if is_reserved(p) {
                return Err(shape(format!("pattern name `{p}` is reserved")));
            }
        }
        for c in &r.conditions {
            if let Condition::Contains(_, _, p) = c {
                if p.is_empty() {
                    return Err(shape("contains with an empty path".into()));
                }
            }
            if c.is_delta() && e.mode == Mode::Minus {
                return Err(ElogError::DeltaAtom { line: r.line, atom: c.to_string() });
            }
        }
        // Connectedness of the query graph, starting from the head variable.
        let mut edges: Vec<Vec<&str>> = vec![vec![&r.parent_var, &r.var]];
        edges.extend(r.conditions.iter().map(Condition::vars));
        edges.extend(r.refs.iter().map(|(_, v)| vec![v.as_str()]));
        let mut reached = vec![r.var.as_str()];
        loop {
            let before = reached.len();
            for e in &edges {
                if e.iter().any(|v| reached.contains(v)) {
                    for v in e {
                        if !reached.contains(v) {
                            reached.push(v);
                        }
                    }
                }
            }
            if reached.len() == before {
                break;
            }
        }
        if let Some(v) = edges.iter().flatten().find(|v| !reached.contains(v)) {
            return Err(shape(format!("variable {v} is not connected to the head variable {}", r.var)));
        }
    }
    Ok(())
}
