//! Monadic second-order logic over trees: formulas, the encoding of monadic
//! datalog queries as Π₁ formulas, and a brute-force evaluator for tiny
//! trees.
//!
//! Formulas are written as s-expressions:
//!
//! ```text
//! (forall-set P_q
//!   (implies (forall z (implies (root z) (in z P_q))) (in x P_q)))
//! ```

mod encode;
mod eval;
mod sexpr;

pub use encode::encode_program;
pub use eval::{eval_mso, eval_mso_unary, eval_mso_unary_with, eval_mso_with, MsoCaps};
pub use sexpr::parse_mso;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::tree::Relation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MsoError {
    #[error("tree has {nodes} nodes, above the cap of {cap}")]
    NodeCap { nodes: usize, cap: usize },
    #[error("formula has {sets} set quantifiers, above the cap of {cap}")]
    SetCap { sets: usize, cap: usize },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("expected exactly one free node variable, found {0:?}")]
    NotUnary(Vec<String>),
    #[error("unsupported atom `{0}`")]
    Unsupported(String),
    #[error("offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

/// An MSO formula. Node and set variables live in separate namespaces; the
/// binding quantifier decides which one a name belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Rel(Relation, Vec<String>),
    Eq(String, String),
    /// `x ∈ P`.
    In(String, String),
    Not(Box<Formula>),
    /// Empty conjunction is true.
    And(Vec<Formula>),
    /// Empty disjunction is false.
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    ExistsSet(String, Box<Formula>),
    ForallSet(String, Box<Formula>),
}

impl Formula {
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn forall(x: &str, body: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(body))
    }

    pub fn exists(x: &str, body: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(body))
    }

    pub fn forall_set(p: &str, body: Formula) -> Formula {
        Formula::ForallSet(p.into(), Box::new(body))
    }

    pub fn exists_set(p: &str, body: Formula) -> Formula {
        Formula::ExistsSet(p.into(), Box::new(body))
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Rel(..) | Formula::Eq(..) | Formula::In(..) => Vec::new(),
            Formula::Not(a)
            | Formula::Exists(_, a)
            | Formula::Forall(_, a)
            | Formula::ExistsSet(_, a)
            | Formula::ForallSet(_, a) => vec![a],
            Formula::And(v) | Formula::Or(v) => v.iter().collect(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => vec![a, b],
        }
    }

    /// Free node variables, then free set variables.
    pub fn free_vars(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        fn go(f: &Formula, bn: &mut Vec<String>, bs: &mut Vec<String>, out: &mut (BTreeSet<String>, BTreeSet<String>)) {
            let node = |v: &String, bn: &Vec<String>, out: &mut (BTreeSet<String>, BTreeSet<String>)| {
                if !bn.contains(v) {
                    out.0.insert(v.clone());
                }
            };
            match f {
                Formula::Rel(_, args) => args.iter().for_each(|v| node(v, bn, out)),
                Formula::Eq(x, y) => {
                    node(x, bn, out);
                    node(y, bn, out);
                }
                Formula::In(x, p) => {
                    node(x, bn, out);
                    if !bs.contains(p) {
                        out.1.insert(p.clone());
                    }
                }
                Formula::Exists(x, a) | Formula::Forall(x, a) => {
                    bn.push(x.clone());
                    go(a, bn, bs, out);
                    bn.pop();
                }
                Formula::ExistsSet(p, a) | Formula::ForallSet(p, a) => {
                    bs.push(p.clone());
                    go(a, bn, bs, out);
                    bs.pop();
                }
                _ => f.children().into_iter().for_each(|c| go(c, bn, bs, out)),
            }
        }
        let mut out = Default::default();
        go(self, &mut Vec::new(), &mut Vec::new(), &mut out);
        out
    }

    /// Maximum nesting depth of quantifiers.
    pub fn quantifier_rank(&self) -> usize {
        let below = self.children().into_iter().map(Formula::quantifier_rank).max().unwrap_or(0);
        match self {
            Formula::Exists(..) | Formula::Forall(..) | Formula::ExistsSet(..) | Formula::ForallSet(..) => below + 1,
            _ => below,
        }
    }

    pub fn set_quantifiers(&self) -> usize {
        let own = usize::from(matches!(self, Formula::ExistsSet(..) | Formula::ForallSet(..)));
        own + self.children().into_iter().map(Formula::set_quantifiers).sum::<usize>()
    }

    /// Π₁: every set quantifier is universal and sits in the outermost
    /// quantifier prefix.
    pub fn is_pi1(&self) -> bool {
        let mut f = self;
        while let Formula::ForallSet(_, body) = f {
            f = body;
        }
        f.set_quantifiers() == 0
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&sexpr::pretty(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_and_rank() {
        let f = parse_mso("(forall-set P (and (in x P) (exists y (child x y))))").unwrap();
        let (nodes, sets) = f.free_vars();
        assert_eq!(nodes.into_iter().collect::<Vec<_>>(), vec!["x"]);
        assert!(sets.is_empty());
        assert_eq!(f.quantifier_rank(), 2);
        assert!(f.is_pi1());
        assert!(!parse_mso("(exists-set P (in x P))").unwrap().is_pi1());
    }
}
