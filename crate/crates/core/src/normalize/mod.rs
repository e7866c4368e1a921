//! Rewriting monadic datalog into TMNF, the three-form normal form:
//! `p(x) :- p0(x)`, `p(x) :- p0(x0), R(x0,x)` (or `R(x,x0)`) and
//! `p(x) :- p0(x), p1(x)`.
//!
//! [`to_tmnf`] chains four passes: an acyclicity pass that chases the
//! functional dependencies of the tree relations, linking of disconnected
//! rule components through the total relation, decomposition into short
//! rules, and compilation of caterpillar atoms through ε-automata.

mod acyclic;
mod cat;
mod decompose;

pub use acyclic::{depth_index, expand_unranked_sugar, make_acyclic_ranked, make_acyclic_unranked, DepthIndexMap};
pub use cat::{
    caterpillar_relation, caterpillar_relation_capped, caterpillar_to_tmnf, eval_caterpillar, invert, nfa_to_rules,
    Axis, BitRel, CapExceeded, CatExpr, EpsNfa, Sym, CATERPILLAR_CAP,
};
pub use decompose::{connect_with_doc_order, decompose, dom_rules};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::datalog::{check, DatalogError, FreshNames, Pred, Program, Rule};
use crate::tree::Relation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warning: {}", self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error(transparent)]
    Invalid(#[from] DatalogError),
    #[error("rule is cyclic after the acyclicity pass: {0}")]
    Cyclic(String),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signature {
    /// Ranked when the program navigates with `child_k` only.
    Auto,
    Ranked,
    Unranked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Acyclic,
    Connect,
    Decompose,
    Full,
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "acyclic" => Ok(Stage::Acyclic),
            "connect" => Ok(Stage::Connect),
            "decompose" => Ok(Stage::Decompose),
            "full" => Ok(Stage::Full),
            _ => Err(format!("unknown stage `{s}` (acyclic|connect|decompose|full)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormalizeOptions {
    pub signature: Signature,
    /// Largest child index of the trees the output will run on, for ranked
    /// programs. Defaults to the largest `child_k` in the program.
    pub max_rank: Option<u32>,
    pub stop_after: Stage,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { signature: Signature::Auto, max_rank: None, stop_after: Stage::Full }
    }
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub program: Program,
    pub warnings: Vec<Warning>,
}

fn is_ranked(p: &Program, sig: Signature) -> bool {
    match sig {
        Signature::Ranked => true,
        Signature::Unranked => false,
        Signature::Auto => {
            p.uses_relation(|r| matches!(r, Relation::ChildK(_)))
                && !p.uses_relation(|r| {
                    matches!(r, Relation::FirstChild | Relation::NextSibling | Relation::Child | Relation::LastChild)
                })
                && !p.has_cat_atoms()
        }
    }
}

/// Rewrites `p` into an equivalent TMNF program (or stops after an
/// intermediate stage).
pub fn to_tmnf(p: &Program, opts: &NormalizeOptions) -> Result<Normalized, NormalizeError> {
    check(p)?;
    if let Some(r) = p.rules.iter().find(|r| matches!(r.head.pred, Pred::Prop(_)) || r.body.is_empty()) {
        return Err(NormalizeError::Unsupported(format!("propositional rule `{r}` cannot be normalized")));
    }
    let ranked = is_ranked(p, opts.signature);
    let (acyclic, warnings) = if ranked { make_acyclic_ranked(p) } else { make_acyclic_unranked(p) };
    if opts.stop_after == Stage::Acyclic {
        return Ok(Normalized { program: acyclic, warnings });
    }
    let k = p.max_child_k().max(opts.max_rank.unwrap_or(0));
    let total = if ranked { CatExpr::total_ranked(k) } else { CatExpr::total_unranked() };
    let connected = connect_with_doc_order(&acyclic, &total);
    if opts.stop_after == Stage::Connect {
        return Ok(Normalized { program: connected, warnings });
    }
    let mut fresh = FreshNames::for_program(&connected);
    let dom = fresh.fresh("dom");
    let mut decomposed = decompose(&connected, &dom, &mut fresh)?;
    let uses_dom = decomposed.rules.iter().flat_map(|r| &r.body).any(|a| a.pred == Pred::idb(&dom));
    if uses_dom {
        let axes: Vec<Relation> =
            if ranked { (1..=k).map(Relation::ChildK).collect() } else { vec![Relation::FirstChild, Relation::NextSibling] };
        decomposed.rules.extend(dom_rules(&dom, &axes));
    }
    if opts.stop_after == Stage::Decompose {
        return Ok(Normalized { program: decomposed, warnings });
    }
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    for r in decomposed.rules {
        out.rules.extend(eliminate_cat(r, &mut fresh));
    }
    Ok(Normalized { program: out, warnings })
}

/// Replaces a form-(2) rule over a caterpillar atom by its automaton rules.
fn eliminate_cat(r: Rule, fresh: &mut FreshNames) -> Vec<Rule> {
    let Some(ci) = r.body.iter().position(|a| matches!(a.pred, Pred::Cat(_))) else {
        return vec![r];
    };
    let Pred::Cat(e) = &r.body[ci].pred else { unreachable!() };
    let x = &r.head.args[0];
    let other = &r.body[1 - ci];
    let cat_args = &r.body[ci].args;
    let e = if &cat_args[1] == x { e.clone() } else { e.clone().inv() };
    let target = r.head.pred.name().expect("intensional head").to_string();
    cat::caterpillar_rules(&other.pred, &e, &target, fresh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{is_tmnf, parse_program};

    #[test]
    fn tmnf_output_shapes() {
        let p = parse_program(
            "p(X) :- child(X,Y), child(Z,Y), label_a(Z), lastchild(X,W).\n\
             q(X) :- p(X), leaf(Y).\n\
             r(Y) :- child_2(X,Y), q(X).",
        )
        .unwrap();
        let out = to_tmnf(&p, &NormalizeOptions::default()).unwrap();
        assert!(is_tmnf(&out.program).is_ok(), "{}", out.program);
        assert!(!out.program.has_cat_atoms());
        assert!(!out.program.uses_relation(|r| matches!(r, Relation::Child | Relation::LastChild | Relation::ChildK(_))));
    }

    #[test]
    fn ranked_stays_ranked() {
        let p = parse_program("p(X) :- child_1(X,Y), child_2(X,Z), leaf(Y), q(Z).\nq(X) :- leaf(X), r(Y).\nr(X) :- root(X).")
            .unwrap();
        let out = to_tmnf(&p, &NormalizeOptions::default()).unwrap();
        assert!(is_tmnf(&out.program).is_ok());
        assert!(!out.program.uses_relation(|r| matches!(r, Relation::FirstChild | Relation::NextSibling)));
    }

    #[test]
    fn stages() {
        let p = parse_program("p(X) :- child(X,Y), q(Z).").unwrap();
        let a = to_tmnf(&p, &NormalizeOptions { stop_after: Stage::Acyclic, ..Default::default() }).unwrap();
        assert!(a.program.has_cat_atoms());
        let c = to_tmnf(&p, &NormalizeOptions { stop_after: Stage::Connect, ..Default::default() }).unwrap();
        assert!(c.program.rules.iter().all(crate::datalog::is_connected));
        let d = to_tmnf(&p, &NormalizeOptions { stop_after: Stage::Decompose, ..Default::default() }).unwrap();
        assert!(d.program.rules.iter().all(|r| r.body.len() <= 2));
    }

    #[test]
    fn rejects_invalid() {
        let p = parse_program("p(X) :- root(Y).").unwrap();
        assert!(matches!(to_tmnf(&p, &NormalizeOptions::default()), Err(NormalizeError::Invalid(_))));
    }
}
