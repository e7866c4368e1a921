use std::collections::BTreeMap;

use super::{Pred, Program, Rule};
use crate::tree::Relation;

/// The query multigraph of a rule: one vertex per variable and one edge per
/// binary body atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGraph {
    pub vars: Vec<String>,
    /// `(from, to, atom index in the body)`
    pub edges: Vec<(usize, usize, usize)>,
}

pub fn query_graph(r: &Rule) -> QueryGraph {
    let vars: Vec<String> = r.vars().into_iter().map(String::from).collect();
    let index: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let edges = r
        .body
        .iter()
        .enumerate()
        .filter(|(_, a)| a.args.len() == 2)
        .map(|(i, a)| (index[a.args[0].as_str()], index[a.args[1].as_str()], i))
        .collect();
    QueryGraph { vars, edges }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let n = self.0[c];
            self.0[c] = r;
            c = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.0[a] = b;
        true
    }
}

/// Acyclicity of the undirected query multigraph. Two atoms over the same
/// pair of variables form a cycle, as does a self-loop.
pub fn is_acyclic(r: &Rule) -> bool {
    let g = query_graph(r);
    let mut d = Dsu::new(g.vars.len());
    g.edges.iter().all(|&(a, b, _)| d.union(a, b))
}

/// Connected components of the query graph, as variable indices of
/// [`query_graph`]'s `vars`.
pub fn components(r: &Rule) -> (QueryGraph, Vec<usize>) {
    let g = query_graph(r);
    let mut d = Dsu::new(g.vars.len());
    for &(a, b, _) in &g.edges {
        d.union(a, b);
    }
    let comp = (0..g.vars.len()).map(|i| d.find(i)).collect();
    (g, comp)
}

pub fn is_connected(r: &Rule) -> bool {
    let (_, comp) = components(r);
    comp.windows(2).all(|w| w[0] == w[1])
}

/// The first rule that is not in one of the three TMNF forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmnfViolation {
    pub index: usize,
    pub rule: Rule,
}

fn is_unary_pred(p: &Pred) -> bool {
    matches!(p, Pred::Idb(_)) || p.is_unary_builtin()
}

fn is_tmnf_axis(p: &Pred) -> bool {
    matches!(
        p,
        Pred::Builtin(Relation::FirstChild | Relation::NextSibling | Relation::ChildK(_))
    )
}

/// Whether a single rule has one of the forms
/// (1) `p(x) :- p0(x)`, (2) `p(x) :- p0(x0), R(x0,x)` (or `R(x,x0)`),
/// (3) `p(x) :- p0(x), p1(x)`.
pub fn is_tmnf_rule(r: &Rule) -> bool {
    if !matches!(r.head.pred, Pred::Idb(_)) || r.head.args.len() != 1 {
        return false;
    }
    let x = &r.head.args[0];
    let unary_on = |a: &super::Atom, v: &str| is_unary_pred(&a.pred) && a.args.len() == 1 && a.args[0] == v;
    match r.body.as_slice() {
        [a] => unary_on(a, x),
        [a, b] => {
            if unary_on(a, x) && unary_on(b, x) {
                return true;
            }
            let (u, e) = if a.args.len() == 2 { (b, a) } else { (a, b) };
            if !is_tmnf_axis(&e.pred) || e.args.len() != 2 || u.args.len() != 1 || !is_unary_pred(&u.pred) {
                return false;
            }
            let x0 = &u.args[0];
            x0 != x && ((&e.args[0] == x0 && &e.args[1] == x) || (&e.args[0] == x && &e.args[1] == x0))
        }
        _ => false,
    }
}

pub fn is_tmnf(p: &Program) -> Result<(), TmnfViolation> {
    match p.rules.iter().position(|r| !is_tmnf_rule(r)) {
        None => Ok(()),
        Some(index) => Err(TmnfViolation { index, rule: p.rules[index].clone() }),
    }
}
