//! Direct evaluation of Elog programs, including the distance predicates.

use std::collections::{BTreeMap, BTreeSet};

use super::{Condition, ElogError, ElogProgram, ElogRule, Mode, Parent, PathPattern, PathStep};
use crate::eval::evaluate;
use crate::tree::{NodeId, Relation, Tree};

/// Node set of every pattern.
pub type Extents = BTreeMap<String, BTreeSet<NodeId>>;

/// Minus-mode programs are compiled to datalog and run by the linear
/// evaluator; delta-mode programs are evaluated directly.
pub fn eval_elog(e: &ElogProgram, t: &Tree) -> Result<Extents, ElogError> {
    match e.mode {
        Mode::Delta => Ok(eval_elog_direct(e, t)),
        Mode::Minus => {
            let p = super::elog_to_datalog(e)?;
            let r = evaluate(&p, t)?;
            Ok(e.patterns().into_iter().map(|n| (n.to_string(), r.set_of(n))).collect())
        }
    }
}

/// Nodes reached from `from` along `path`.
fn reach(t: &Tree, from: NodeId, path: &PathPattern) -> Vec<NodeId> {
    let mut cur = vec![from];
    for step in &path.steps {
        let mut next = Vec::new();
        for n in cur {
            next.extend(t.children(n).filter(|c| match step {
                PathStep::Any => true,
                PathStep::Label(l) => t.label(*c) == l,
            }));
        }
        cur = next;
    }
    cur
}

enum Lit<'a> {
    Root(usize),
    Pattern(&'a str, usize),
    Path(usize, usize, &'a PathPattern),
    Cond(&'a Condition, Vec<usize>),
}

impl Lit<'_> {
    fn vars(&self) -> Vec<usize> {
        match self {
            Lit::Root(v) | Lit::Pattern(_, v) => vec![*v],
            Lit::Path(a, b, _) => vec![*a, *b],
            Lit::Cond(_, vs) => vs.clone(),
        }
    }
}

struct Solver<'a> {
    t: &'a Tree,
    ext: &'a Extents,
    lits: Vec<Lit<'a>>,
    head: usize,
    env: Vec<Option<NodeId>>,
    found: BTreeSet<NodeId>,
}

impl Solver<'_> {
    fn candidates(&self, lit: &Lit, v: usize) -> Vec<NodeId> {
        let t = self.t;
        let bound = |i: usize| self.env[i];
        match lit {
            Lit::Root(_) => vec![t.root()],
            Lit::Pattern(p, _) => self.ext.get(*p).map(|s| s.iter().copied().collect()).unwrap_or_default(),
            Lit::Path(a, b, path) if *b == v => match bound(*a) {
                Some(x) => reach(t, x, path),
                None => t.nodes().collect(),
            },
            Lit::Cond(Condition::Contains(..), vs) if vs[1] == v => match bound(vs[0]) {
                Some(x) => {
                    let Lit::Cond(Condition::Contains(_, _, path), _) = lit else { unreachable!() };
                    reach(t, x, path)
                }
                None => t.nodes().collect(),
            },
            Lit::Cond(Condition::NextSibling(..), vs) => {
                if vs[1] == v {
                    if let Some(x) = bound(vs[0]) {
                        return t.next_sibling(x).into_iter().collect();
                    }
                } else if let Some(y) = bound(vs[1]) {
                    return t.prev_sibling(y).into_iter().collect();
                }
                t.nodes().collect()
            }
            Lit::Cond(Condition::Before { .. }, vs) if v != vs[0] => match bound(vs[0]) {
                Some(a) => t.children(a).collect(),
                None => t.nodes().collect(),
            },
            _ => t.nodes().collect(),
        }
    }

    fn test(&self, lit: &Lit) -> bool {
        let t = self.t;
        let n = |i: usize| self.env[i].expect("bound");
        match lit {
            Lit::Root(v) => n(*v) == t.root(),
            Lit::Pattern(p, v) => self.ext.get(*p).is_some_and(|s| s.contains(&n(*v))),
            Lit::Path(a, b, path) => reach(t, n(*a), path).contains(&n(*b)),
            Lit::Cond(c, vs) => match c {
                Condition::Leaf(_) => t.holds_unary(&Relation::Leaf, n(vs[0])),
                Condition::FirstSibling(_) => t.holds_unary(&Relation::FirstSibling, n(vs[0])),
                Condition::LastSibling(_) => t.holds_unary(&Relation::LastSibling, n(vs[0])),
                Condition::NextSibling(..) => t.next_sibling(n(vs[0])) == Some(n(vs[1])),
                Condition::Contains(_, _, path) => reach(t, n(vs[0]), path).contains(&n(vs[1])),
                Condition::Before { path, tolerance, .. } => {
                    let (a, x, y) = (n(vs[0]), n(vs[1]), n(vs[2]));
                    if t.parent(x) != Some(a) || t.parent(y) != Some(a) || !reach(t, a, path).contains(&y) {
                        return false;
                    }
                    let (px, py) = (t.position(x).unwrap_or(0) as i64, t.position(y).unwrap_or(0) as i64);
                    tolerance.admits(t.child_count(a), py - px)
                }
                Condition::NotAfter { path, .. } => {
                    let x = n(vs[1]);
                    reach(t, n(vs[0]), path).into_iter().all(|z| z.0 >= x.0)
                }
                Condition::NotBefore { path, .. } => {
                    let x = n(vs[1]);
                    reach(t, n(vs[0]), path).into_iter().all(|z| z.0 <= x.0)
                }
            },
        }
    }

    fn solve(&mut self, i: usize) {
        if i == self.lits.len() {
            let h = self.env[self.head].expect("head variable bound");
            self.found.insert(h);
            return;
        }
        let lit = &self.lits[i];
        let Some(v) = lit.vars().into_iter().find(|v| self.env[*v].is_none()) else {
            if self.test(&self.lits[i]) {
                self.solve(i + 1);
            }
            return;
        };
        for c in self.candidates(lit, v) {
            self.env[v] = Some(c);
            self.solve(i);
        }
        self.env[v] = None;
    }
}

fn lits(r: &ElogRule) -> (Vec<Lit<'_>>, usize, usize) {
    let mut names: Vec<String> = Vec::new();
    let mut id = |v: &str| -> usize {
        // The empty link identifies the head variable with the parent variable.
        let v = if r.path.is_empty() && v == r.var { r.parent_var.as_str() } else { v };
        match names.iter().position(|n| *n == v) {
            Some(i) => i,
            None => {
                names.push(v.to_string());
                names.len() - 1
            }
        }
    };
    let pv = id(&r.parent_var);
    let head = id(&r.var);
    let mut out = vec![match &r.parent {
        Parent::Root => Lit::Root(pv),
        Parent::Pattern(p) => Lit::Pattern(p, pv),
    }];
    if !r.path.is_empty() {
        out.push(Lit::Path(pv, head, &r.path));
    }
    for c in &r.conditions {
        let vs = c.vars().into_iter().map(&mut id).collect();
        out.push(Lit::Cond(c, vs));
    }
    for (p, v) in &r.refs {
        out.push(Lit::Pattern(p, id(v)));
    }
    let n = names.len();
    (out, head, n)
}

/// Naive fixpoint over the rules, with the distance predicates as builtin
/// tests. Works in either mode.
pub fn eval_elog_direct(e: &ElogProgram, t: &Tree) -> Extents {
    let mut ext: Extents = e.patterns().into_iter().map(|p| (p.to_string(), BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for r in &e.rules {
            let (lits, head, nvars) = lits(r);
            let mut s = Solver { t, ext: &ext, lits, head, env: vec![None; nvars], found: BTreeSet::new() };
            s.solve(0);
            let found = s.found;
            let set = ext.get_mut(&r.head).expect("pattern");
            for n in found {
                changed |= set.insert(n);
            }
        }
        if !changed {
            return ext;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elog::parse_elog;
    use crate::tree::parse_term_tree;

    const ANBN: &str = include_str!("../../tests/data/anbn.elog");

    fn flat(word: &str) -> Tree {
        let kids: Vec<String> = word.chars().map(|c| c.to_string()).collect();
        if kids.is_empty() {
            parse_term_tree("r").unwrap()
        } else {
            parse_term_tree(&format!("r({})", kids.join(","))).unwrap()
        }
    }

    #[test]
    fn anbn_selects_balanced_words() {
        let e = parse_elog(ANBN).unwrap();
        assert_eq!(e.mode, Mode::Delta);
        let sel = |w: &str| eval_elog(&e, &flat(w)).unwrap()["anbn"].contains(&NodeId::ROOT);
        assert!(sel("aaabbb"));
        assert!(sel("ab"));
        assert!(!sel("aabbb"));
        assert!(!sel("abab"));
        assert!(!sel(""));
        assert!(!sel("ba"));
    }

    #[test]
    fn anbn_markers() {
        let e = parse_elog(ANBN).unwrap();
        let x = eval_elog(&e, &flat("aabba")).unwrap();
        assert_eq!(x["a0"], BTreeSet::from([NodeId(1)]));
        assert!(x["b0"].is_empty());
    }

    #[test]
    fn compiled_and_direct_agree() {
        let e = parse_elog(
            "row(X) :- root(X0), subelem(X0, X, \"t._\").\n\
             first(X) :- row(X), firstsibling(X).\n\
             next(X) :- row(X), nextsibling(X0, X), first(X0).\n\
             holder(X) :- row(X), contains(X, Y, \"c\"), leaf(Y).\n\
             last(X) :- row(X), lastsibling(X).",
        )
        .unwrap();
        for t in ["t(a(c),b(c(d)),a)", "r(t(a,a,a(c)))", "t(x(y))", "t"] {
            let t = parse_term_tree(t).unwrap();
            assert_eq!(eval_elog(&e, &t).unwrap(), eval_elog_direct(&e, &t), "{t:?}");
        }
    }

    #[test]
    fn empty_program() {
        let e = parse_elog("").unwrap();
        assert!(eval_elog(&e, &flat("ab")).unwrap().is_empty());
    }
}
