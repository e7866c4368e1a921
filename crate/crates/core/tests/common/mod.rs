//! Oracles shared by the integration tests. They use only the basic
//! navigation of `Tree` (parent, children, labels) and never the crate's
//! evaluators or relation tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use treelog::datalog::{Atom, Pred, Program, Rule};
use treelog::tree::{NodeId, Relation, Tree};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

/// Plain arrays describing a tree, rebuilt from parent pointers.
pub struct Nav {
    pub n: usize,
    pub label: Vec<String>,
    pub parent: Vec<Option<usize>>,
    pub kids: Vec<Vec<usize>>,
}

impl Nav {
    pub fn new(t: &Tree) -> Nav {
        let n = t.len();
        let label = (0..n).map(|i| t.label(NodeId(i)).as_str().to_string()).collect();
        let parent: Vec<Option<usize>> = (0..n).map(|i| t.parent(NodeId(i)).map(|p| p.0)).collect();
        let mut kids = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                kids[*p].push(i);
            }
        }
        Nav { n, label, parent, kids }
    }

    fn index_in_parent(&self, x: usize) -> Option<usize> {
        let p = self.parent[x]?;
        self.kids[p].iter().position(|&c| c == x)
    }

    pub fn unary(&self, r: &Relation, x: usize) -> bool {
        match r {
            Relation::Root => self.parent[x].is_none(),
            Relation::Leaf => self.kids[x].is_empty(),
            Relation::FirstSibling => self.index_in_parent(x) == Some(0),
            Relation::LastSibling => match self.parent[x] {
                Some(p) => self.kids[p].last() == Some(&x),
                None => false,
            },
            Relation::Label(l) => self.label[x] == l.as_str(),
            Relation::NotLabel(l) => self.label[x] != l.as_str(),
            _ => panic!("not unary: {r:?}"),
        }
    }

    pub fn binary(&self, r: &Relation, x: usize, y: usize) -> bool {
        match r {
            Relation::FirstChild => self.kids[x].first() == Some(&y),
            Relation::LastChild => self.kids[x].last() == Some(&y),
            Relation::Child => self.parent[y] == Some(x),
            Relation::NextSibling => {
                self.parent[x].is_some() && self.parent[x] == self.parent[y] && self.index_in_parent(y) == self.index_in_parent(x).map(|i| i + 1)
            }
            Relation::ChildK(k) => self.kids[x].get(*k as usize - 1) == Some(&y),
            _ => panic!("not binary: {r:?}"),
        }
    }
}

type Model = BTreeMap<String, BTreeSet<usize>>;

fn atom_true(nav: &Nav, m: &Model, a: &Atom, env: &BTreeMap<&str, usize>) -> Option<bool> {
    let vals: Option<Vec<usize>> = a.args.iter().map(|v| env.get(v.as_str()).copied()).collect();
    let vals = vals?;
    Some(match &a.pred {
        Pred::Builtin(r) if vals.len() == 1 => nav.unary(r, vals[0]),
        Pred::Builtin(r) => nav.binary(r, vals[0], vals[1]),
        Pred::Idb(p) => m.get(p).is_some_and(|s| s.contains(&vals[0])),
        other => panic!("oracle does not handle {other:?}"),
    })
}

fn solve<'a>(nav: &Nav, m: &Model, body: &'a [Atom], vars: &[&'a str], env: &mut BTreeMap<&'a str, usize>, out: &mut dyn FnMut(&BTreeMap<&'a str, usize>)) {
    // Prune on every atom whose variables are all bound.
    for a in body {
        if atom_true(nav, m, a, env) == Some(false) {
            return;
        }
    }
    let Some(v) = vars.iter().find(|v| !env.contains_key(**v)) else {
        out(env);
        return;
    };
    for x in 0..nav.n {
        env.insert(v, x);
        solve(nav, m, body, vars, env, out);
        env.remove(v);
    }
}

/// Variables of a rule, each one joined to an earlier one by a binary atom
/// where possible, so that partial assignments are pruned early.
fn var_order(r: &Rule) -> Vec<&str> {
    let mut all: Vec<&str> = Vec::new();
    for a in std::iter::once(&r.head).chain(&r.body) {
        for v in &a.args {
            if !all.contains(&v.as_str()) {
                all.push(v);
            }
        }
    }
    let mut order: Vec<&str> = Vec::new();
    while order.len() < all.len() {
        let linked = all.iter().copied().find(|v| {
            !order.contains(v)
                && r.body.iter().any(|a| a.args.len() == 2 && a.args.iter().any(|x| x == v) && a.args.iter().any(|x| order.contains(&x.as_str())))
        });
        let next = linked.unwrap_or_else(|| *all.iter().find(|v| !order.contains(v)).unwrap());
        order.push(next);
    }
    order
}

/// Least model of `p` on `t` by naive iteration over all assignments.
pub fn oracle_eval(p: &Program, t: &Tree) -> Model {
    let nav = Nav::new(t);
    let mut m: Model = BTreeMap::new();
    for r in &p.rules {
        if let Pred::Idb(h) = &r.head.pred {
            m.entry(h.clone()).or_default();
        }
        for a in &r.body {
            if let Pred::Idb(h) = &a.pred {
                m.entry(h.clone()).or_default();
            }
        }
    }
    loop {
        let mut new: Vec<(String, usize)> = Vec::new();
        for r in &p.rules {
            let Pred::Idb(h) = &r.head.pred else { panic!("oracle handles monadic heads only") };
            let vars = var_order(r);
            let hv = r.head.args[0].as_str();
            let mut env = BTreeMap::new();
            solve(&nav, &m, &r.body, &vars, &mut env, &mut |e| new.push((h.clone(), e[hv])));
        }
        let mut changed = false;
        for (h, x) in new {
            changed |= m.get_mut(&h).unwrap().insert(x);
        }
        if !changed {
            return m;
        }
    }
}

/// Structural checks: preorder ids, the functional dependencies of the
/// navigation relations, and consistency of the stored links.
pub fn check_tree(t: &Tree) -> Result<(), String> {
    let nav = Nav::new(t);
    let n = nav.n;
    if n == 0 || nav.parent[0].is_some() {
        return Err("node 0 must be the root".into());
    }
    if (1..n).any(|i| nav.parent[i].is_none()) {
        return Err("more than one root".into());
    }
    // Preorder: each node's id is one more than the last id in the subtree
    // of its previous sibling, or its parent's id for a first child.
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    while let Some(x) = stack.pop() {
        order.push(x);
        stack.extend(nav.kids[x].iter().rev());
    }
    if order != (0..n).collect::<Vec<_>>() {
        return Err("ids are not in document order".into());
    }
    for x in 0..n {
        let id = NodeId(x);
        let fc = t.first_child(id).map(|c| c.0);
        let lc = t.last_child(id).map(|c| c.0);
        if fc != nav.kids[x].first().copied() || lc != nav.kids[x].last().copied() {
            return Err(format!("first/last child of {x}"));
        }
        let i = nav.index_in_parent(x);
        let ns = t.next_sibling(id).map(|c| c.0);
        let ps = t.prev_sibling(id).map(|c| c.0);
        let want_ns = nav.parent[x].and_then(|p| nav.kids[p].get(i.unwrap() + 1).copied());
        let want_ps = nav.parent[x].and_then(|p| i.unwrap().checked_sub(1).map(|j| nav.kids[p][j]));
        if ns != want_ns || ps != want_ps {
            return Err(format!("siblings of {x}"));
        }
        if t.position(id) != i.map(|i| i + 1) {
            return Err(format!("position of {x}"));
        }
        // Functional dependencies: firstchild, nextsibling and child_k are
        // functions in both directions.
        for r in [Relation::FirstChild, Relation::NextSibling, Relation::LastChild] {
            let fwd = (0..n).filter(|&y| t.holds_binary(&r, id, NodeId(y))).count();
            let bwd = (0..n).filter(|&y| t.holds_binary(&r, NodeId(y), id)).count();
            if fwd > 1 || bwd > 1 {
                return Err(format!("{r} is not functional at {x}"));
            }
        }
        for k in 1..=nav.kids[x].len() as u32 {
            let fwd = (0..n).filter(|&y| t.holds_binary(&Relation::ChildK(k), id, NodeId(y))).count();
            if fwd != 1 {
                return Err(format!("child_{k} at {x}"));
            }
        }
        let ks = (1..=n as u32).filter(|&k| (0..n).any(|p| t.holds_binary(&Relation::ChildK(k), NodeId(p), id))).count();
        if ks != usize::from(x != 0) {
            return Err(format!("{x} is a k-th child for {ks} values of k"));
        }
        for r in [Relation::Root, Relation::Leaf, Relation::FirstSibling, Relation::LastSibling] {
            if t.holds_unary(&r, id) != nav.unary(&r, x) {
                return Err(format!("{r} at {x}"));
            }
        }
    }
    Ok(())
}
