//! Rewriting rules into acyclic ones by chasing the functional dependencies
//! of the tree relations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{CatExpr, Warning};
use crate::datalog::{is_acyclic, Atom, FreshNames, Pred, Program, Rule};
use crate::tree::Relation;

/// `d(v) + 1 = d(w)` for every edge `(v, w)`.
pub type DepthIndexMap = BTreeMap<usize, i64>;

/// A depth-index map of the digraph on `0..n`, or `None` when two paths
/// between the same nodes differ in length (in particular on a cycle).
pub fn depth_index(n: usize, edges: &[(usize, usize)]) -> Option<DepthIndexMap> {
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for &(v, w) in edges {
        adj[v].push((w, 1));
        adj[w].push((v, -1));
    }
    let mut d: Vec<Option<i64>> = vec![None; n];
    for s in 0..n {
        if d[s].is_some() {
            continue;
        }
        d[s] = Some(0);
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            let dv = d[v].expect("visited");
            for &(w, delta) in &adj[v] {
                match d[w] {
                    None => {
                        d[w] = Some(dv + delta);
                        stack.push(w);
                    }
                    Some(dw) if dw != dv + delta => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(d.into_iter().enumerate().map(|(i, x)| (i, x.expect("all visited"))).collect())
}

/// Union-find whose classes carry an integer offset relative to their root.
#[derive(Clone, Debug)]
struct OffsetUf {
    parent: Vec<usize>,
    off: Vec<i64>,
}

impl OffsetUf {
    fn new(n: usize) -> Self {
        OffsetUf { parent: (0..n).collect(), off: vec![0; n] }
    }

    /// `(root, offset of x relative to root)`
    fn find(&mut self, x: usize) -> (usize, i64) {
        let p = self.parent[x];
        if p == x {
            return (x, 0);
        }
        let (r, o) = self.find(p);
        self.parent[x] = r;
        self.off[x] += o;
        (r, self.off[x])
    }

    /// Records `pos(b) = pos(a) + delta`. Returns `Err` on contradiction and
    /// `Ok(true)` when two classes were joined.
    fn union(&mut self, a: usize, b: usize, delta: i64) -> Result<bool, ()> {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            return if ob - oa == delta { Ok(false) } else { Err(()) };
        }
        // pos(rb) = pos(b) - ob = pos(a) + delta - ob = pos(ra) + oa + delta - ob
        self.parent[rb] = ra;
        self.off[rb] = oa + delta - ob;
        Ok(true)
    }
}

/// Plain union-find that keeps the smallest element as root.
#[derive(Clone, Debug)]
struct Uf(Vec<usize>);

impl Uf {
    fn new(n: usize) -> Self {
        Uf((0..n).collect())
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
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.0[hi] = lo;
        true
    }
}

/// Rule variables sorted by name, so that class roots are the
/// lexicographically smallest original names.
struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    fn new(r: &Rule) -> Self {
        let mut names: Vec<String> = r.vars().into_iter().map(String::from).collect();
        names.sort();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        VarTable { names, index }
    }
    fn id(&self, v: &str) -> usize {
        self.index[v]
    }
}

fn substitute(r: &Rule, vt: &VarTable, eq: &mut Uf) -> Rule {
    let mut sub = |v: &String| vt.names[eq.find(vt.id(v))].clone();
    let map_atom = |a: &Atom, sub: &mut dyn FnMut(&String) -> String| Atom {
        pred: a.pred.clone(),
        args: a.args.iter().map(&mut *sub).collect(),
    };
    let head = map_atom(&r.head, &mut sub);
    let body = r.body.iter().map(|a| map_atom(a, &mut sub)).collect();
    let mut out = Rule { head, body, pos: r.pos };
    out.dedup_body();
    out
}

fn rule_label(r: &Rule) -> String {
    match r.pos {
        Some(p) => format!("rule at {p} (`{}`)", r),
        None => format!("rule `{r}`"),
    }
}

/// Chase for programs over `child_k`: two atoms `child_k(x,y)`, `child_k(x,z)`
/// identify `y` and `z`, and every node has a single parent. Rules whose
/// child graph has a cycle, or that make one node both a j-th and a k-th
/// child, are dropped with a warning.
pub fn make_acyclic_ranked(p: &Program) -> (Program, Vec<Warning>) {
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    let mut warnings = Vec::new();
    for r in &p.rules {
        match chase_ranked(r) {
            Ok(r2) => out.rules.push(r2),
            Err(check) => warnings.push(Warning {
                message: format!("dropping unsatisfiable {}: {check}", rule_label(r)),
            }),
        }
    }
    (out, warnings)
}

fn chase_ranked(r: &Rule) -> Result<Rule, String> {
    let vt = VarTable::new(r);
    let n = vt.names.len();
    let edges: Vec<(usize, usize, u32)> = r
        .body
        .iter()
        .filter_map(|a| match a.pred {
            Pred::Builtin(Relation::ChildK(k)) if a.args.len() == 2 => Some((vt.id(&a.args[0]), vt.id(&a.args[1]), k)),
            _ => None,
        })
        .collect();
    let plain: Vec<(usize, usize)> = edges.iter().map(|&(x, y, _)| (x, y)).collect();
    if depth_index(n, &plain).is_none() {
        return Err("child graph admits no depth-index map".into());
    }
    let mut eq = Uf::new(n);
    loop {
        let mut changed = false;
        let mut parent_of: HashMap<usize, (usize, u32)> = HashMap::new();
        let mut kth: HashMap<(usize, u32), usize> = HashMap::new();
        for &(x, y, k) in &edges {
            let (x, y) = (eq.find(x), eq.find(y));
            match parent_of.get(&y).copied() {
                Some((px, pk)) => {
                    if eq.find(px) != x {
                        changed |= eq.union(px, x);
                    } else if pk != k {
                        return Err(format!("a node cannot be both child_{pk} and child_{k} of its parent"));
                    }
                }
                None => {
                    parent_of.insert(y, (x, k));
                }
            }
            match kth.get(&(x, k)).copied() {
                Some(z) if eq.find(z) != y => changed |= eq.union(z, y),
                Some(_) => {}
                None => {
                    kth.insert((x, k), y);
                }
            }
        }
        if !changed {
            break;
        }
    }
    // After merging, parent chains must still be acyclic.
    let mut parent: HashMap<usize, usize> = HashMap::new();
    for &(x, y, _) in &edges {
        parent.insert(eq.find(y), eq.find(x));
    }
    if has_parent_cycle(&parent) {
        return Err("merged child graph has a cycle".into());
    }
    let out = substitute(r, &vt, &mut eq);
    if !is_acyclic(&out) {
        return Err("query graph is still cyclic after merging".into());
    }
    Ok(out)
}

fn has_parent_cycle(parent: &HashMap<usize, usize>) -> bool {
    let mut state: HashMap<usize, u8> = HashMap::new();
    for &start in parent.keys() {
        let mut path = Vec::new();
        let mut v = start;
        loop {
            match state.get(&v) {
                Some(2) => break,
                Some(1) => return true,
                _ => {}
            }
            state.insert(v, 1);
            path.push(v);
            match parent.get(&v) {
                Some(&p) => v = p,
                None => break,
            }
        }
        for v in path {
            state.insert(v, 2);
        }
    }
    false
}

/// Rewrites `lastchild(x,y)` into `child(x,y), lastsibling(y)` and
/// `child_k(x,y)` into `firstchild` followed by `k-1` `nextsibling` steps.
pub fn expand_unranked_sugar(p: &Program, fresh: &mut FreshNames) -> Program {
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    for r in &p.rules {
        let mut body = Vec::new();
        for a in &r.body {
            match &a.pred {
                Pred::Builtin(Relation::LastChild) if a.args.len() == 2 => {
                    body.push(Atom::rel(Relation::Child, &[&a.args[0], &a.args[1]]));
                    body.push(Atom::rel(Relation::LastSibling, &[&a.args[1]]));
                }
                Pred::Builtin(Relation::ChildK(k)) if a.args.len() == 2 => {
                    let mut prev = fresh.fresh("v");
                    body.push(Atom::rel(Relation::FirstChild, &[&a.args[0], &prev]));
                    for i in 1..*k {
                        let next = if i + 1 == *k { a.args[1].clone() } else { fresh.fresh("v") };
                        body.push(Atom::rel(Relation::NextSibling, &[&prev, &next]));
                        prev = next;
                    }
                    if *k == 1 {
                        // Only one step: retarget it.
                        body.pop();
                        body.push(Atom::rel(Relation::FirstChild, &[&a.args[0], &a.args[1]]));
                    }
                }
                _ => body.push(a.clone()),
            }
        }
        let mut r2 = Rule { head: r.head.clone(), body, pos: r.pos };
        r2.dedup_body();
        out.rules.push(r2);
    }
    out
}

/// Acyclicity pass for programs over `firstchild`, `nextsibling`, `child`,
/// `lastchild` (and `child_k`, which is expanded). Output rules use
/// `firstchild`, `nextsibling` and `nextsibling*` caterpillar atoms only.
pub fn make_acyclic_unranked(p: &Program) -> (Program, Vec<Warning>) {
    let mut fresh = FreshNames::for_program(p);
    let p = expand_unranked_sugar(p, &mut fresh);
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    let mut warnings = Vec::new();
    for r in &p.rules {
        match chase_unranked(r, &mut fresh) {
            Ok(r2) => out.rules.push(r2),
            Err(check) => warnings.push(Warning {
                message: format!("dropping unsatisfiable {}: {check}", rule_label(r)),
            }),
        }
    }
    (out, warnings)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    First,
    Next,
    Child,
}

fn chase_unranked(r: &Rule, fresh: &mut FreshNames) -> Result<Rule, String> {
    let vt = VarTable::new(r);
    let n = vt.names.len();
    let mut edges: Vec<(Kind, usize, usize)> = Vec::new();
    for a in &r.body {
        let kind = match &a.pred {
            Pred::Builtin(Relation::FirstChild) => Kind::First,
            Pred::Builtin(Relation::NextSibling) => Kind::Next,
            Pred::Builtin(Relation::Child) => Kind::Child,
            _ => continue,
        };
        if a.args.len() == 2 {
            edges.push((kind, vt.id(&a.args[0]), vt.id(&a.args[1])));
        }
    }
    if edges.is_empty() {
        return Ok(r.clone());
    }

    // Equality classes, and sibling groups with positions.
    let mut eq = Uf::new(n);
    let mut grp = OffsetUf::new(n);
    for &(k, x, y) in &edges {
        if k == Kind::Next {
            grp.union(x, y, 1).map_err(|_| "nextsibling atoms admit no depth-index map")?;
        }
    }
    let merge = |eq: &mut Uf, grp: &mut OffsetUf, a: usize, b: usize| -> Result<bool, String> {
        if eq.find(a) == eq.find(b) {
            return Ok(false);
        }
        eq.union(a, b);
        grp.union(a, b, 0).map_err(|_| "merged sibling chain admits no depth-index map".to_string())?;
        Ok(true)
    };
    loop {
        let mut changed = false;
        // Equal position in one sibling group means the same node.
        let mut at: HashMap<(usize, i64), usize> = HashMap::new();
        for v in 0..n {
            let key = grp.find(v);
            match at.get(&key).copied() {
                Some(w) => changed |= merge(&mut eq, &mut grp, w, v)?,
                None => {
                    at.insert(key, v);
                }
            }
        }
        // One parent per sibling group; one first child per parent.
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut first: HashMap<usize, usize> = HashMap::new();
        for &(k, x, y) in &edges {
            if k == Kind::Next {
                continue;
            }
            let g = grp.find(y).0;
            match parent.get(&g).copied() {
                Some(px) => changed |= merge(&mut eq, &mut grp, px, x)?,
                None => {
                    parent.insert(g, x);
                }
            }
            if k == Kind::First {
                let ex = eq.find(x);
                match first.get(&ex).copied() {
                    Some(fy) => changed |= merge(&mut eq, &mut grp, fy, y)?,
                    None => {
                        first.insert(ex, y);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Group graph must be a forest; a first child must lead its group.
    let mut group_parent: HashMap<usize, usize> = HashMap::new();
    let mut group_min: HashMap<usize, i64> = HashMap::new();
    for v in 0..n {
        let (g, o) = grp.find(v);
        let m = group_min.entry(g).or_insert(o);
        *m = (*m).min(o);
    }
    let mut parent_var: HashMap<usize, usize> = HashMap::new();
    let mut has_first: BTreeSet<usize> = BTreeSet::new();
    for &(k, x, y) in &edges {
        if k == Kind::Next {
            continue;
        }
        let (g, o) = grp.find(y);
        let (hx, _) = grp.find(x);
        group_parent.insert(g, hx);
        parent_var.insert(g, eq.find(x));
        if k == Kind::First {
            if o != group_min[&g] {
                return Err("a first child has a left sibling".into());
            }
            has_first.insert(g);
        }
    }
    if has_parent_cycle(&group_parent) {
        return Err("child graph over sibling groups admits no depth-index map".into());
    }

    // Rebuild: drop child atoms, link child-only groups through firstchild
    // and nextsibling*.
    let mut out = substitute(r, &vt, &mut eq);
    out.body.retain(|a| !matches!(a.pred, Pred::Builtin(Relation::Child)));
    let first_target: HashMap<usize, usize> = out
        .body
        .iter()
        .filter(|a| matches!(a.pred, Pred::Builtin(Relation::FirstChild)))
        .map(|a| (vt.id(&a.args[0]), vt.id(&a.args[1])))
        .collect();
    let mut child_groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(k, _, y) in &edges {
        if k == Kind::Child {
            let g = grp.find(y).0;
            if !has_first.contains(&g) {
                child_groups.entry(parent_var[&g]).or_default().insert(g);
            }
        }
    }
    let mut leader: HashMap<usize, usize> = HashMap::new();
    for v in 0..n {
        let v = eq.find(v);
        let (g, o) = grp.find(v);
        if o == group_min[&g] {
            leader.insert(g, v);
        }
    }
    for (x, groups) in child_groups {
        let xname = vt.names[x].clone();
        let y0 = match first_target.get(&x) {
            Some(&f) => vt.names[f].clone(),
            None => {
                let y0 = fresh.fresh("v");
                out.body.push(Atom::rel(Relation::FirstChild, &[&xname, &y0]));
                y0
            }
        };
        for g in groups {
            let y = &vt.names[leader[&g]];
            out.body.push(Atom::binary(Pred::Cat(CatExpr::nextsibling_star()), &y0, y));
        }
    }
    out.dedup_body();
    if !is_acyclic(&out) {
        return Err("query graph is still cyclic after merging".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{parse_program, parse_rule};

    #[test]
    fn depth_index_examples() {
        let d = depth_index(2, &[(0, 1)]).unwrap();
        assert_eq!(d[&1] - d[&0], 1);
        assert!(depth_index(2, &[(0, 1), (1, 0)]).is_none());
        assert!(depth_index(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).is_some());
        assert!(depth_index(3, &[(0, 1), (1, 2), (0, 2)]).is_none());
        assert!(depth_index(1, &[(0, 0)]).is_none());
    }

    fn prog(s: &str) -> Program {
        parse_program(s).unwrap()
    }

    #[test]
    fn ranked_merge_same_k() {
        let (p, w) = make_acyclic_ranked(&prog("p(X) :- child_1(X,Y), child_1(X,Z), q(Y), r(Z)."));
        assert!(w.is_empty());
        assert_eq!(p.rules[0], parse_rule("p(X) :- child_1(X,Y), q(Y), r(Y).").unwrap());
    }

    #[test]
    fn ranked_drops() {
        let (p, w) = make_acyclic_ranked(&prog("p(X) :- child_1(Y,X), child_2(Z,X)."));
        assert!(p.rules.is_empty());
        assert_eq!(w.len(), 1);
        let (p, _) = make_acyclic_ranked(&prog("p(X) :- child_1(X,Y), child_2(Y,X)."));
        assert!(p.rules.is_empty());
        let (p, _) = make_acyclic_ranked(&prog("p(X) :- child_1(X,Y), child_1(Y,Z), child_2(X,Z)."));
        assert!(p.rules.is_empty());
    }

    #[test]
    fn unranked_without_binary_atoms_unchanged() {
        let src = prog("p(X) :- q(X), leaf(X).");
        let (p, w) = make_acyclic_unranked(&src);
        assert!(w.is_empty());
        assert_eq!(p, src);
    }

    #[test]
    fn unranked_parent_merge_and_child_elimination() {
        let (p, w) = make_acyclic_unranked(&prog("p(X) :- child(X,Y), child(Z,Y), child(X,W), nextsibling(Y,W)."));
        assert!(w.is_empty());
        let r = &p.rules[0];
        assert!(is_acyclic(r));
        assert_eq!(r.to_string(), "p(X) :- nextsibling(Y,W), firstchild(X,$v0), cat($v0,Y,\"nextsibling*\").");
    }

    #[test]
    fn unranked_reuses_firstchild() {
        let (p, _) = make_acyclic_unranked(&prog("p(X) :- firstchild(X,A), child(X,B), label_b(B)."));
        assert_eq!(p.rules[0].to_string(), "p(X) :- firstchild(X,A), label_b(B), cat(A,B,\"nextsibling*\").");
    }

    #[test]
    fn unranked_unsat() {
        for src in [
            "p(X) :- nextsibling(X,X).",
            "p(X) :- firstchild(X,Y), nextsibling(Z,Y), child(X,Z).",
            "p(X) :- child(X,Y), child(Y,X).",
            "p(X) :- nextsibling(X,Y), nextsibling(Y,Z), nextsibling(X,Z).",
        ] {
            let (p, w) = make_acyclic_unranked(&prog(src));
            assert!(p.rules.is_empty(), "{src}");
            assert_eq!(w.len(), 1);
        }
    }

    #[test]
    fn firstchild_fd_both_ways() {
        let (p, _) = make_acyclic_unranked(&prog("p(X) :- firstchild(X,Y), firstchild(X,Z), firstchild(W,Z), q(W)."));
        assert_eq!(p.rules[0].to_string(), "p(W) :- firstchild(W,Y), q(W).");
    }

    #[test]
    fn lastchild_becomes_lastsibling() {
        let (p, _) = make_acyclic_unranked(&prog("p(Y) :- lastchild(X,Y), root(X)."));
        let r = &p.rules[0];
        assert!(r.to_string().contains("lastsibling(Y)"));
        assert!(!r.to_string().contains("child(X,Y)") || r.to_string().contains("firstchild"));
    }

    #[test]
    fn child_k_expansion() {
        let mut f = FreshNames::default();
        let p = expand_unranked_sugar(&prog("p(Y) :- child_3(X,Y)."), &mut f);
        assert_eq!(p.rules[0].to_string(), "p(Y) :- firstchild(X,$v0), nextsibling($v0,$v1), nextsibling($v1,Y).");
        let p = expand_unranked_sugar(&prog("p(Y) :- child_1(X,Y)."), &mut f);
        assert_eq!(p.rules[0].to_string(), "p(Y) :- firstchild(X,Y).");
    }
}
