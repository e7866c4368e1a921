use std::collections::BTreeMap;

use super::{CatExpr, NormalizeError};
use crate::datalog::{components, is_acyclic, query_graph, Atom, FreshNames, Pred, Program, Rule};
use crate::tree::Relation;

/// Links the components of every disconnected rule with atoms of `total`,
/// a caterpillar expression denoting the full relation on nodes.
pub fn connect_with_doc_order(p: &Program, total: &CatExpr) -> Program {
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    for r in &p.rules {
        let (g, comp) = components(r);
        // Representative of each component, head component first.
        let mut reps: Vec<usize> = Vec::new();
        let mut seen = BTreeMap::new();
        for (v, &c) in comp.iter().enumerate() {
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(c) {
                e.insert(v);
                reps.push(v);
            }
        }
        let mut r2 = r.clone();
        for w in reps.windows(2) {
            r2.body.push(Atom::binary(Pred::Cat(total.clone()), &g.vars[w[0]], &g.vars[w[1]]));
        }
        out.rules.push(r2);
    }
    out
}

/// Splits connected, acyclic rules into rules with at most two body atoms
/// of the shapes `p(x) :- p0(x)`, `p(x) :- p0(x), p1(x)` and
/// `p(x) :- p0(x0), R(x0,x)` / `R(x,x0)`, where R may be a caterpillar atom.
///
/// Each rule is folded bottom-up along its query tree rooted at the head
/// variable. A subtree hanging off variable `v` through atom `R` becomes
/// one fresh predicate on `v`. Variables carrying no unary atom are given
/// the domain predicate `dom`.
pub fn decompose(p: &Program, dom: &str, fresh: &mut FreshNames) -> Result<Program, NormalizeError> {
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    for r in &p.rules {
        decompose_rule(r, dom, fresh, &mut out.rules)?;
    }
    Ok(out)
}

enum Conj {
    Atom(Atom),
    /// An edge rule still to be emitted: `head(v) :- t(c), R(..)`.
    Edge { t: Pred, c: String, atom: Atom },
}

fn decompose_rule(r: &Rule, dom: &str, fresh: &mut FreshNames, out: &mut Vec<Rule>) -> Result<(), NormalizeError> {
    let head_name = match (&r.head.pred, r.head.args.as_slice()) {
        (Pred::Idb(n), [_]) => n.clone(),
        _ => return Err(NormalizeError::Unsupported(format!("rule `{r}` does not have a unary intensional head"))),
    };
    if r.body.iter().any(|a| matches!(a.pred, Pred::Prop(_))) {
        return Err(NormalizeError::Unsupported(format!("propositional atoms are not supported in `{r}`")));
    }
    if !is_acyclic(r) {
        return Err(NormalizeError::Cyclic(r.to_string()));
    }
    let g = query_graph(r);
    let nv = g.vars.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for &(a, b, i) in &g.edges {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut unary: Vec<Vec<Atom>> = vec![Vec::new(); nv];
    let index: BTreeMap<&str, usize> = g.vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    for a in &r.body {
        if a.args.len() == 1 {
            unary[index[a.args[0].as_str()]].push(a.clone());
        }
    }
    // Order the query tree from the head variable.
    let root = 0;
    let mut order = Vec::with_capacity(nv);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nv];
    let mut visited = vec![false; nv];
    visited[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        for &(w, i) in &adj[v] {
            if !visited[w] {
                visited[w] = true;
                parent[w] = Some((v, i));
                stack.push(w);
            }
        }
    }
    if order.len() != nv {
        return Err(NormalizeError::Unsupported(format!("rule `{r}` is not connected")));
    }
    let mut conj: Vec<Vec<Conj>> = (0..nv).map(|v| unary[v].drain(..).map(Conj::Atom).collect()).collect();
    for &v in order.iter().rev() {
        let Some((u, i)) = parent[v] else { continue };
        let items = std::mem::take(&mut conj[v]);
        let t = fold(items, &g.vars[v], dom, fresh, out);
        conj[u].push(Conj::Edge { t, c: g.vars[v].clone(), atom: r.body[i].clone() });
    }
    let x = &g.vars[root];
    let mut items = std::mem::take(&mut conj[root]);
    let last = match items.len() {
        0 => unreachable!("head variable occurs in the body"),
        1 => items.pop().expect("one item"),
        _ => {
            let rest = items.pop().expect("nonempty");
            let t = fold(items, x, dom, fresh, out);
            let body = vec![Atom::unary(t, x), item_atom(rest, x, fresh, out)];
            out.push(Rule::new(Atom::idb(&head_name, x), body));
            return Ok(());
        }
    };
    match last {
        Conj::Atom(a) => out.push(Rule::new(Atom::idb(&head_name, x), vec![a])),
        Conj::Edge { t, c, atom } => out.push(Rule::new(Atom::idb(&head_name, x), vec![Atom::unary(t, &c), atom])),
    }
    Ok(())
}

/// Emits the edge rule for an `Edge` item and returns the resulting atom on `v`.
fn item_atom(item: Conj, v: &str, fresh: &mut FreshNames, out: &mut Vec<Rule>) -> Atom {
    match item {
        Conj::Atom(a) => a,
        Conj::Edge { t, c, atom } => {
            let e = fresh.fresh("e");
            out.push(Rule::new(Atom::idb(&e, v), vec![Atom::unary(t, &c), atom]));
            Atom::idb(&e, v)
        }
    }
}

/// Reduces a conjunction on variable `v` to a single unary predicate.
fn fold(items: Vec<Conj>, v: &str, dom: &str, fresh: &mut FreshNames, out: &mut Vec<Rule>) -> Pred {
    let mut items = items.into_iter();
    let Some(first) = items.next() else {
        return Pred::idb(dom);
    };
    let mut acc = item_atom(first, v, fresh, out);
    for i in items {
        let a = item_atom(i, v, fresh, out);
        let t = fresh.fresh("t");
        out.push(Rule::new(Atom::idb(&t, v), vec![acc, a]));
        acc = Atom::idb(&t, v);
    }
    acc.pred
}

/// Rules defining `dom` as every node, by walking down from the root over
/// the given axes.
pub fn dom_rules(dom: &str, axes: &[Relation]) -> Vec<Rule> {
    let mut rules = vec![Rule::new(Atom::idb(dom, "X"), vec![Atom::rel(Relation::Root, &["X"])])];
    for a in axes {
        rules.push(Rule::new(
            Atom::idb(dom, "X"),
            vec![Atom::idb(dom, "X0"), Atom::rel(a.clone(), &["X0", "X"])],
        ));
    }
    rules
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{is_tmnf_rule, parse_program};

    #[test]
    fn connect_links_components() {
        let p = parse_program("p(X) :- p1(X), p2(Y).\nq(X) :- q1(X).").unwrap();
        let out = connect_with_doc_order(&p, &CatExpr::Eps);
        assert_eq!(out.rules[0].to_string(), "p(X) :- p1(X), p2(Y), cat(X,Y,\"eps\").");
        assert_eq!(out.rules[1], p.rules[1]);
    }

    #[test]
    fn form_two_unchanged() {
        let p = parse_program("p(X) :- q(X0), firstchild(X0,X).").unwrap();
        let mut f = FreshNames::for_program(&p);
        let out = decompose(&p, "$dom", &mut f).unwrap();
        assert_eq!(out.rules, p.rules);
    }

    #[test]
    fn chain_decomposes() {
        let p = parse_program("p(X) :- q(X0), firstchild(X0,X1), s(X1), nextsibling(X1,X).").unwrap();
        let mut f = FreshNames::for_program(&p);
        let out = decompose(&p, "$dom", &mut f).unwrap();
        let text: Vec<String> = out.rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(
            text,
            vec![
                "$e0(X1) :- q(X0), firstchild(X0,X1).",
                "$t0(X1) :- s(X1), $e0(X1).",
                "p(X) :- $t0(X1), nextsibling(X1,X).",
            ]
        );
    }

    #[test]
    fn star_shaped_rule() {
        let p = parse_program("p(X) :- label_a(X), leaf(X), firstchild(X,Y), nextsibling(Z,X), lastsibling(Y).").unwrap();
        let mut f = FreshNames::for_program(&p);
        let out = decompose(&p, "$dom", &mut f).unwrap();
        assert!(out.rules.iter().all(|r| r.body.len() <= 2));
        assert!(out.rules.iter().filter(|r| !r.body.iter().any(|a| matches!(a.pred, Pred::Cat(_)))).all(is_tmnf_rule));
        assert!(out.rules.iter().any(|r| r.body.iter().any(|a| a.pred == Pred::idb("$dom"))));
    }
}
