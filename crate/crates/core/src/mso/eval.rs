//! Direct evaluation by structural recursion. Set quantifiers range over all
//! subsets of the domain; consecutive quantifiers of the same kind are
//! searched together one membership bit at a time, under three-valued
//! logic, so that a branch stops as soon as its value no longer depends on
//! the bits left open.

use std::collections::BTreeSet;

use super::{Formula, MsoError};
use crate::tree::{NodeId, Relation, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MsoCaps {
    pub max_nodes: usize,
    pub max_set_quantifiers: usize,
}

impl Default for MsoCaps {
    fn default() -> Self {
        MsoCaps { max_nodes: 6, max_set_quantifiers: 4 }
    }
}

/// Bit sets are `u64`.
const HARD_NODE_LIMIT: usize = 64;

enum F {
    Rel(Relation, Vec<usize>),
    Eq(usize, usize),
    In(usize, usize),
    Not(Box<F>),
    And(Vec<F>),
    Or(Vec<F>),
    Implies(Box<F>, Box<F>),
    Iff(Box<F>, Box<F>),
    Node(bool, usize, Box<F>),
    Sets(bool, Vec<usize>, Box<F>),
}

#[derive(Default)]
struct Scopes {
    nodes: Vec<(String, usize)>,
    sets: Vec<(String, usize)>,
    node_slots: usize,
    set_slots: usize,
}

fn lookup(scope: &[(String, usize)], v: &str) -> Result<usize, MsoError> {
    scope.iter().rev().find(|(n, _)| n == v).map(|(_, s)| *s).ok_or_else(|| MsoError::Unbound(v.to_string()))
}

fn lower(f: &Formula, sc: &mut Scopes) -> Result<F, MsoError> {
    let many = |v: &[Formula], sc: &mut Scopes| v.iter().map(|g| lower(g, sc)).collect::<Result<Vec<_>, _>>();
    Ok(match f {
        Formula::Rel(r, args) => {
            F::Rel(r.clone(), args.iter().map(|a| lookup(&sc.nodes, a)).collect::<Result<_, _>>()?)
        }
        Formula::Eq(x, y) => F::Eq(lookup(&sc.nodes, x)?, lookup(&sc.nodes, y)?),
        Formula::In(x, p) => F::In(lookup(&sc.nodes, x)?, lookup(&sc.sets, p)?),
        Formula::Not(a) => F::Not(Box::new(lower(a, sc)?)),
        Formula::And(v) => F::And(many(v, sc)?),
        Formula::Or(v) => F::Or(many(v, sc)?),
        Formula::Implies(a, b) => F::Implies(Box::new(lower(a, sc)?), Box::new(lower(b, sc)?)),
        Formula::Iff(a, b) => F::Iff(Box::new(lower(a, sc)?), Box::new(lower(b, sc)?)),
        Formula::Exists(x, a) | Formula::Forall(x, a) => {
            let slot = sc.node_slots;
            sc.node_slots += 1;
            sc.nodes.push((x.clone(), slot));
            let body = lower(a, sc)?;
            sc.nodes.pop();
            F::Node(matches!(f, Formula::Forall(..)), slot, Box::new(body))
        }
        Formula::ExistsSet(..) | Formula::ForallSet(..) => {
            let forall = matches!(f, Formula::ForallSet(..));
            let mut g = f;
            let mut slots = Vec::new();
            while let (Formula::ForallSet(p, a), true) | (Formula::ExistsSet(p, a), false) = (g, forall) {
                let slot = sc.set_slots;
                sc.set_slots += 1;
                sc.sets.push((p.clone(), slot));
                slots.push(slot);
                g = a;
            }
            let body = lower(g, sc)?;
            sc.sets.truncate(sc.sets.len() - slots.len());
            F::Sets(forall, slots, Box::new(body))
        }
    })
}

/// Three-valued truth: false < unknown < true.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum T3 {
    F,
    U,
    T,
}

impl T3 {
    fn of(b: bool) -> T3 {
        if b {
            T3::T
        } else {
            T3::F
        }
    }
    fn not(self) -> T3 {
        match self {
            T3::F => T3::T,
            T3::U => T3::U,
            T3::T => T3::F,
        }
    }
}

/// An open membership bit `(set slot, node)` that an unknown value depends on.
type Hint = Option<(usize, usize)>;

struct Env<'t> {
    t: &'t Tree,
    nodes: Vec<usize>,
    /// `(known, value)` bit masks per set slot.
    sets: Vec<(u64, u64)>,
}

impl Env<'_> {
    /// Lattice join (`or`) or meet (`and`) over `items`, stopping at the
    /// absorbing value.
    fn fold<'a>(&mut self, items: impl Iterator<Item = (&'a F, bool)>, or: bool) -> (T3, Hint) {
        let stop = if or { T3::T } else { T3::F };
        let mut hint = None;
        let mut unknown = false;
        for (g, negate) in items {
            let (mut r, h) = self.eval(g);
            if negate {
                r = r.not();
            }
            if r == stop {
                return (stop, None);
            }
            if r == T3::U && !unknown {
                unknown = true;
                hint = h;
            }
        }
        if unknown {
            (T3::U, hint)
        } else {
            (stop.not(), None)
        }
    }

    fn eval(&mut self, f: &F) -> (T3, Hint) {
        match f {
            F::Rel(r, args) => {
                let ok = match args.as_slice() {
                    [x] => self.t.holds_unary(r, NodeId(self.nodes[*x])),
                    [x, y] => self.t.holds_binary(r, NodeId(self.nodes[*x]), NodeId(self.nodes[*y])),
                    _ => false,
                };
                (T3::of(ok), None)
            }
            F::Eq(x, y) => (T3::of(self.nodes[*x] == self.nodes[*y]), None),
            F::In(x, p) => {
                let n = self.nodes[*x];
                let (known, val) = self.sets[*p];
                if known >> n & 1 == 1 {
                    (T3::of(val >> n & 1 == 1), None)
                } else {
                    (T3::U, Some((*p, n)))
                }
            }
            F::Not(a) => {
                let (r, h) = self.eval(a);
                (r.not(), h)
            }
            F::And(v) => self.fold(v.iter().map(|g| (g, false)), false),
            F::Or(v) => self.fold(v.iter().map(|g| (g, false)), true),
            // The consequent goes first so that its bits are branched on first.
            F::Implies(a, b) => self.fold([(&**b, false), (&**a, true)].into_iter(), true),
            F::Iff(a, b) => {
                let (ra, ha) = self.eval(a);
                let (rb, hb) = self.eval(b);
                match (ra, rb) {
                    (T3::U, _) => (T3::U, ha),
                    (_, T3::U) => (T3::U, hb),
                    _ => (T3::of(ra == rb), None),
                }
            }
            F::Node(forall, slot, body) => {
                let stop = if *forall { T3::F } else { T3::T };
                let saved = self.nodes[*slot];
                let mut out = (stop.not(), None);
                for n in 0..self.t.len() {
                    self.nodes[*slot] = n;
                    let (r, h) = self.eval(body);
                    if r == stop {
                        out = (stop, None);
                        break;
                    }
                    if r == T3::U && out.0 != T3::U {
                        out = (T3::U, h);
                    }
                }
                self.nodes[*slot] = saved;
                out
            }
            F::Sets(forall, slots, body) => {
                for s in slots {
                    self.sets[*s] = (0, 0);
                }
                self.search(*forall, slots, body)
            }
        }
    }

    fn search(&mut self, forall: bool, slots: &[usize], body: &F) -> (T3, Hint) {
        let (r, h) = self.eval(body);
        if r != T3::U {
            return (r, None);
        }
        let Some((s, n)) = h.filter(|(s, _)| slots.contains(s)) else {
            return (T3::U, h);
        };
        let stop = if forall { T3::F } else { T3::T };
        let mut out = (stop.not(), None);
        for bit in [0u64, 1] {
            let (known, val) = self.sets[s];
            self.sets[s] = (known | 1 << n, val & !(1 << n) | bit << n);
            let (r, h) = self.search(forall, slots, body);
            self.sets[s] = (known, val);
            if r == stop {
                return (stop, None);
            }
            if r == T3::U && out.0 != T3::U {
                out = (T3::U, h);
            }
        }
        out
    }
}

fn prepare(t: &Tree, f: &Formula, free: &[&str], caps: MsoCaps) -> Result<(F, Scopes), MsoError> {
    if t.len() > caps.max_nodes.min(HARD_NODE_LIMIT) {
        return Err(MsoError::NodeCap { nodes: t.len(), cap: caps.max_nodes.min(HARD_NODE_LIMIT) });
    }
    let sets = f.set_quantifiers();
    if sets > caps.max_set_quantifiers {
        return Err(MsoError::SetCap { sets, cap: caps.max_set_quantifiers });
    }
    let mut sc = Scopes::default();
    for (i, v) in free.iter().enumerate() {
        sc.nodes.push((v.to_string(), i));
    }
    sc.node_slots = free.len();
    let body = lower(f, &mut sc)?;
    Ok((body, sc))
}

fn run(t: &Tree, f: &F, sc: &Scopes, nodes: Vec<usize>) -> bool {
    let mut env = Env { t, nodes, sets: vec![(0, 0); sc.set_slots] };
    env.nodes.resize(sc.node_slots, 0);
    let (r, _) = env.eval(f);
    debug_assert_ne!(r, T3::U);
    r == T3::T
}

/// Truth of `f` under a node assignment for its free variables.
pub fn eval_mso_with(t: &Tree, f: &Formula, assignment: &[(&str, NodeId)], caps: MsoCaps) -> Result<bool, MsoError> {
    let free: Vec<&str> = assignment.iter().map(|(v, _)| *v).collect();
    if let Some((_, n)) = assignment.iter().find(|(_, n)| n.0 >= t.len()) {
        return Err(MsoError::Unbound(format!("node {n} is outside the tree")));
    }
    let (g, sc) = prepare(t, f, &free, caps)?;
    Ok(run(t, &g, &sc, assignment.iter().map(|(_, n)| n.0).collect()))
}

pub fn eval_mso(t: &Tree, f: &Formula, assignment: &[(&str, NodeId)]) -> Result<bool, MsoError> {
    eval_mso_with(t, f, assignment, MsoCaps::default())
}

/// `{x ∈ dom | t ⊨ φ(x)}` for a formula with exactly one free node variable.
pub fn eval_mso_unary_with(t: &Tree, f: &Formula, caps: MsoCaps) -> Result<BTreeSet<NodeId>, MsoError> {
    let (nodes, sets) = f.free_vars();
    if let Some(p) = sets.into_iter().next() {
        return Err(MsoError::Unbound(p));
    }
    let [x] = nodes.iter().map(String::as_str).collect::<Vec<_>>()[..] else {
        return Err(MsoError::NotUnary(nodes.into_iter().collect()));
    };
    let (g, sc) = prepare(t, f, &[x], caps)?;
    Ok(t.nodes().filter(|n| run(t, &g, &sc, vec![n.0])).collect())
}

pub fn eval_mso_unary(t: &Tree, f: &Formula) -> Result<BTreeSet<NodeId>, MsoError> {
    eval_mso_unary_with(t, f, MsoCaps::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mso::parse_mso;
    use crate::tree::parse_term_tree;

    fn unary(t: &str, f: &str) -> Vec<usize> {
        let t = parse_term_tree(t).unwrap();
        eval_mso_unary(&t, &parse_mso(f).unwrap()).unwrap().into_iter().map(|n| n.0).collect()
    }

    /// Reference evaluation with no pruning: every subset, every bit.
    fn plain(t: &Tree, f: &Formula, nodes: &mut Vec<(String, usize)>, sets: &mut Vec<(String, u64)>) -> bool {
        let node = |v: &str, nodes: &Vec<(String, usize)>| nodes.iter().rev().find(|(n, _)| n == v).unwrap().1;
        match f {
            Formula::Rel(r, args) => {
                let ids: Vec<NodeId> = args.iter().map(|a| NodeId(node(a, nodes))).collect();
                crate::tree::holds(t, r, &ids).unwrap()
            }
            Formula::Eq(x, y) => node(x, nodes) == node(y, nodes),
            Formula::In(x, p) => {
                let m = sets.iter().rev().find(|(n, _)| n == p).unwrap().1;
                m >> node(x, nodes) & 1 == 1
            }
            Formula::Not(a) => !plain(t, a, nodes, sets),
            Formula::And(v) => v.iter().all(|g| plain(t, g, nodes, sets)),
            Formula::Or(v) => v.iter().any(|g| plain(t, g, nodes, sets)),
            Formula::Implies(a, b) => !plain(t, a, nodes, sets) || plain(t, b, nodes, sets),
            Formula::Iff(a, b) => plain(t, a, nodes, sets) == plain(t, b, nodes, sets),
            Formula::Exists(x, a) | Formula::Forall(x, a) => {
                let mut vals = Vec::new();
                for n in 0..t.len() {
                    nodes.push((x.clone(), n));
                    vals.push(plain(t, a, nodes, sets));
                    nodes.pop();
                }
                if matches!(f, Formula::Forall(..)) {
                    vals.iter().all(|b| *b)
                } else {
                    vals.iter().any(|b| *b)
                }
            }
            Formula::ExistsSet(p, a) | Formula::ForallSet(p, a) => {
                let mut vals = Vec::new();
                for m in 0..1u64 << t.len() {
                    sets.push((p.clone(), m));
                    vals.push(plain(t, a, nodes, sets));
                    sets.pop();
                }
                if matches!(f, Formula::ForallSet(..)) {
                    vals.iter().all(|b| *b)
                } else {
                    vals.iter().any(|b| *b)
                }
            }
        }
    }

    #[test]
    fn basics() {
        assert_eq!(unary("a(b,c(d))", "(root x)"), vec![0]);
        assert_eq!(unary("a(b,c(d))", "(exists-set P (in x P))"), vec![0, 1, 2, 3]);
        assert_eq!(unary("a(b,c(d))", "(forall-set P (in x P))"), Vec::<usize>::new());
        assert_eq!(unary("a(b,c(d))", "(exists y (and (firstchild y x)))"), vec![1, 3]);
    }

    #[test]
    fn descendants_via_closed_sets() {
        // x is below node 2: every set containing 2's children and closed
        // downward contains x.
        let f = "(forall-set P (implies (and (forall y (implies (exists z (and (label_c z) (child z y))) (in y P))) \
                 (forall y (forall z (implies (and (in y P) (child y z)) (in z P))))) (in x P)))";
        assert_eq!(unary("a(b,c(d(e),b))", f), vec![3, 4, 5]);
    }

    #[test]
    fn matches_plain_enumeration() {
        let t = parse_term_tree("a(b(a),b)").unwrap();
        let formulas = [
            "(exists-set P (forall-set Q (iff (in x Q) (or (in x P) (root x)))))",
            "(forall-set P (exists-set Q (and (iff (in x P) (not (in x Q))) (exists y (in y Q)))))",
            "(exists-set P (and (in x P) (forall y (implies (in y P) (or (leaf y) (= x y))))))",
            "(not (exists-set P (exists-set Q (and (in x P) (in x Q) (not (exists y (and (in y P) (in y Q) (leaf y))))))))",
        ];
        for text in formulas {
            let f = parse_mso(text).unwrap();
            let got = eval_mso_unary(&t, &f).unwrap();
            let want: BTreeSet<NodeId> =
                t.nodes().filter(|n| plain(&t, &f, &mut vec![("x".into(), n.0)], &mut Vec::new())).collect();
            assert_eq!(got, want, "{text}");
        }
    }

    #[test]
    fn caps_are_errors() {
        let big = parse_term_tree("a(a,a,a,a,a,a)").unwrap();
        let f = parse_mso("(root x)").unwrap();
        assert!(matches!(eval_mso_unary(&big, &f), Err(MsoError::NodeCap { nodes: 7, cap: 6 })));
        let t = parse_term_tree("a").unwrap();
        let deep = parse_mso(
            "(exists-set A (exists-set B (exists-set C (exists-set D (exists-set E (in x E))))))",
        )
        .unwrap();
        assert!(matches!(eval_mso_unary(&t, &deep), Err(MsoError::SetCap { sets: 5, cap: 4 })));
        let caps = MsoCaps { max_nodes: 6, max_set_quantifiers: 5 };
        assert_eq!(eval_mso_unary_with(&t, &deep, caps).unwrap().len(), 1);
    }

    #[test]
    fn unbound_variables() {
        let t = parse_term_tree("a").unwrap();
        assert!(matches!(eval_mso(&t, &parse_mso("(root y)").unwrap(), &[]), Err(MsoError::Unbound(_))));
        assert!(matches!(eval_mso_unary(&t, &parse_mso("(in x P)").unwrap()), Err(MsoError::Unbound(_))));
        assert!(eval_mso(&t, &parse_mso("(root y)").unwrap(), &[("y", NodeId(0))]).unwrap());
    }
}
