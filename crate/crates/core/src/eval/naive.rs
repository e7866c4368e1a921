use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::EvalError;
use crate::datalog::{check, Atom, Pred, Program, Rule};
use crate::normalize::{caterpillar_relation, CatExpr};
use crate::tree::{NodeId, Relation, Tree};

/// Default node cap for [`naive_fixpoint`].
pub const NAIVE_CAP: usize = 5000;

/// An intensional ground atom; `node` is `None` for propositional atoms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: String,
    pub node: Option<NodeId>,
}

impl GroundAtom {
    pub fn new(pred: &str, node: usize) -> Self {
        GroundAtom { pred: pred.to_string(), node: Some(NodeId(node)) }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "{}(n{})", self.pred, n.0 + 1),
            None => f.write_str(&self.pred),
        }
    }
}

/// Result of iterating the immediate consequence operator.
#[derive(Clone, Debug, Default)]
pub struct NaiveResult {
    /// All derived intensional atoms.
    pub atoms: BTreeSet<GroundAtom>,
    /// `rounds[i]` holds the atoms first derived in round `i + 1`.
    pub rounds: Vec<Vec<GroundAtom>>,
}

impl NaiveResult {
    pub fn nodes_of(&self, pred: &str) -> BTreeSet<NodeId> {
        self.atoms.iter().filter(|a| a.pred == pred).filter_map(|a| a.node).collect()
    }

    pub fn holds_prop(&self, pred: &str) -> bool {
        self.atoms.contains(&GroundAtom { pred: pred.to_string(), node: None })
    }
}

/// A materialized binary relation with adjacency in both directions.
struct BinRel {
    pairs: Vec<(u32, u32)>,
    fwd: Vec<Vec<u32>>,
    bwd: Vec<Vec<u32>>,
}

impl BinRel {
    fn new(n: usize, pairs: Vec<(u32, u32)>) -> Self {
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for &(a, b) in &pairs {
            fwd[a as usize].push(b);
            bwd[b as usize].push(a);
        }
        BinRel { pairs, fwd, bwd }
    }
    fn holds(&self, a: u32, b: u32) -> bool {
        self.fwd[a as usize].contains(&b)
    }
}

#[derive(Clone)]
enum Lit {
    Unary(Relation, usize),
    Binary(usize, usize, usize),
    Idb(usize, usize),
    Prop(usize),
}

struct Compiled {
    head: (usize, Option<usize>),
    lits: Vec<Lit>,
    nvars: usize,
}

/// Iterates `T_P` from the extensional facts of `t` to its fixpoint by
/// enumerating every valuation of every rule in each round. The `child`,
/// `lastchild`, `child_k` and caterpillar relations are materialized.
pub fn naive_fixpoint(p: &Program, t: &Tree) -> Result<NaiveResult, EvalError> {
    naive_fixpoint_capped(p, t, NAIVE_CAP)
}

pub fn naive_fixpoint_capped(p: &Program, t: &Tree, cap: usize) -> Result<NaiveResult, EvalError> {
    check(p)?;
    if t.len() > cap {
        return Err(EvalError::Cap { nodes: t.len(), cap });
    }
    let n = t.len();
    let names: Vec<String> = p.all_names().into_iter().collect();
    let name_id: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    // Binary relations keyed by predicate.
    let mut rel_id: BTreeMap<Pred, usize> = BTreeMap::new();
    let mut rels: Vec<BinRel> = Vec::new();
    let mut compiled = Vec::new();
    for r in &p.rules {
        compiled.push(compile(r, t, &name_id, &mut rel_id, &mut rels)?);
    }
    let mut unary: Vec<Vec<bool>> = vec![vec![false; n]; names.len()];
    let mut props: Vec<bool> = vec![false; names.len()];
    let mut result = NaiveResult::default();
    loop {
        let snapshot = (unary.clone(), props.clone());
        let mut new_atoms = BTreeSet::new();
        for c in &compiled {
            let mut val = vec![u32::MAX; c.nvars];
            let mut done = vec![false; c.lits.len()];
            solve(c, t, &rels, &snapshot.0, &snapshot.1, &mut val, &mut done, &mut |val| {
                let (hp, hv) = c.head;
                match hv {
                    Some(v) => {
                        let node = val[v] as usize;
                        if !snapshot.0[hp][node] {
                            new_atoms.insert((hp, Some(node)));
                        }
                    }
                    None => {
                        if !snapshot.1[hp] {
                            new_atoms.insert((hp, None));
                        }
                    }
                }
            });
        }
        if new_atoms.is_empty() {
            break;
        }
        let mut round = Vec::new();
        for (pid, node) in new_atoms {
            match node {
                Some(v) => unary[pid][v] = true,
                None => props[pid] = true,
            }
            let atom = GroundAtom { pred: names[pid].clone(), node: node.map(NodeId) };
            result.atoms.insert(atom.clone());
            round.push(atom);
        }
        result.rounds.push(round);
    }
    Ok(result)
}

fn compile(
    r: &Rule,
    t: &Tree,
    name_id: &HashMap<&str, usize>,
    rel_id: &mut BTreeMap<Pred, usize>,
    rels: &mut Vec<BinRel>,
) -> Result<Compiled, EvalError> {
    let vars = r.vars();
    let vid: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut lits = Vec::new();
    for a in &r.body {
        lits.push(match &a.pred {
            Pred::Builtin(rel) if !rel.is_binary() => Lit::Unary(rel.clone(), vid[a.args[0].as_str()]),
            Pred::Builtin(_) | Pred::Cat(_) => {
                let id = match rel_id.get(&a.pred) {
                    Some(&id) => id,
                    None => {
                        let pairs = materialize(&a.pred, t)?;
                        rels.push(BinRel::new(t.len(), pairs));
                        rel_id.insert(a.pred.clone(), rels.len() - 1);
                        rels.len() - 1
                    }
                };
                Lit::Binary(id, vid[a.args[0].as_str()], vid[a.args[1].as_str()])
            }
            Pred::Idb(name) => Lit::Idb(name_id[name.as_str()], vid[a.args[0].as_str()]),
            Pred::Prop(name) => Lit::Prop(name_id[name.as_str()]),
        });
    }
    let head = head_of(&r.head, name_id, &vid);
    Ok(Compiled { head, lits, nvars: vars.len() })
}

fn head_of(a: &Atom, name_id: &HashMap<&str, usize>, vid: &HashMap<&str, usize>) -> (usize, Option<usize>) {
    (name_id[a.pred.name().expect("intensional head")], a.args.first().map(|v| vid[v.as_str()]))
}

fn materialize(p: &Pred, t: &Tree) -> Result<Vec<(u32, u32)>, EvalError> {
    let e: &CatExpr = match p {
        Pred::Builtin(r) => {
            return Ok(t.pairs(r).into_iter().map(|(a, b)| (a.0 as u32, b.0 as u32)).collect());
        }
        Pred::Cat(e) => e,
        _ => unreachable!("only binary relations are materialized"),
    };
    let r = caterpillar_relation(t, e).map_err(|c| EvalError::Cap { nodes: c.nodes, cap: c.cap })?;
    Ok(r.pairs().into_iter().map(|(a, b)| (a.0 as u32, b.0 as u32)).collect())
}

const UNBOUND: u32 = u32::MAX;

/// Backtracking join: picks the cheapest remaining literal, binds or checks
/// it, and recurses.
#[allow(clippy::too_many_arguments)]
fn solve(
    c: &Compiled,
    t: &Tree,
    rels: &[BinRel],
    unary: &[Vec<bool>],
    props: &[bool],
    val: &mut Vec<u32>,
    done: &mut Vec<bool>,
    emit: &mut dyn FnMut(&[u32]),
) {
    // Choose: fully bound literal first, then one bound end, then anything.
    let mut best: Option<(usize, u8)> = None;
    for (i, l) in c.lits.iter().enumerate() {
        if done[i] {
            continue;
        }
        let score = match l {
            Lit::Unary(_, v) | Lit::Idb(_, v) => {
                if val[*v] != UNBOUND {
                    0
                } else if matches!(l, Lit::Idb(..)) {
                    2
                } else {
                    3
                }
            }
            Lit::Prop(_) => 0,
            Lit::Binary(_, a, b) => match (val[*a] != UNBOUND, val[*b] != UNBOUND) {
                (true, true) => 0,
                (true, false) | (false, true) => 1,
                (false, false) => 4,
            },
        };
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    let Some((i, _)) = best else {
        emit(val);
        return;
    };
    done[i] = true;
    let n = t.len() as u32;
    macro_rules! try_bind {
        ($v:expr, $x:expr) => {{
            val[$v] = $x;
            solve(c, t, rels, unary, props, val, done, emit);
            val[$v] = UNBOUND;
        }};
    }
    match &c.lits[i] {
        Lit::Prop(p) => {
            if props[*p] {
                solve(c, t, rels, unary, props, val, done, emit);
            }
        }
        Lit::Unary(rel, v) => {
            if val[*v] != UNBOUND {
                if t.holds_unary(rel, NodeId(val[*v] as usize)) {
                    solve(c, t, rels, unary, props, val, done, emit);
                }
            } else {
                for x in 0..n {
                    if t.holds_unary(rel, NodeId(x as usize)) {
                        try_bind!(*v, x);
                    }
                }
            }
        }
        Lit::Idb(p, v) => {
            if val[*v] != UNBOUND {
                if unary[*p][val[*v] as usize] {
                    solve(c, t, rels, unary, props, val, done, emit);
                }
            } else {
                for x in 0..n {
                    if unary[*p][x as usize] {
                        try_bind!(*v, x);
                    }
                }
            }
        }
        Lit::Binary(r, a, b) => {
            let rel = &rels[*r];
            match (val[*a], val[*b]) {
                (x, y) if x != UNBOUND && y != UNBOUND => {
                    if rel.holds(x, y) {
                        solve(c, t, rels, unary, props, val, done, emit);
                    }
                }
                (x, UNBOUND) if x != UNBOUND => {
                    for &y in &rel.fwd[x as usize] {
                        try_bind!(*b, y);
                    }
                }
                (UNBOUND, y) if y != UNBOUND => {
                    for &x in &rel.bwd[y as usize] {
                        try_bind!(*a, x);
                    }
                }
                _ => {
                    for &(x, y) in &rel.pairs {
                        if a == b {
                            if x == y {
                                try_bind!(*a, x);
                            }
                            continue;
                        }
                        val[*a] = x;
                        try_bind!(*b, y);
                        val[*a] = UNBOUND;
                    }
                }
            }
        }
    }
    done[i] = false;
}
