use std::collections::HashMap;

use super::{EvalError, HornInstance};
use crate::datalog::{components, Atom, FreshNames, Pred, Program, Rule};
use crate::tree::{NodeId, Relation, Tree};

/// Splits every component not containing the head variable off into a rule
/// with a fresh propositional head, referenced from the original rule.
pub fn connect_rules(p: &Program) -> Program {
    let mut fresh = FreshNames::for_program(p);
    let mut out = Program { rules: Vec::new(), queries: p.queries.clone() };
    for r in &p.rules {
        let (g, comp) = components(r);
        let head_comp = r.head.args.first().and_then(|h| g.vars.iter().position(|v| v == h)).map(|i| comp[i]);
        let mut others: Vec<usize> = Vec::new();
        for &c in &comp {
            if Some(c) != head_comp && !others.contains(&c) {
                others.push(c);
            }
        }
        // A variable-free head keeps its first component in place.
        let keep = head_comp.or_else(|| others.first().copied());
        others.retain(|&c| Some(c) != keep);
        if others.is_empty() {
            out.rules.push(r.clone());
            continue;
        }
        let comp_of = |a: &Atom| a.args.first().map(|v| comp[g.vars.iter().position(|w| w == v).expect("rule var")]);
        let mut main_body: Vec<Atom> = Vec::new();
        let mut split: HashMap<usize, Vec<Atom>> = HashMap::new();
        for a in &r.body {
            match comp_of(a) {
                Some(c) if Some(c) != keep => split.entry(c).or_default().push(a.clone()),
                _ => main_body.push(a.clone()),
            }
        }
        for c in others {
            let b = fresh.fresh("b");
            out.rules.push(Rule { head: Atom::prop(&b), body: split.remove(&c).unwrap_or_default(), pos: r.pos });
            main_body.push(Atom::prop(&b));
        }
        out.rules.push(Rule { head: r.head.clone(), body: main_body, pos: r.pos });
    }
    out
}

/// Interning of intensional and propositional predicates for a tree of `n`
/// nodes: the ground atom `p(v)` has id `p * (n + 1) + v`, and a
/// propositional `p` has id `p * (n + 1) + n`.
#[derive(Clone, Debug)]
pub struct AtomTable {
    pub n: usize,
    pub names: Vec<String>,
    pub index: HashMap<String, usize>,
}

impl AtomTable {
    pub fn for_program(p: &Program, n: usize) -> AtomTable {
        let mut names: Vec<String> = p.all_names().into_iter().collect();
        names.sort();
        let index = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        AtomTable { n, names, index }
    }

    pub fn num_atoms(&self) -> usize {
        self.names.len() * (self.n + 1)
    }

    #[inline]
    pub fn id(&self, pred: usize, node: Option<usize>) -> u32 {
        (pred * (self.n + 1) + node.unwrap_or(self.n)) as u32
    }

    pub fn decode(&self, id: u32) -> (&str, Option<NodeId>) {
        let id = id as usize;
        let (p, v) = (id / (self.n + 1), id % (self.n + 1));
        (&self.names[p], (v < self.n).then_some(NodeId(v)))
    }
}

#[derive(Clone, Copy, Debug)]
enum UnaryCheck {
    Root,
    Leaf,
    LastSibling,
    FirstSibling,
    Label(Option<u32>),
    NotLabel(Option<u32>),
}

impl UnaryCheck {
    fn compile(r: &Relation, t: &Tree) -> UnaryCheck {
        match r {
            Relation::Root => UnaryCheck::Root,
            Relation::Leaf => UnaryCheck::Leaf,
            Relation::LastSibling => UnaryCheck::LastSibling,
            Relation::FirstSibling => UnaryCheck::FirstSibling,
            Relation::Label(l) => UnaryCheck::Label(t.label_id(l)),
            Relation::NotLabel(l) => UnaryCheck::NotLabel(t.label_id(l)),
            _ => unreachable!("binary relation in unary position"),
        }
    }

    #[inline]
    fn holds(self, t: &Tree, v: NodeId) -> bool {
        match self {
            UnaryCheck::Root => v.0 == 0,
            UnaryCheck::Leaf => t.is_leaf(v),
            UnaryCheck::LastSibling => t.is_last_sibling(v),
            UnaryCheck::FirstSibling => t.is_first_sibling(v),
            UnaryCheck::Label(c) => Some(t.label_code(v)) == c,
            UnaryCheck::NotLabel(c) => Some(t.label_code(v)) != c,
        }
    }
}

/// A rule prepared for grounding on one tree.
struct Plan {
    nvars: usize,
    root: usize,
    /// Spanning-tree steps in traversal order: `(relation, from, to, forward)`.
    steps: Vec<(Relation, usize, usize, bool)>,
    /// Binary atoms outside the spanning tree.
    extra: Vec<(Relation, usize, usize)>,
    unary: Vec<(UnaryCheck, usize)>,
    /// Intensional body atoms: `(pred, var)`, var `None` for propositional.
    idb: Vec<(usize, Option<usize>)>,
    head: (usize, Option<usize>),
    /// A binary atom containing every variable, if any.
    guard: Option<(Relation, usize, usize)>,
}

fn plan(r: &Rule, t: &Tree, atoms: &AtomTable) -> Result<Plan, EvalError> {
    let vars = r.vars();
    let var_id: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let nvars = vars.len();
    let mut binary: Vec<(Relation, usize, usize)> = Vec::new();
    let mut unary = Vec::new();
    let mut idb = Vec::new();
    for a in &r.body {
        match &a.pred {
            Pred::Builtin(rel) if rel.is_binary() => {
                if *rel == Relation::Child {
                    return Err(EvalError::Precondition(format!(
                        "atom `{a}` uses `child`, which is not functional from parent to child; normalize the program first"
                    )));
                }
                binary.push((rel.clone(), var_id[a.args[0].as_str()], var_id[a.args[1].as_str()]));
            }
            Pred::Builtin(rel) => unary.push((UnaryCheck::compile(rel, t), var_id[a.args[0].as_str()])),
            Pred::Cat(_) => {
                return Err(EvalError::Precondition(format!("caterpillar atom `{a}` must be normalized away first")))
            }
            Pred::Idb(n) | Pred::Prop(n) => {
                idb.push((atoms.index[n.as_str()], a.args.first().map(|v| var_id[v.as_str()])));
            }
        }
    }
    let head_pred = atoms.index[r.head.pred.name().expect("intensional head")];
    let head_var = r.head.args.first().map(|v| var_id[v.as_str()]);
    let guard = if nvars == 2 {
        binary.iter().find(|(_, a, b)| a != b).cloned()
    } else {
        None
    };
    // Breadth-first spanning tree from the head variable.
    let root = head_var.unwrap_or(0);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (i, (_, a, b)) in binary.iter().enumerate() {
        adj[*a].push(i);
        adj[*b].push(i);
    }
    let mut used = vec![false; binary.len()];
    let mut seen = vec![false; nvars];
    let mut steps = Vec::new();
    if nvars > 0 {
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &i in &adj[v] {
                let (rel, a, b) = &binary[i];
                let (w, forward) = if *a == v { (*b, true) } else { (*a, false) };
                if !seen[w] {
                    seen[w] = true;
                    used[i] = true;
                    steps.push((rel.clone(), v, w, forward));
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(EvalError::Precondition(format!("rule `{r}` is not connected")));
        }
    }
    let extra = binary.iter().zip(&used).filter(|(_, u)| !**u).map(|(b, _)| b.clone()).collect();
    Ok(Plan { nvars, root, steps, extra, unary, idb, head: (head_pred, head_var), guard })
}

impl Plan {
    fn emit(&self, val: &[NodeId], t: &Tree, atoms: &AtomTable, h: &mut HornInstance, body: &mut Vec<u32>) {
        if !self.unary.iter().all(|(c, v)| c.holds(t, val[*v])) {
            return;
        }
        if !self.extra.iter().all(|(rel, a, b)| t.holds_binary(rel, val[*a], val[*b])) {
            return;
        }
        body.clear();
        body.extend(self.idb.iter().map(|&(p, v)| atoms.id(p, v.map(|v| val[v].0))));
        h.add_clause(atoms.id(self.head.0, self.head.1.map(|v| val[v].0)), body);
    }
}

/// Grounds a program whose rules are connected. Every rule yields at most
/// one clause per node of `t`.
pub fn ground(p: &Program, t: &Tree) -> Result<(HornInstance, AtomTable), EvalError> {
    let atoms = AtomTable::for_program(p, t.len());
    let mut h = HornInstance::new(atoms.num_atoms());
    let mut val = Vec::new();
    let mut body = Vec::new();
    for r in &p.rules {
        let plan = plan(r, t, &atoms)?;
        if plan.nvars == 0 {
            val.clear();
            plan.emit(&val, t, &atoms, &mut h, &mut body);
            continue;
        }
        val.clear();
        val.resize(plan.nvars, NodeId(0));
        if let Some((rel, a, b)) = &plan.guard {
            for (x, y) in t.pairs(rel) {
                val[*a] = x;
                val[*b] = y;
                plan.emit(&val, t, &atoms, &mut h, &mut body);
            }
            continue;
        }
        'nodes: for v in t.nodes() {
            val[plan.root] = v;
            for (rel, from, to, forward) in &plan.steps {
                let next = if *forward { t.step_forward(rel, val[*from]) } else { t.step_backward(rel, val[*from]) };
                match next {
                    Some(w) => val[*to] = w,
                    None => continue 'nodes,
                }
            }
            plan.emit(&val, t, &atoms, &mut h, &mut body);
        }
    }
    Ok((h, atoms))
}
