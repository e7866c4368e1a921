//! Random and exhaustive generators for trees, programs and query automata.
//! Used by the differential tests and the examples.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::automata::{
    simulate, validate_qa, Branch, LetterRegex, Nfa, QaCore, QaError, QueryAutomaton, RankedQa, UnrankedSqa,
};
use crate::datalog::{Atom, Pred, Program, Rule, Severity};
use crate::tree::{Label, RankedAlphabet, Relation, Tree};

fn labels_of(names: &[&str]) -> Vec<Label> {
    names.iter().map(|n| Label::new(*n).expect("nonempty label")).collect()
}

/// A random tree with `n` nodes. Each new node becomes the last child of a
/// node on the current rightmost path, which keeps ids in preorder.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, labels: &[&str]) -> Tree {
    assert!(n >= 1 && !labels.is_empty());
    let ls = labels_of(labels);
    let mut lab = Vec::with_capacity(n);
    let mut parents = Vec::with_capacity(n);
    let mut path: Vec<usize> = Vec::new();
    for i in 0..n {
        lab.push(ls.choose(rng).unwrap().clone());
        if i == 0 {
            parents.push(None);
        } else {
            let keep = rng.gen_range(1..=path.len());
            path.truncate(keep);
            parents.push(Some(*path.last().unwrap()));
        }
        path.push(i);
    }
    Tree::from_preorder(&lab, &parents).expect("preorder parents")
}

/// A random tree whose size is drawn from `1..=max_nodes`.
pub fn random_tree_upto<R: Rng>(rng: &mut R, max_nodes: usize, labels: &[&str]) -> Tree {
    let n = rng.gen_range(1..=max_nodes);
    random_tree(rng, n, labels)
}

/// Random full binary tree: every inner node has exactly two children.
pub fn random_binary_tree<R: Rng>(rng: &mut R, max_nodes: usize, labels: &[&str]) -> Tree {
    let ls = labels_of(labels);
    let leaves = max_nodes.max(1).div_ceil(2);
    let k = rng.gen_range(1..=leaves);
    let mut lab = Vec::new();
    let mut parents = Vec::new();
    fn grow<R: Rng>(
        rng: &mut R,
        leaves: usize,
        parent: Option<usize>,
        ls: &[Label],
        lab: &mut Vec<Label>,
        parents: &mut Vec<Option<usize>>,
    ) {
        let id = lab.len();
        lab.push(ls.choose(rng).unwrap().clone());
        parents.push(parent);
        if leaves > 1 {
            let left = rng.gen_range(1..leaves);
            grow(rng, left, Some(id), ls, lab, parents);
            grow(rng, leaves - left, Some(id), ls, lab, parents);
        }
    }
    grow(rng, k, None, &ls, &mut lab, &mut parents);
    Tree::from_preorder(&lab, &parents).expect("preorder parents")
}

/// Complete binary tree of the given depth (depth 0 is a single node).
pub fn complete_binary_tree(depth: usize, label: &str) -> Tree {
    let l = Label::new(label).expect("nonempty label");
    let mut lab = Vec::new();
    let mut parents = Vec::new();
    fn grow(d: usize, parent: Option<usize>, l: &Label, lab: &mut Vec<Label>, parents: &mut Vec<Option<usize>>) {
        let id = lab.len();
        lab.push(l.clone());
        parents.push(parent);
        if d > 0 {
            grow(d - 1, Some(id), l, lab, parents);
            grow(d - 1, Some(id), l, lab, parents);
        }
    }
    grow(depth, None, &l, &mut lab, &mut parents);
    Tree::from_preorder(&lab, &parents).expect("preorder parents")
}

/// Every tree with exactly `n` nodes over `labels`.
pub fn all_trees(n: usize, labels: &[&str]) -> Vec<Tree> {
    let ls = labels_of(labels);
    let mut shapes = Vec::new();
    // A shape is a parent vector in preorder; extend along the rightmost path.
    fn shapes_rec(n: usize, parents: &mut Vec<Option<usize>>, path: &mut Vec<usize>, out: &mut Vec<Vec<Option<usize>>>) {
        if parents.len() == n {
            out.push(parents.clone());
            return;
        }
        let i = parents.len();
        if i == 0 {
            parents.push(None);
            path.push(0);
            shapes_rec(n, parents, path, out);
            path.pop();
            parents.pop();
            return;
        }
        for keep in 1..=path.len() {
            let saved = path.clone();
            path.truncate(keep);
            parents.push(Some(*path.last().unwrap()));
            path.push(i);
            shapes_rec(n, parents, path, out);
            parents.pop();
            *path = saved;
        }
    }
    if n == 0 {
        return Vec::new();
    }
    shapes_rec(n, &mut Vec::new(), &mut Vec::new(), &mut shapes);
    let mut out = Vec::new();
    for shape in shapes {
        let total = ls.len().pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let lab: Vec<Label> = (0..n)
                .map(|_| {
                    let l = ls[c % ls.len()].clone();
                    c /= ls.len();
                    l
                })
                .collect();
            out.push(Tree::from_preorder(&lab, &shape).expect("preorder parents"));
        }
    }
    out
}

/// Every tree with at most `max_nodes` nodes.
pub fn all_trees_upto(max_nodes: usize, labels: &[&str]) -> Vec<Tree> {
    (1..=max_nodes).flat_map(|n| all_trees(n, labels)).collect()
}

/// Knobs for [`random_program`].
#[derive(Clone, Debug)]
pub struct ProgramShape {
    pub max_rules: usize,
    pub idb: usize,
    pub labels: Vec<String>,
    pub binary: Vec<Relation>,
    pub max_body: usize,
    /// Chance that a binary atom links two existing variables.
    pub cycle_chance: f64,
}

impl ProgramShape {
    /// Programs over the unranked signature plus `child` and `lastchild`.
    pub fn unranked() -> Self {
        ProgramShape {
            max_rules: 8,
            idb: 3,
            labels: vec!["a".into(), "b".into()],
            binary: vec![Relation::FirstChild, Relation::NextSibling, Relation::Child, Relation::LastChild],
            max_body: 4,
            cycle_chance: 0.1,
        }
    }

    /// Programs over firstchild and nextsibling only.
    pub fn plain() -> Self {
        ProgramShape { binary: vec![Relation::FirstChild, Relation::NextSibling], ..Self::unranked() }
    }
}

pub fn idb_name(i: usize) -> String {
    format!("p{i}")
}

/// A random safe monadic program with predicates `p0 … p{idb-1}`.
pub fn random_program<R: Rng>(rng: &mut R, shape: &ProgramShape) -> Program {
    let nrules = rng.gen_range(1..=shape.max_rules);
    let mut rules = Vec::with_capacity(nrules);
    let unary = |rng: &mut R| -> Pred {
        match rng.gen_range(0..7) {
            0 => Pred::Builtin(Relation::Root),
            1 => Pred::Builtin(Relation::Leaf),
            2 => Pred::Builtin(Relation::LastSibling),
            3 => Pred::Builtin(Relation::FirstSibling),
            4 => Pred::label(shape.labels.choose(rng).unwrap()),
            5 => Pred::Builtin(Relation::NotLabel(Label::new(shape.labels.choose(rng).unwrap().as_str()).unwrap())),
            _ => Pred::idb(idb_name(rng.gen_range(0..shape.idb))),
        }
    };
    for _ in 0..nrules {
        let mut vars = vec!["X".to_string()];
        let mut body = Vec::new();
        let len = rng.gen_range(1..=shape.max_body);
        for _ in 0..len {
            if shape.binary.is_empty() || rng.gen_bool(0.5) {
                let v = vars.choose(rng).unwrap().clone();
                body.push(Atom::unary(unary(rng), &v));
            } else {
                let rel = shape.binary.choose(rng).unwrap().clone();
                let a = vars.choose(rng).unwrap().clone();
                let b = if vars.len() > 1 && rng.gen_bool(shape.cycle_chance) {
                    vars.choose(rng).unwrap().clone()
                } else {
                    let v = format!("Y{}", vars.len());
                    vars.push(v.clone());
                    v
                };
                if rng.gen_bool(0.5) {
                    body.push(Atom::rel(rel, &[&a, &b]));
                } else {
                    body.push(Atom::rel(rel, &[&b, &a]));
                }
            }
        }
        let head = Atom::idb(&idb_name(rng.gen_range(0..shape.idb)), "X");
        if !body.iter().any(|a| a.args.iter().any(|v| v == "X")) {
            body.push(Atom::unary(unary(rng), "X"));
        }
        rules.push(Rule::new(head, body));
    }
    Program::new(rules)
}

/// Knobs for the automaton generators.
#[derive(Clone, Debug)]
pub struct QaShape {
    pub states: usize,
    pub labels: Vec<String>,
    /// Density of optional transitions.
    pub fill: f64,
}

impl Default for QaShape {
    fn default() -> Self {
        QaShape { states: 4, labels: vec!["a".into(), "b".into()], fill: 0.8 }
    }
}

/// The core with a random partition and a terminal final state. State 0
/// starts; the last state is final, in `U` on every label and has no root
/// transition.
fn random_core<R: Rng>(rng: &mut R, shape: &QaShape) -> QaCore {
    let n = shape.states.max(2);
    let labels = labels_of(&shape.labels.iter().map(String::as_str).collect::<Vec<_>>());
    let mut c = QaCore {
        states: (0..n).map(|i| format!("q{i}")).collect(),
        labels: labels.clone(),
        start: 0,
        finals: BTreeSet::from([n - 1]),
        ..Default::default()
    };
    for q in 0..n {
        for l in &labels {
            let down = q == 0 || (q != n - 1 && rng.gen_bool(0.5));
            if down {
                c.down_pairs.insert((q, l.clone()));
            } else {
                c.up_pairs.insert((q, l.clone()));
            }
        }
    }
    for (q, l) in c.down_pairs.clone() {
        if rng.gen_bool(shape.fill) {
            c.leaf.insert((q, l), rng.gen_range(0..n));
        }
    }
    for (q, l) in c.up_pairs.clone() {
        if q != n - 1 && rng.gen_bool(shape.fill * 0.5) {
            c.root.insert((q, l), rng.gen_range(0..n));
        }
    }
    for q in 0..n {
        for l in &labels {
            if rng.gen_bool(0.3) {
                c.select.insert((q, l.clone()));
            }
        }
    }
    c
}

/// A random ranked automaton over `a:0,2 b:0,2`-style alphabets. May loop
/// or reject; see [`random_terminating_ranked`].
pub fn random_ranked_qa<R: Rng>(rng: &mut R, shape: &QaShape) -> RankedQa {
    let core = random_core(rng, shape);
    let mut alphabet = RankedAlphabet::new();
    for l in &core.labels {
        alphabet.insert(l.clone(), [0, 2]);
    }
    let n = core.states.len();
    let mut down = BTreeMap::new();
    for (q, l) in &core.down_pairs {
        if rng.gen_bool(shape.fill) {
            down.insert((*q, l.clone(), 2), vec![rng.gen_range(0..n), rng.gen_range(0..n)]);
        }
    }
    let ups: Vec<_> = core.up_pairs.iter().cloned().collect();
    let mut up = BTreeMap::new();
    for x in &ups {
        for y in &ups {
            if rng.gen_bool(shape.fill) {
                up.insert(vec![x.clone(), y.clone()], rng.gen_range(0..n));
            }
        }
    }
    RankedQa { core, alphabet, up, down }
}

fn ok_automaton(a: &QueryAutomaton) -> bool {
    validate_qa(a).iter().all(|d| d.severity != Severity::Error)
}

/// Draws ranked automata until one runs to completion (accepting or stuck)
/// on every probe tree within `max_steps`.
pub fn random_terminating_ranked<R: Rng>(rng: &mut R, shape: &QaShape, probes: &[Tree], max_steps: usize) -> RankedQa {
    loop {
        let a = QueryAutomaton::Ranked(random_ranked_qa(rng, shape));
        if ok_automaton(&a) && terminates(&a, probes, max_steps) {
            let QueryAutomaton::Ranked(r) = a else { unreachable!() };
            return r;
        }
    }
}

fn terminates(a: &QueryAutomaton, probes: &[Tree], max_steps: usize) -> bool {
    let mut accepted = false;
    for t in probes {
        match simulate(a, t, max_steps) {
            Ok(run) => accepted |= run.accepted,
            Err(QaError::MaxSteps(_)) => return false,
            Err(_) => return false,
        }
    }
    accepted || probes.is_empty()
}

fn random_word<R: Rng>(rng: &mut R, n: usize, max_len: usize) -> Vec<usize> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..n)).collect()
}

fn random_regex<R: Rng>(rng: &mut R, letters: &[(usize, Label)], depth: usize) -> LetterRegex {
    if depth == 0 || rng.gen_bool(0.35) {
        return LetterRegex::Letter(letters.choose(rng).unwrap().clone());
    }
    match rng.gen_range(0..3) {
        0 => LetterRegex::Concat(vec![random_regex(rng, letters, depth - 1), random_regex(rng, letters, depth - 1)]),
        1 => LetterRegex::Union(vec![random_regex(rng, letters, depth - 1), random_regex(rng, letters, depth - 1)]),
        _ => LetterRegex::Concat(vec![
            random_regex(rng, letters, depth - 1),
            LetterRegex::Star(Box::new(random_regex(rng, letters, depth - 1))),
        ]),
    }
}

/// A random unranked automaton without stay transitions. May violate the
/// well-formedness conditions; see [`random_terminating_unranked`].
pub fn random_unranked_sqa<R: Rng>(rng: &mut R, shape: &QaShape) -> UnrankedSqa {
    let core = random_core(rng, shape);
    let n = core.states.len();
    let mut down = BTreeMap::new();
    for (q, l) in &core.down_pairs {
        if rng.gen_bool(shape.fill) {
            let mut branches = vec![Branch {
                u: random_word(rng, n, 1),
                v: random_word(rng, n, 2),
                w: random_word(rng, n, 1),
            }];
            if rng.gen_bool(0.3) {
                let fixed = random_word(rng, n, 2);
                branches.push(Branch { u: fixed, v: Vec::new(), w: Vec::new() });
            }
            down.insert((*q, l.clone()), branches);
        }
    }
    let letters: Vec<(usize, Label)> = core.up_pairs.iter().cloned().collect();
    let mut up = Vec::new();
    if !letters.is_empty() {
        let targets: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        for q in targets {
            let r = random_regex(rng, &letters, 3);
            up.push((q, Nfa::from_regex(&r, "random")));
        }
    }
    UnrankedSqa { core, up, down, stay: None }
}

/// Draws unranked automata until one is well formed and terminates on every
/// probe tree, accepting at least one of them.
pub fn random_terminating_unranked<R: Rng>(
    rng: &mut R,
    shape: &QaShape,
    probes: &[Tree],
    max_steps: usize,
) -> UnrankedSqa {
    loop {
        let a = QueryAutomaton::Unranked(random_unranked_sqa(rng, shape));
        if ok_automaton(&a) && terminates(&a, probes, max_steps) {
            let QueryAutomaton::Unranked(u) = a else { unreachable!() };
            return u;
        }
    }
}
