//! Direct simulation of query automata runs.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::nfa::Letter;
use super::{Dir, QaCore, QaError, QueryAutomaton, Stay};
use crate::tree::{NodeId, Tree};

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Which enabled node moves next. Runs are schedule independent, so every
/// choice gives the same selection, acceptance and per-node state sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    LowestId,
    HighestId,
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Down,
    Up,
    Root,
    Leaf,
    Stay,
}

/// One transition: `node` is where it happens (the parent for up and stay
/// transitions), `left` the nodes leaving the cut, `assigned` the new states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub node: NodeId,
    pub left: Vec<NodeId>,
    pub assigned: Vec<(NodeId, usize)>,
}

/// A cut with its state assignment.
pub type Configuration = BTreeMap<NodeId, usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTrace {
    pub start: usize,
    pub steps: Vec<Step>,
    /// The last configuration.
    pub cut: Configuration,
    /// Nodes selected in some configuration of the run.
    pub selected: BTreeSet<NodeId>,
    pub accepted: bool,
    /// Every `(node, state)` assignment made during the run.
    pub history: BTreeSet<(NodeId, usize)>,
    /// States of each node in the order they were assigned.
    pub sequences: Vec<Vec<usize>>,
}

impl RunTrace {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Selected nodes if the run is accepting, else nothing.
    pub fn query(&self) -> BTreeSet<NodeId> {
        if self.accepted {
            self.selected.clone()
        } else {
            BTreeSet::new()
        }
    }

    /// Replays the steps: `c0, c1, …, c_m`.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut cur = Configuration::from([(NodeId::ROOT, self.start)]);
        let mut out = vec![cur.clone()];
        for s in &self.steps {
            for n in &s.left {
                cur.remove(n);
            }
            for &(n, q) in &s.assigned {
                cur.insert(n, q);
            }
            out.push(cur.clone());
        }
        out
    }
}

enum Move {
    Down(Vec<usize>),
    Up(usize),
    Root(usize),
    Leaf(usize),
    Stay(Vec<usize>),
}

struct Run<'a> {
    a: &'a QueryAutomaton,
    t: &'a Tree,
    state: Vec<Option<usize>>,
    stayed: Vec<bool>,
}

impl Run<'_> {
    fn core(&self) -> &QaCore {
        self.a.core()
    }

    fn enabled(&self, n: NodeId) -> Result<Option<Move>, QaError> {
        let c = self.core();
        let t = self.t;
        let a = t.label(n);
        if let Some(q) = self.state[n.0] {
            if c.is_down(q, a) {
                if t.is_leaf(n) {
                    return Ok(c.leaf.get(&(q, a.clone())).map(|&q2| Move::Leaf(q2)));
                }
                let m = t.child_count(n);
                return Ok(match self.a {
                    QueryAutomaton::Ranked(r) => r.down.get(&(q, a.clone(), m)).map(|w| Move::Down(w.clone())),
                    QueryAutomaton::Unranked(u) => {
                        let words: BTreeSet<Vec<usize>> = u
                            .down
                            .get(&(q, a.clone()))
                            .into_iter()
                            .flatten()
                            .filter_map(|b| b.word_of_len(m))
                            .collect();
                        if words.len() > 1 {
                            return Err(QaError::Nondeterministic {
                                node: n,
                                message: format!("{} down words of length {m}", words.len()),
                            });
                        }
                        words.into_iter().next().map(Move::Down)
                    }
                });
            }
            if c.is_up(q, a) && n == t.root() {
                return Ok(c.root.get(&(q, a.clone())).map(|&q2| Move::Root(q2)));
            }
            return Ok(None);
        }
        if t.is_leaf(n) {
            return Ok(None);
        }
        let mut word: Vec<Letter> = Vec::with_capacity(t.child_count(n));
        for ch in t.children(n) {
            let Some(q) = self.state[ch.0] else { return Ok(None) };
            let l = t.label(ch);
            if !c.is_up(q, l) {
                return Ok(None);
            }
            word.push((q, l.clone()));
        }
        match self.a {
            QueryAutomaton::Ranked(r) => Ok(r.up.get(&word).map(|&q| Move::Up(q))),
            QueryAutomaton::Unranked(u) => {
                let targets: Vec<usize> = u.up.iter().filter(|(_, nfa)| nfa.accepts(&word)).map(|(q, _)| *q).collect();
                if targets.len() > 1 {
                    return Err(QaError::Nondeterministic {
                        node: n,
                        message: format!("{} up languages contain the children's word", targets.len()),
                    });
                }
                if let Some(&q) = targets.first() {
                    return Ok(Some(Move::Up(q)));
                }
                match &u.stay {
                    Some(stay) if stay.word.accepts(&word) => {
                        if self.stayed[n.0] {
                            return Err(QaError::StayTwice(n));
                        }
                        run_two_dfa(stay, &word).map(Move::Stay).map(Some).map_err(|message| QaError::Stay { node: n, message })
                    }
                    _ => Ok(None),
                }
            }
        }
    }
}

/// Runs the stay automaton on `word`, returning the selected state of every
/// position.
fn run_two_dfa(stay: &Stay, word: &[Letter]) -> Result<Vec<usize>, String> {
    let d = &stay.dfa;
    let m = word.len();
    let mut out: Vec<Option<usize>> = vec![None; m];
    let mut s = d.start;
    let mut pos = 0usize;
    let mut seen = BTreeSet::new();
    loop {
        if !seen.insert((s, pos)) {
            return Err("two-way automaton does not halt".into());
        }
        let key = (s, word[pos].clone());
        if let Some(&q) = d.select.get(&key) {
            match out[pos] {
                Some(p) if p != q => return Err(format!("position {} assigned two states", pos + 1)),
                _ => out[pos] = Some(q),
            }
        }
        let Some(&(s2, dir)) = d.delta.get(&key) else { break };
        s = s2;
        match dir {
            Dir::L if pos == 0 => break,
            Dir::R if pos + 1 == m => break,
            Dir::L => pos -= 1,
            Dir::R => pos += 1,
        }
    }
    if !d.finals.contains(&s) {
        return Err(format!("two-way automaton halts in non-final state {}", d.states[s]));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, q)| q.ok_or_else(|| format!("position {} left unassigned", i + 1)))
        .collect()
}

pub fn simulate(a: &QueryAutomaton, t: &Tree, max_steps: usize) -> Result<RunTrace, QaError> {
    simulate_with(a, t, max_steps, Schedule::LowestId)
}

pub fn simulate_with(a: &QueryAutomaton, t: &Tree, max_steps: usize, schedule: Schedule) -> Result<RunTrace, QaError> {
    let c = a.core();
    let n = t.len();
    let mut run = Run { a, t, state: vec![None; n], stayed: vec![false; n] };
    let root = t.root();
    run.state[root.0] = Some(c.start);
    let mut trace = RunTrace {
        start: c.start,
        steps: Vec::new(),
        cut: Configuration::new(),
        selected: BTreeSet::new(),
        accepted: false,
        history: BTreeSet::from([(root, c.start)]),
        sequences: vec![Vec::new(); n],
    };
    trace.sequences[root.0].push(c.start);
    if c.selects(c.start, t.label(root)) {
        trace.selected.insert(root);
    }
    let mut rng = match schedule {
        Schedule::Random(seed) => Some(StdRng::seed_from_u64(seed)),
        _ => None,
    };
    loop {
        let picked = match schedule {
            Schedule::LowestId => first_enabled(&run, t.nodes())?,
            Schedule::HighestId => first_enabled(&run, t.nodes().rev())?,
            Schedule::Random(_) => {
                let mut all = Vec::new();
                for v in t.nodes() {
                    if let Some(m) = run.enabled(v)? {
                        all.push((v, m));
                    }
                }
                if all.is_empty() {
                    None
                } else {
                    let i = rng.as_mut().unwrap().gen_range(0..all.len());
                    Some(all.swap_remove(i))
                }
            }
        };
        let Some((v, mv)) = picked else { break };
        if trace.steps.len() >= max_steps {
            return Err(QaError::MaxSteps(max_steps));
        }
        let step = match mv {
            Move::Down(word) => {
                Step { kind: StepKind::Down, node: v, left: vec![v], assigned: t.children(v).zip(word).collect() }
            }
            Move::Up(q) => Step { kind: StepKind::Up, node: v, left: t.children(v).collect(), assigned: vec![(v, q)] },
            Move::Root(q) => Step { kind: StepKind::Root, node: v, left: vec![], assigned: vec![(v, q)] },
            Move::Leaf(q) => Step { kind: StepKind::Leaf, node: v, left: vec![], assigned: vec![(v, q)] },
            Move::Stay(word) => {
                run.stayed[v.0] = true;
                Step { kind: StepKind::Stay, node: v, left: vec![], assigned: t.children(v).zip(word).collect() }
            }
        };
        for x in &step.left {
            run.state[x.0] = None;
        }
        for &(x, q) in &step.assigned {
            run.state[x.0] = Some(q);
            trace.history.insert((x, q));
            trace.sequences[x.0].push(q);
            if c.selects(q, t.label(x)) {
                trace.selected.insert(x);
            }
        }
        trace.steps.push(step);
    }
    trace.cut = t.nodes().filter_map(|v| run.state[v.0].map(|q| (v, q))).collect();
    trace.accepted = trace.cut.len() == 1 && trace.cut.get(&root).is_some_and(|q| c.finals.contains(q));
    Ok(trace)
}

fn first_enabled(run: &Run, order: impl Iterator<Item = NodeId>) -> Result<Option<(NodeId, Move)>, QaError> {
    for v in order {
        if let Some(m) = run.enabled(v)? {
            return Ok(Some((v, m)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_qa;
    use crate::tree::parse_term_tree;

    #[test]
    fn single_leaf_accepts_in_one_step() {
        let a = parse_qa(
            "[kind]\nranked\n[states]\ns f\n[alphabet]\na:0\n[start]\ns\n[final]\nf\n\
             [partition]\nD: s,a\nU: f,a\n[leaf]\ns,a -> f\n",
        )
        .unwrap();
        let t = parse_term_tree("a").unwrap();
        let r = simulate(&a, &t, 10).unwrap();
        assert_eq!(r.step_count(), 1);
        assert_eq!(r.steps[0].kind, StepKind::Leaf);
        assert!(r.accepted);
    }

    #[test]
    fn stuck_run_rejects() {
        let a = parse_qa(
            "[kind]\nranked\n[states]\ns f\n[alphabet]\na:0,1\n[start]\ns\n[final]\nf\n\
             [partition]\nD: s,a\nU: f,a\n[leaf]\ns,a -> f\n[select]\nf,a\n",
        )
        .unwrap();
        let t = parse_term_tree("a(a)").unwrap();
        let r = simulate(&a, &t, 10).unwrap();
        assert!(!r.accepted);
        assert!(r.query().is_empty());
    }

    #[test]
    fn step_cap() {
        let a = parse_qa(
            "[kind]\nranked\n[states]\ns f\n[alphabet]\na:1\n[start]\ns\n[final]\nf\n\
             [partition]\nD: s,a\nU: f,a\n[down]\ns,a,1 -> f\n[up]\nf,a -> s\n",
        )
        .unwrap();
        let t = parse_term_tree("a(a)").unwrap();
        assert_eq!(simulate(&a, &t, 100), Err(QaError::MaxSteps(100)));
    }
}
