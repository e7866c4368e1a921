//! Query automata: two-way deterministic tree automata with a selection
//! function, over ranked trees ([`RankedQa`]) and unranked trees
//! ([`UnrankedSqa`], with regular up/down languages and stay transitions
//! computed by a two-way string automaton).
//!
//! [`simulate`] runs an automaton directly; [`compile_ranked`] and
//! [`compile_unranked`] translate it into a monadic datalog program whose
//! predicate `query` holds on the selected nodes.

mod compile;
mod nfa;
mod parse;
mod sim;

pub use compile::{compile, compile_ranked, compile_unranked, pair_name, pair_state, Tag};
pub use nfa::{parse_letter_regex, Letter, LetterRegex, Nfa};
pub use parse::parse_qa;
pub use sim::{simulate, simulate_with, Configuration, RunTrace, Schedule, Step, StepKind, DEFAULT_MAX_STEPS};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::datalog::{Diagnostic, Severity};
use crate::tree::{Label, NodeId, RankedAlphabet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QaError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("run exceeded {0} steps")]
    MaxSteps(usize),
    #[error("second stay transition at node {0}")]
    StayTwice(NodeId),
    #[error("stay transition at node {node}: {message}")]
    Stay { node: NodeId, message: String },
    #[error("nondeterminism at node {node}: {message}")]
    Nondeterministic { node: NodeId, message: String },
}

/// Parts shared by ranked and unranked automata. States are indices into
/// `states`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QaCore {
    pub states: Vec<String>,
    pub labels: Vec<Label>,
    pub start: usize,
    pub finals: BTreeSet<usize>,
    /// The `U` half of the partition of `Q × Σ`.
    pub up_pairs: BTreeSet<Letter>,
    /// The `D` half.
    pub down_pairs: BTreeSet<Letter>,
    pub root: BTreeMap<Letter, usize>,
    pub leaf: BTreeMap<Letter, usize>,
    /// Pairs on which the selection function is 1.
    pub select: BTreeSet<Letter>,
}

impl QaCore {
    pub fn state(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn is_up(&self, q: usize, a: &Label) -> bool {
        self.up_pairs.contains(&(q, a.clone()))
    }

    pub fn is_down(&self, q: usize, a: &Label) -> bool {
        self.down_pairs.contains(&(q, a.clone()))
    }

    pub fn selects(&self, q: usize, a: &Label) -> bool {
        self.select.contains(&(q, a.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedQa {
    pub core: QaCore,
    pub alphabet: RankedAlphabet,
    pub up: BTreeMap<Vec<Letter>, usize>,
    /// `(q, a, i) -> q1 … qi`.
    pub down: BTreeMap<(usize, Label, usize), Vec<usize>>,
}

/// One `u · v* · w` branch of a down-transition language.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Branch {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub w: Vec<usize>,
}

impl Branch {
    /// The word of length `m` in the branch, if any.
    pub fn word_of_len(&self, m: usize) -> Option<Vec<usize>> {
        let fixed = self.u.len() + self.w.len();
        if m < fixed {
            return None;
        }
        let rest = m - fixed;
        let reps = if self.v.is_empty() {
            if rest != 0 {
                return None;
            }
            0
        } else {
            if !rest.is_multiple_of(self.v.len()) {
                return None;
            }
            rest / self.v.len()
        };
        let mut out = self.u.clone();
        for _ in 0..reps {
            out.extend_from_slice(&self.v);
        }
        out.extend_from_slice(&self.w);
        Some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    L,
    R,
}

/// A two-way DFA over `Q × Σ` with a selection function into `Q`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TwoDfa {
    pub states: Vec<String>,
    pub start: usize,
    pub finals: BTreeSet<usize>,
    pub delta: BTreeMap<(usize, Letter), (usize, Dir)>,
    pub select: BTreeMap<(usize, Letter), usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stay {
    /// `U_stay`.
    pub word: Nfa,
    pub dfa: TwoDfa,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnrankedSqa {
    pub core: QaCore,
    /// `(q, L_up(q))`.
    pub up: Vec<(usize, Nfa)>,
    pub down: BTreeMap<Letter, Vec<Branch>>,
    pub stay: Option<Stay>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryAutomaton {
    Ranked(RankedQa),
    Unranked(UnrankedSqa),
}

impl QueryAutomaton {
    pub fn core(&self) -> &QaCore {
        match self {
            QueryAutomaton::Ranked(a) => &a.core,
            QueryAutomaton::Unranked(a) => &a.core,
        }
    }
}

/// Lengths up to which down-transition languages are checked for density 1.
const DENSITY_BOUND: usize = 64;

/// Well-formedness diagnostics.
pub fn validate_qa(a: &QueryAutomaton) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let c = a.core();
    let err = |out: &mut Vec<Diagnostic>, m: String| out.push(Diagnostic { severity: Severity::Error, pos: None, message: m });
    let warn =
        |out: &mut Vec<Diagnostic>, m: String| out.push(Diagnostic { severity: Severity::Warning, pos: None, message: m });
    let name = |q: usize| c.states[q].as_str();
    if c.finals.is_empty() {
        err(&mut out, "the set of final states is empty".into());
    }
    for q in 0..c.states.len() {
        for l in &c.labels {
            match (c.is_up(q, l), c.is_down(q, l)) {
                (true, true) => err(&mut out, format!("partition violation: ({},{l}) is in both U and D", name(q))),
                (false, false) => err(&mut out, format!("partition violation: ({},{l}) is in neither U nor D", name(q))),
                _ => {}
            }
        }
    }
    for (q, l) in c.root.keys() {
        if !c.is_up(*q, l) {
            err(&mut out, format!("root transition on ({},{l}) which is not in U", name(*q)));
        }
    }
    for (q, l) in c.leaf.keys() {
        if !c.is_down(*q, l) {
            err(&mut out, format!("leaf transition on ({},{l}) which is not in D", name(*q)));
        }
    }
    for &f in &c.finals {
        for l in &c.labels {
            if c.is_down(f, l) || c.root.contains_key(&(f, l.clone())) {
                warn(
                    &mut out,
                    format!(
                        "final state {} can leave the root on label {l}; the compiled program accepts as soon as \
                         the root reaches a final state",
                        name(f)
                    ),
                );
            }
        }
    }
    match a {
        QueryAutomaton::Ranked(r) => {
            let k = r.alphabet.max_rank();
            for word in r.up.keys() {
                if word.is_empty() || word.len() > k {
                    err(&mut out, format!("up transition on a word of length {} (K = {k})", word.len()));
                }
                for (q, l) in word {
                    if !c.is_up(*q, l) {
                        err(&mut out, format!("up transition reads ({},{l}) which is not in U", name(*q)));
                    }
                }
            }
            for ((q, l, i), word) in &r.down {
                if word.len() != *i {
                    err(
                        &mut out,
                        format!("length violation: down({},{l},{i}) has {} states, expected {i}", name(*q), word.len()),
                    );
                }
                if *i == 0 || *i > k {
                    err(&mut out, format!("down({},{l},{i}): arity outside 1..={k}", name(*q)));
                }
                if !c.is_down(*q, l) {
                    err(&mut out, format!("down transition on ({},{l}) which is not in D", name(*q)));
                }
            }
        }
        QueryAutomaton::Unranked(u) => {
            for ((q, l), branches) in &u.down {
                if !c.is_down(*q, l) {
                    err(&mut out, format!("down transition on ({},{l}) which is not in D", name(*q)));
                }
                for m in 0..=DENSITY_BOUND {
                    let words: BTreeSet<Vec<usize>> = branches.iter().filter_map(|b| b.word_of_len(m)).collect();
                    if words.len() > 1 {
                        err(&mut out, format!("down({},{l}) has {} words of length {m}", name(*q), words.len()));
                        break;
                    }
                }
            }
            let mut nfas: Vec<(String, &Nfa)> =
                u.up.iter().map(|(q, n)| (format!("L_up({})", name(*q)), n)).collect();
            if let Some(s) = &u.stay {
                nfas.push(("U_stay".into(), &s.word));
            }
            for (what, n) in &nfas {
                for s in n.initial.iter().chain(&n.finals) {
                    if *s >= n.num_states {
                        err(&mut out, format!("{what}: state {s} out of range"));
                    }
                }
                for (q, l) in n.letters() {
                    if !c.is_up(*q, l) {
                        err(&mut out, format!("{what} reads ({},{l}) which is not in U", name(*q)));
                    }
                }
            }
            for i in 0..nfas.len() {
                for j in i + 1..nfas.len() {
                    if nfas[i].1.intersects_nonempty(nfas[j].1) {
                        err(&mut out, format!("{} and {} are not disjoint", nfas[i].0, nfas[j].0));
                    }
                }
            }
            if let Some(s) = &u.stay {
                let d = &s.dfa;
                if d.start >= d.states.len() {
                    err(&mut out, "stay automaton has no start state".into());
                }
                for (_, l) in d.delta.keys().chain(d.select.keys()) {
                    if !c.is_up(l.0, &l.1) {
                        warn(&mut out, format!("stay automaton reads ({},{}) which is not in U", name(l.0), l.1));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_words() {
        let b = Branch { u: vec![1], v: vec![2, 3], w: vec![4] };
        assert_eq!(b.word_of_len(2), Some(vec![1, 4]));
        assert_eq!(b.word_of_len(3), None);
        assert_eq!(b.word_of_len(4), Some(vec![1, 2, 3, 4]));
        let fixed = Branch { u: vec![1], v: vec![], w: vec![] };
        assert_eq!(fixed.word_of_len(1), Some(vec![1]));
        assert_eq!(fixed.word_of_len(2), None);
    }
}
