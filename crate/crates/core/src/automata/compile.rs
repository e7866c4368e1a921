//! Translation of query automata into monadic datalog.
//!
//! State assignments become pair predicates `st__<q0>__<q>`: node `x` was
//! in state `q` while its parent's most recent state was `q0` (`$` stands
//! for the imaginary parent of the root). With stay transitions, states
//! written by the stay automaton use `sp__<q0>__<q>` instead, so that the
//! children's words before and after the stay are never mixed.

use super::nfa::{Letter, Nfa};
use super::{QaCore, QueryAutomaton, RankedQa, UnrankedSqa};
use crate::datalog::{Atom, Program, Rule};
use crate::tree::{Label, Relation};

/// First component of a pair predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    /// The parent of the root.
    Nabla,
    /// Parent in the given state.
    Pre(usize),
    /// Parent in the given state, after a stay transition at the parent.
    Post(usize),
}

pub fn pair_name(c: &QaCore, tag: Tag, q: usize) -> String {
    match tag {
        Tag::Nabla => format!("st__$__{}", c.states[q]),
        Tag::Pre(p) => format!("st__{}__{}", c.states[p], c.states[q]),
        Tag::Post(p) => format!("sp__{}__{}", c.states[p], c.states[q]),
    }
}

fn tag_name(c: &QaCore, tag: Tag) -> String {
    match tag {
        Tag::Nabla => "$".into(),
        Tag::Pre(p) => c.states[p].clone(),
        Tag::Post(p) => format!("{}__post", c.states[p]),
    }
}

fn lab(a: &Label, x: &str) -> Atom {
    Atom::rel(Relation::Label(a.clone()), &[x])
}

fn rel(r: Relation, x: &str, y: &str) -> Atom {
    Atom::rel(r, &[x, y])
}

fn un(r: Relation, x: &str) -> Atom {
    Atom::rel(r, &[x])
}

struct Out<'a> {
    c: &'a QaCore,
    rules: Vec<Rule>,
}

impl Out<'_> {
    fn pair(&self, tag: Tag, q: usize, x: &str) -> Atom {
        Atom::idb(&pair_name(self.c, tag, q), x)
    }

    fn push(&mut self, head: Atom, body: Vec<Atom>) {
        self.rules.push(Rule::new(head, body));
    }

    fn start(&mut self) {
        let h = self.pair(Tag::Nabla, self.c.start, "X");
        self.push(h, vec![un(Relation::Root, "X")]);
    }

    /// Root, leaf, acceptance and selection rules.
    fn common(&mut self, tags: &[Tag]) {
        let c = self.c;
        for ((q, a), &q2) in &c.root {
            let h = self.pair(Tag::Nabla, q2, "X");
            let b = vec![self.pair(Tag::Nabla, *q, "X"), lab(a, "X"), un(Relation::Root, "X")];
            self.push(h, b);
        }
        for ((q, a), &q2) in &c.leaf {
            for &p in tags {
                let h = self.pair(p, q2, "X");
                let b = vec![self.pair(p, *q, "X"), lab(a, "X"), un(Relation::Leaf, "X")];
                self.push(h, b);
            }
        }
        for &f in &c.finals {
            for &p in tags {
                let b = vec![un(Relation::Root, "X"), self.pair(p, f, "X")];
                self.push(Atom::idb("accept", "X"), b);
            }
        }
        for (q, a) in &c.select {
            for &p in tags {
                let b = vec![self.pair(p, *q, "X"), lab(a, "X"), Atom::idb("accept", "Y")];
                self.push(Atom::idb("query", "X"), b);
            }
        }
    }

    /// Left-to-right NFA pass over the children of a node whose children
    /// carry tag `child`. Marks every child with `bck` when the word is
    /// accepted.
    fn nfa_pass(&mut self, nfa: &Nfa, child: Tag, tmp: &str, bck: &str) {
        let c = self.c;
        let letters: Vec<&Letter> = nfa.letters().into_iter().filter(|(q, a)| c.is_up(*q, a)).collect();
        let tmp_name = |s: usize| format!("{tmp}__{s}");
        for &s0 in &nfa.initial {
            for &(q, a) in &letters {
                for &s in nfa.delta.get(&(s0, (*q, a.clone()))).into_iter().flatten() {
                    let b = vec![rel(Relation::FirstChild, "X0", "X"), self.pair(child, *q, "X"), lab(a, "X")];
                    self.push(Atom::idb(&tmp_name(s), "X"), b);
                }
            }
        }
        for ((s, (q, a)), targets) in &nfa.delta {
            if !c.is_up(*q, a) {
                continue;
            }
            for &s2 in targets {
                let b = vec![
                    Atom::idb(&tmp_name(*s), "X"),
                    rel(Relation::NextSibling, "X", "Y"),
                    self.pair(child, *q, "Y"),
                    lab(a, "Y"),
                ];
                self.push(Atom::idb(&tmp_name(s2), "Y"), b);
            }
        }
        for &f in &nfa.finals {
            let b = vec![Atom::idb(&tmp_name(f), "X"), un(Relation::LastSibling, "X")];
            self.push(Atom::idb(bck, "X"), b);
        }
        let b = vec![rel(Relation::NextSibling, "X", "Y"), Atom::idb(bck, "Y")];
        self.push(Atom::idb(bck, "X"), b);
    }
}

/// Pair predicates of the ranked compilation: `∇` and every state.
fn ranked_tags(c: &QaCore) -> Vec<Tag> {
    std::iter::once(Tag::Nabla).chain((0..c.states.len()).map(Tag::Pre)).collect()
}

/// The program whose predicate `query` holds on the nodes the automaton
/// selects, and `accept` on the root when the run accepts.
///
/// The compiled program accepts as soon as the root reaches a final state,
/// which matches the automaton when final states are terminal at the root
/// (see [`super::validate_qa`]). Up and down rules for arity `m` get a
/// `lastsibling` guard when other arities can occur, so that they only fire
/// on nodes with exactly `m` children.
pub fn compile_ranked(a: &RankedQa) -> Program {
    let c = &a.core;
    let tags = ranked_tags(c);
    let mut out = Out { c, rules: Vec::new() };
    out.start();
    let k = a.alphabet.max_rank();
    let var = |i: usize| format!("X{i}");
    for (word, &q2) in &a.up {
        let m = word.len();
        for &p in &tags {
            for q in 0..c.states.len() {
                let mut body = vec![out.pair(p, q, "X")];
                for i in 1..=m {
                    body.push(rel(Relation::ChildK(i as u32), "X", &var(i)));
                }
                for (i, (qi, ai)) in word.iter().enumerate() {
                    body.push(out.pair(Tag::Pre(q), *qi, &var(i + 1)));
                    body.push(lab(ai, &var(i + 1)));
                }
                if k > m {
                    body.push(un(Relation::LastSibling, &var(m)));
                }
                let h = out.pair(p, q2, "X");
                out.push(h, body);
            }
        }
    }
    for ((q, a_, m), word) in &a.down {
        let other_arity = a.alphabet.arities(a_).is_some_and(|s| s.iter().any(|&j| j > 0 && j != *m));
        for (i, &qi) in word.iter().enumerate() {
            for &p in &tags {
                let xi = var(i + 1);
                let mut body = vec![out.pair(p, *q, "X"), rel(Relation::ChildK(i as u32 + 1), "X", &xi), lab(a_, "X")];
                if other_arity {
                    body.push(rel(Relation::ChildK(*m as u32), "X", "Z"));
                    body.push(un(Relation::LastSibling, "Z"));
                }
                let h = out.pair(Tag::Pre(*q), qi, &xi);
                out.push(h, body);
            }
        }
    }
    out.common(&tags);
    Program::new(out.rules).with_query("query")
}

/// Predicate names of the down-transition encoding, indexed by the parent
/// pair `(q, a)` and the branch number.
struct DownNames {
    base: String,
}

impl DownNames {
    fn utmp(&self, k: usize) -> String {
        format!("utmp__{}__{k}", self.base)
    }
    fn wtmp(&self, k: usize) -> String {
        format!("wtmp__{}__{k}", self.base)
    }
    fn vtmp(&self, k: usize) -> String {
        format!("vtmp__{}__{k}", self.base)
    }
    fn bwtmp(&self) -> String {
        format!("bwtmp__{}", self.base)
    }
    fn succ(&self) -> String {
        format!("succ__{}", self.base)
    }
}

/// The unranked compilation. Down transitions mark the `u`, `v` and `w`
/// regions of each `u·v*·w` branch on the children and commit only when
/// the regions tile the children exactly; up transitions run the NFA of
/// each `L_up(q)` along the children.
pub fn compile_unranked(a: &UnrankedSqa) -> Program {
    let c = &a.core;
    let nq = c.states.len();
    let mut child_tags: Vec<Tag> = (0..nq).map(Tag::Pre).collect();
    if a.stay.is_some() {
        child_tags.extend((0..nq).map(Tag::Post));
    }
    let tags: Vec<Tag> = std::iter::once(Tag::Nabla).chain(child_tags.iter().copied()).collect();
    let mut out = Out { c, rules: Vec::new() };
    out.start();

    for ((q, a_), branches) in &a.down {
        let q = *q;
        for (bi, br) in branches.iter().enumerate() {
            let n = DownNames { base: format!("{}__{}__{}", c.states[q], a_, bi + 1) };
            let (lu, lv, lw) = (br.u.len(), br.v.len(), br.w.len());
            // (a) the |u| leftmost children.
            if lu > 0 {
                for &p in &tags {
                    let b = vec![out.pair(p, q, "X"), rel(Relation::FirstChild, "X", "X1"), lab(a_, "X")];
                    out.push(Atom::idb(&n.utmp(1), "X1"), b);
                }
                for k in 1..lu {
                    let b = vec![Atom::idb(&n.utmp(k), "X"), rel(Relation::NextSibling, "X", "Y")];
                    out.push(Atom::idb(&n.utmp(k + 1), "Y"), b);
                }
            }
            // (b) the |w| rightmost children.
            if lw > 0 {
                for &p in &tags {
                    let b = vec![out.pair(p, q, "X"), rel(Relation::LastChild, "X", "Y"), lab(a_, "X")];
                    out.push(Atom::idb(&n.wtmp(lw), "Y"), b);
                }
                for l in (2..=lw).rev() {
                    let b = vec![Atom::idb(&n.wtmp(l), "X"), rel(Relation::NextSibling, "Y", "X")];
                    out.push(Atom::idb(&n.wtmp(l - 1), "Y"), b);
                }
            }
            // (c) everything before the w region.
            if lw > 0 {
                let b = vec![Atom::idb(&n.wtmp(1), "X"), rel(Relation::NextSibling, "Y", "X")];
                out.push(Atom::idb(&n.bwtmp(), "Y"), b);
            } else {
                for &p in &tags {
                    let b = vec![out.pair(p, q, "X"), rel(Relation::LastChild, "X", "Y"), lab(a_, "X")];
                    out.push(Atom::idb(&n.bwtmp(), "Y"), b);
                }
            }
            let b = vec![Atom::idb(&n.bwtmp(), "X"), rel(Relation::NextSibling, "Y", "X")];
            out.push(Atom::idb(&n.bwtmp(), "Y"), b);
            // (d) repeated v markings after u, inside the region before w.
            if lv > 0 {
                if lu > 0 {
                    let b = vec![
                        Atom::idb(&n.utmp(lu), "X"),
                        rel(Relation::NextSibling, "X", "Y"),
                        Atom::idb(&n.bwtmp(), "Y"),
                    ];
                    out.push(Atom::idb(&n.vtmp(1), "Y"), b);
                } else {
                    for &p in &tags {
                        let b = vec![
                            out.pair(p, q, "X"),
                            rel(Relation::FirstChild, "X", "Y"),
                            lab(a_, "X"),
                            Atom::idb(&n.bwtmp(), "Y"),
                        ];
                        out.push(Atom::idb(&n.vtmp(1), "Y"), b);
                    }
                }
                for m in 1..=lv {
                    let next = if m == lv { 1 } else { m + 1 };
                    let b = vec![
                        Atom::idb(&n.vtmp(m), "X"),
                        rel(Relation::NextSibling, "X", "Y"),
                        Atom::idb(&n.bwtmp(), "Y"),
                    ];
                    out.push(Atom::idb(&n.vtmp(next), "Y"), b);
                }
            }
            // (e) success when u (or a completed v) ends right before w.
            let mut ends: Vec<String> = Vec::new();
            if lu > 0 {
                ends.push(n.utmp(lu));
            }
            if lv > 0 {
                ends.push(n.vtmp(lv));
            }
            for e in &ends {
                let b = if lw > 0 {
                    vec![Atom::idb(e, "X"), rel(Relation::NextSibling, "X", "Y"), Atom::idb(&n.wtmp(1), "Y")]
                } else {
                    vec![Atom::idb(e, "X"), un(Relation::LastSibling, "X")]
                };
                out.push(Atom::idb(&n.succ(), "X"), b);
            }
            if lu == 0 && lw > 0 {
                let b = vec![Atom::idb(&n.wtmp(1), "X"), un(Relation::FirstSibling, "X")];
                out.push(Atom::idb(&n.succ(), "X"), b);
            }
            let b = vec![Atom::idb(&n.succ(), "X"), rel(Relation::NextSibling, "X", "Y")];
            out.push(Atom::idb(&n.succ(), "Y"), b);
            let b = vec![Atom::idb(&n.succ(), "X"), rel(Relation::NextSibling, "Y", "X")];
            out.push(Atom::idb(&n.succ(), "Y"), b);
            // (f) state assignments.
            let regions: [(&[usize], fn(&DownNames, usize) -> String); 3] =
                [(&br.u, DownNames::utmp), (&br.v, DownNames::vtmp), (&br.w, DownNames::wtmp)];
            for (word, name) in regions {
                for (j, &sigma) in word.iter().enumerate() {
                    let b = vec![Atom::idb(&n.succ(), "X"), Atom::idb(&name(&n, j + 1), "X")];
                    let h = out.pair(Tag::Pre(q), sigma, "X");
                    out.push(h, b);
                }
            }
        }
    }

    for (q0, nfa) in &a.up {
        for &ct in &child_tags {
            let (Tag::Pre(q2) | Tag::Post(q2)) = ct else { unreachable!() };
            let base = format!("{}__{}", c.states[*q0], tag_name(c, ct));
            let bck = format!("bck__{base}");
            out.nfa_pass(nfa, ct, &format!("tmp__{base}"), &bck);
            for &p in &tags {
                let b = vec![out.pair(p, q2, "X"), rel(Relation::FirstChild, "X", "Y"), Atom::idb(&bck, "Y")];
                let h = out.pair(p, *q0, "X");
                out.push(h, b);
            }
        }
    }

    if let Some(stay) = &a.stay {
        let d = &stay.dfa;
        for q2 in 0..nq {
            let pre = Tag::Pre(q2);
            let base = c.states[q2].clone();
            let sbck = format!("sbck__{base}");
            out.nfa_pass(&stay.word, pre, &format!("stmp__{base}"), &sbck);
            let b_name = |s: usize| format!("b__{base}__{}", d.states[s]);
            let b = vec![Atom::idb(&sbck, "X"), un(Relation::FirstSibling, "X")];
            out.push(Atom::idb(&b_name(d.start), "X"), b);
            for ((s, (q, a_)), (s2, dir)) in &d.delta {
                if !c.is_up(*q, a_) {
                    continue;
                }
                let step = match dir {
                    super::Dir::R => rel(Relation::NextSibling, "X", "Y"),
                    super::Dir::L => rel(Relation::NextSibling, "Y", "X"),
                };
                let b = vec![Atom::idb(&b_name(*s), "X"), out.pair(pre, *q, "X"), lab(a_, "X"), step];
                out.push(Atom::idb(&b_name(*s2), "Y"), b);
            }
            for ((s, (q, a_)), &q3) in &d.select {
                if !c.is_up(*q, a_) {
                    continue;
                }
                let b = vec![Atom::idb(&b_name(*s), "X"), out.pair(pre, *q, "X"), lab(a_, "X")];
                let h = out.pair(Tag::Post(q2), q3, "X");
                out.push(h, b);
            }
        }
    }

    out.common(&tags);
    Program::new(out.rules).with_query("query")
}

pub fn compile(a: &QueryAutomaton) -> Program {
    match a {
        QueryAutomaton::Ranked(r) => compile_ranked(r),
        QueryAutomaton::Unranked(u) => compile_unranked(u),
    }
}

/// The state `q` named by a pair predicate `st__<p>__<q>` or `sp__<p>__<q>`.
pub fn pair_state(c: &QaCore, name: &str) -> Option<usize> {
    let rest = name.strip_prefix("st__").or_else(|| name.strip_prefix("sp__"))?;
    let (_, q) = rest.rsplit_once("__")?;
    c.state(q)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::automata::{parse_qa, simulate, validate_qa};
    use crate::datalog::{validate, Severity};
    use crate::eval::{evaluate, EvalResult};
    use crate::tree::{parse_term_tree, NodeId};

    const PARITY: &str = include_str!("../../tests/data/parity.qa");
    const ALTERNATE: &str = include_str!("../../tests/data/alternate.qa");

    fn history(c: &QaCore, r: &EvalResult) -> BTreeSet<(NodeId, usize)> {
        let mut out = BTreeSet::new();
        for p in r.predicates() {
            if let Some(q) = pair_state(c, p) {
                out.extend(r.set_of(p).into_iter().map(|n| (n, q)));
            }
        }
        out
    }

    fn agrees(text: &str, trees: &[&str]) {
        let a = parse_qa(text).unwrap();
        assert!(validate_qa(&a).iter().all(|d| d.severity != Severity::Error));
        let p = compile(&a);
        assert!(validate(&p).iter().all(|d| d.severity != Severity::Error));
        for t in trees {
            let t = parse_term_tree(t).unwrap();
            let run = simulate(&a, &t, 10_000).unwrap();
            let r = evaluate(&p, &t).unwrap();
            assert_eq!(r.holds("accept", NodeId::ROOT), run.accepted, "{t:?}");
            assert_eq!(r.set_of("query"), run.query(), "{t:?}");
            assert_eq!(history(a.core(), &r), run.history, "{t:?}");
        }
    }

    #[test]
    fn parity_on_small_tree() {
        let a = parse_qa(PARITY).unwrap();
        let t = parse_term_tree("a(a,a)").unwrap();
        let r = evaluate(&compile(&a), &t).unwrap();
        assert!(r.set_of("query").is_empty());
        assert_eq!(r.nodes_of("accept"), vec![0]);
    }

    #[test]
    fn parity_matches_simulation() {
        agrees(PARITY, &["a", "b", "a(a,a)", "b(a,b)", "a(b(a,a),b)", "b(b(b,b),a(a,b(b,a)))"]);
    }

    #[test]
    fn alternate_matches_simulation() {
        agrees(ALTERNATE, &["a(b,b,b,b)", "a(b,b,b)", "a(b)", "a", "a(b,a)", "a(b,b,b,b,b,b,b)"]);
    }

    #[test]
    fn down_stages_on_four_children() {
        let a = parse_qa(ALTERNATE).unwrap();
        let t = parse_term_tree("a(b,b,b,b)").unwrap();
        let r = evaluate(&compile(&a), &t).unwrap();
        let on = |p: &str| r.nodes_of(p);
        assert_eq!(on("wtmp__q__a__2__1"), vec![4]);
        assert_eq!(on("bwtmp__q__a__1"), vec![1, 2, 3, 4]);
        assert_eq!(on("bwtmp__q__a__2"), vec![1, 2, 3]);
        assert_eq!(on("vtmp__q__a__1__1"), vec![1, 3]);
        assert_eq!(on("vtmp__q__a__1__2"), vec![2, 4]);
        assert_eq!(on("vtmp__q__a__2__1"), vec![1, 3]);
        assert_eq!(on("vtmp__q__a__2__2"), vec![2]);
        assert_eq!(on("succ__q__a__1"), vec![1, 2, 3, 4]);
        assert!(on("succ__q__a__2").is_empty());
        assert_eq!(on("st__q__q1"), vec![1, 3]);
        assert_eq!(on("st__q__q0"), vec![2, 4]);
        assert_eq!(on("query"), vec![1, 3]);
    }

    #[test]
    fn stay_transitions() {
        // The stay automaton flips every child from g to h; the root then
        // accepts on a word of h only.
        let text = "\
[kind]
unranked
[states]
s g h f
[alphabet]
a b
[start]
s
[final]
f
[partition]
D: s,*
U: g,* h,* f,*
[down]
s,a -> | s* |
[leaf]
s,b -> g
[up]
f <- h,b+
[stay]
word: g,b+
states: r
start: r
final: r
r,g,b -> r R
select: r,g,b -> h
[select]
h,b
";
        agrees(text, &["a(b)", "a(b,b,b)", "a(b,a(b,b),b)"]);
        let a = parse_qa(text).unwrap();
        let t = parse_term_tree("a(b,b)").unwrap();
        let r = evaluate(&compile(&a), &t).unwrap();
        assert_eq!(r.nodes_of("sp__s__h"), vec![1, 2]);
        assert_eq!(r.nodes_of("query"), vec![1, 2]);
    }
}
