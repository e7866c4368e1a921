//! Caterpillar expressions: regular expressions over tree axes with unary
//! tests and inversion.
//!
//! Text syntax, loosest binding first: `a | b`, `a . b`, then postfix `*`,
//! `+` and `^-1`. Atoms are `firstchild`, `nextsibling`, `child_<k>`,
//! `child` (sugar for `firstchild.nextsibling*`), `eps`, the unary tests
//! `root`, `leaf`, `firstsibling`, `lastsibling`, `label_<l>`,
//! `not_label_<l>`, `label('<l>')` and `not_label('<l>')`, and parentheses.

use std::collections::BTreeSet;
use std::fmt;

use crate::datalog::{Atom, FreshNames, Pred, Program, Rule};
use crate::tree::{Label, NodeId, Relation, Tree};

/// A navigation step of a caterpillar expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    FirstChild,
    NextSibling,
    ChildK(u32),
}

impl Axis {
    pub fn relation(self) -> Relation {
        match self {
            Axis::FirstChild => Relation::FirstChild,
            Axis::NextSibling => Relation::NextSibling,
            Axis::ChildK(k) => Relation::ChildK(k),
        }
    }

    pub fn from_relation(r: &Relation) -> Option<Axis> {
        match r {
            Relation::FirstChild => Some(Axis::FirstChild),
            Relation::NextSibling => Some(Axis::NextSibling),
            Relation::ChildK(k) => Some(Axis::ChildK(*k)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CatExpr {
    Step { axis: Axis, inverse: bool },
    /// Identity restricted to a unary relation.
    Test(Relation),
    Eps,
    Concat(Box<CatExpr>, Box<CatExpr>),
    Union(Box<CatExpr>, Box<CatExpr>),
    Star(Box<CatExpr>),
    Inv(Box<CatExpr>),
}

impl CatExpr {
    pub fn step(axis: Axis) -> CatExpr {
        CatExpr::Step { axis, inverse: false }
    }

    pub fn step_inv(axis: Axis) -> CatExpr {
        CatExpr::Step { axis, inverse: true }
    }

    pub fn concat(self, other: CatExpr) -> CatExpr {
        CatExpr::Concat(Box::new(self), Box::new(other))
    }

    pub fn union(self, other: CatExpr) -> CatExpr {
        CatExpr::Union(Box::new(self), Box::new(other))
    }

    pub fn star(self) -> CatExpr {
        CatExpr::Star(Box::new(self))
    }

    /// `E+ = E.E*`
    pub fn plus(self) -> CatExpr {
        self.clone().concat(self.star())
    }

    pub fn inv(self) -> CatExpr {
        CatExpr::Inv(Box::new(self))
    }

    /// `firstchild.nextsibling*`
    pub fn child() -> CatExpr {
        CatExpr::step(Axis::FirstChild).concat(CatExpr::step(Axis::NextSibling).star())
    }

    /// `nextsibling*`
    pub fn nextsibling_star() -> CatExpr {
        CatExpr::step(Axis::NextSibling).star()
    }

    /// Document order: `child+ | (child^-1)*.nextsibling+.child*`.
    pub fn doc_order() -> CatExpr {
        let c = CatExpr::child();
        c.clone().plus().union(
            c.clone()
                .inv()
                .star()
                .concat(CatExpr::step(Axis::NextSibling).plus())
                .concat(c.star()),
        )
    }

    /// `doc_order | eps | doc_order^-1`, the total relation on nodes.
    pub fn total_unranked() -> CatExpr {
        let d = CatExpr::doc_order();
        d.clone().union(CatExpr::Eps).union(d.inv())
    }

    /// `up*.down*` over `child_1..child_k`, total on trees of rank at most `k`.
    pub fn total_ranked(k: u32) -> CatExpr {
        let down = CatExpr::any_child_k(k);
        down.clone().inv().star().concat(down.star())
    }

    /// `child_1 | ... | child_k` (`eps` when k is 0).
    pub fn any_child_k(k: u32) -> CatExpr {
        let mut it = (1..=k).map(|i| CatExpr::step(Axis::ChildK(i)));
        match it.next() {
            None => CatExpr::Eps,
            Some(first) => it.fold(first, CatExpr::union),
        }
    }

    /// Number of operators and atoms.
    pub fn size(&self) -> usize {
        match self {
            CatExpr::Step { .. } | CatExpr::Test(_) | CatExpr::Eps => 1,
            CatExpr::Concat(a, b) | CatExpr::Union(a, b) => 1 + a.size() + b.size(),
            CatExpr::Star(a) | CatExpr::Inv(a) => 1 + a.size(),
        }
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let CatExpr::Test(Relation::Label(l) | Relation::NotLabel(l)) = e {
                out.insert(l.clone());
            }
        });
        out
    }

    pub fn max_child_k(&self) -> u32 {
        let mut k = 0;
        self.visit(&mut |e| {
            if let CatExpr::Step { axis: Axis::ChildK(j), .. } = e {
                k = k.max(*j);
            }
        });
        k
    }

    fn visit(&self, f: &mut impl FnMut(&CatExpr)) {
        f(self);
        match self {
            CatExpr::Concat(a, b) | CatExpr::Union(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            CatExpr::Star(a) | CatExpr::Inv(a) => a.visit(f),
            _ => {}
        }
    }

    pub fn parse(text: &str) -> Result<CatExpr, String> {
        let toks = lex(text)?;
        let mut p = CatParser { toks, i: 0 };
        let e = p.union()?;
        if p.i != p.toks.len() {
            return Err(format!("unexpected `{}` in caterpillar expression", p.toks[p.i]));
        }
        Ok(e)
    }
}

/// Pushes inversion down to the atoms using
/// `(E.F)^-1 = F^-1.E^-1`, `(E|F)^-1 = E^-1|F^-1`, `(E*)^-1 = (E^-1)*` and
/// `(E^-1)^-1 = E`. Unary tests and `eps` are their own inverses.
pub fn invert(e: &CatExpr) -> CatExpr {
    push(e, false)
}

fn push(e: &CatExpr, flip: bool) -> CatExpr {
    match e {
        CatExpr::Step { axis, inverse } => CatExpr::Step { axis: *axis, inverse: *inverse != flip },
        CatExpr::Test(_) | CatExpr::Eps => e.clone(),
        CatExpr::Concat(a, b) => {
            if flip {
                push(b, true).concat(push(a, true))
            } else {
                push(a, false).concat(push(b, false))
            }
        }
        CatExpr::Union(a, b) => push(a, flip).union(push(b, flip)),
        CatExpr::Star(a) => push(a, flip).star(),
        CatExpr::Inv(a) => push(a, !flip),
    }
}

// ---- text syntax ----

#[derive(Clone, Debug, PartialEq)]
enum CTok {
    Name(String),
    Quoted(String),
    Dot,
    Bar,
    Star,
    Plus,
    InvMark,
    LParen,
    RParen,
}

impl fmt::Display for CTok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CTok::Name(n) => f.write_str(n),
            CTok::Quoted(q) => write!(f, "'{q}'"),
            CTok::Dot => f.write_str("."),
            CTok::Bar => f.write_str("|"),
            CTok::Star => f.write_str("*"),
            CTok::Plus => f.write_str("+"),
            CTok::InvMark => f.write_str("^-1"),
            CTok::LParen => f.write_str("("),
            CTok::RParen => f.write_str(")"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<CTok>, String> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '.' => {
                it.next();
                out.push(CTok::Dot);
            }
            '|' => {
                it.next();
                out.push(CTok::Bar);
            }
            '*' => {
                it.next();
                out.push(CTok::Star);
            }
            '+' => {
                it.next();
                out.push(CTok::Plus);
            }
            '(' => {
                it.next();
                out.push(CTok::LParen);
            }
            ')' => {
                it.next();
                out.push(CTok::RParen);
            }
            '^' => {
                if text[i..].starts_with("^-1") {
                    for _ in 0..3 {
                        it.next();
                    }
                    out.push(CTok::InvMark);
                } else {
                    return Err("expected `^-1`".into());
                }
            }
            '\'' => {
                it.next();
                let mut s = String::new();
                loop {
                    match it.next() {
                        Some((_, '\'')) => break,
                        Some((_, ch)) => s.push(ch),
                        None => return Err("unterminated quoted label".into()),
                    }
                }
                out.push(CTok::Quoted(s));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, ch)) = it.peek() {
                    if ch.is_alphanumeric() || ch == '_' || ch == '-' || ch == ':' || ch == '#' {
                        s.push(ch);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(CTok::Name(s));
            }
            other => return Err(format!("unexpected character `{other}` in caterpillar expression")),
        }
    }
    Ok(out)
}

struct CatParser {
    toks: Vec<CTok>,
    i: usize,
}

impl CatParser {
    fn peek(&self) -> Option<&CTok> {
        self.toks.get(self.i)
    }

    fn union(&mut self) -> Result<CatExpr, String> {
        let mut e = self.concat()?;
        while self.peek() == Some(&CTok::Bar) {
            self.i += 1;
            e = e.union(self.concat()?);
        }
        Ok(e)
    }

    fn concat(&mut self) -> Result<CatExpr, String> {
        let mut e = self.postfix()?;
        while self.peek() == Some(&CTok::Dot) {
            self.i += 1;
            e = e.concat(self.postfix()?);
        }
        Ok(e)
    }

    fn postfix(&mut self) -> Result<CatExpr, String> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Some(CTok::Star) => e = e.star(),
                Some(CTok::Plus) => e = e.plus(),
                Some(CTok::InvMark) => e = e.inv(),
                _ => return Ok(e),
            }
            self.i += 1;
        }
    }

    fn atom(&mut self) -> Result<CatExpr, String> {
        let tok = self.peek().cloned().ok_or("unexpected end of caterpillar expression")?;
        self.i += 1;
        match tok {
            CTok::LParen => {
                let e = self.union()?;
                if self.peek() != Some(&CTok::RParen) {
                    return Err("expected `)`".into());
                }
                self.i += 1;
                Ok(e)
            }
            CTok::Name(n) => {
                if n == "eps" {
                    return Ok(CatExpr::Eps);
                }
                if n == "child" {
                    return Ok(CatExpr::child());
                }
                if n == "label" || n == "not_label" {
                    let ok = self.peek() == Some(&CTok::LParen)
                        && matches!(self.toks.get(self.i + 1), Some(CTok::Quoted(_)))
                        && self.toks.get(self.i + 2) == Some(&CTok::RParen);
                    if !ok {
                        return Err(format!("expected `{n}('...')`"));
                    }
                    let Some(CTok::Quoted(l)) = self.toks.get(self.i + 1).cloned() else { unreachable!() };
                    self.i += 3;
                    let l = Label::new(l).map_err(|e| e.to_string())?;
                    return Ok(CatExpr::Test(if n == "label" { Relation::Label(l) } else { Relation::NotLabel(l) }));
                }
                match Relation::from_name(&n) {
                    Some(r) => match Axis::from_relation(&r) {
                        Some(a) => Ok(CatExpr::step(a)),
                        None if !r.is_binary() => Ok(CatExpr::Test(r)),
                        None => Err(format!("relation `{n}` is not a caterpillar axis")),
                    },
                    None => Err(format!("unknown relation `{n}` in caterpillar expression")),
                }
            }
            other => Err(format!("unexpected `{other}` in caterpillar expression")),
        }
    }
}

fn fmt_test(r: &Relation, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let plain = |l: &Label| l.as_str().chars().all(|c| c.is_alphanumeric() || "_-:#".contains(c));
    match r {
        Relation::Label(l) if !plain(l) => write!(f, "label('{l}')"),
        Relation::NotLabel(l) if !plain(l) => write!(f, "not_label('{l}')"),
        _ => write!(f, "{r}"),
    }
}

fn prec(e: &CatExpr) -> u8 {
    match e {
        CatExpr::Union(..) => 0,
        CatExpr::Concat(..) => 1,
        _ => 2,
    }
}

fn fmt_at(e: &CatExpr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        fmt_at(e, 0, f)?;
        return write!(f, ")");
    }
    match e {
        CatExpr::Step { axis, inverse } => {
            write!(f, "{}", axis.relation())?;
            if *inverse {
                f.write_str("^-1")?;
            }
            Ok(())
        }
        CatExpr::Test(r) => fmt_test(r, f),
        CatExpr::Eps => f.write_str("eps"),
        CatExpr::Union(a, b) => {
            fmt_at(a, 0, f)?;
            f.write_str("|")?;
            fmt_at(b, 1, f)
        }
        CatExpr::Concat(a, b) => {
            fmt_at(a, 1, f)?;
            f.write_str(".")?;
            fmt_at(b, 2, f)
        }
        CatExpr::Star(a) => {
            fmt_postfix_operand(a, f)?;
            f.write_str("*")
        }
        CatExpr::Inv(a) => {
            fmt_postfix_operand(a, f)?;
            f.write_str("^-1")
        }
    }
}

fn fmt_postfix_operand(a: &CatExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // An inverted step already carries a postfix mark; parenthesize to keep
    // `(firstchild^-1)*` unambiguous to the reader.
    let atomic = matches!(a, CatExpr::Step { inverse: false, .. } | CatExpr::Test(_) | CatExpr::Eps);
    if atomic {
        fmt_at(a, 2, f)
    } else {
        f.write_str("(")?;
        fmt_at(a, 0, f)?;
        f.write_str(")")
    }
}

impl fmt::Display for CatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_at(self, 0, f)
    }
}

// ---- automata ----

/// Transition label of an [`EpsNfa`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Eps,
    Step { axis: Axis, inverse: bool },
    Test(Relation),
}

/// Nondeterministic automaton with ε-transitions over axis steps and tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsNfa {
    pub states: usize,
    pub start: usize,
    pub finals: Vec<usize>,
    pub transitions: Vec<(usize, Sym, usize)>,
}

impl EpsNfa {
    /// Thompson construction on the inversion-free form of `e`.
    pub fn thompson(e: &CatExpr) -> EpsNfa {
        let e = invert(e);
        let mut nfa = EpsNfa { states: 0, start: 0, finals: Vec::new(), transitions: Vec::new() };
        let (s, f) = nfa.build(&e);
        nfa.start = s;
        nfa.finals = vec![f];
        nfa
    }

    fn new_state(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    fn build(&mut self, e: &CatExpr) -> (usize, usize) {
        match e {
            CatExpr::Step { axis, inverse } => {
                let (s, f) = (self.new_state(), self.new_state());
                self.transitions.push((s, Sym::Step { axis: *axis, inverse: *inverse }, f));
                (s, f)
            }
            CatExpr::Test(r) => {
                let (s, f) = (self.new_state(), self.new_state());
                self.transitions.push((s, Sym::Test(r.clone()), f));
                (s, f)
            }
            CatExpr::Eps => {
                let s = self.new_state();
                (s, s)
            }
            CatExpr::Concat(a, b) => {
                let (s1, f1) = self.build(a);
                let (s2, f2) = self.build(b);
                self.transitions.push((f1, Sym::Eps, s2));
                (s1, f2)
            }
            CatExpr::Union(a, b) => {
                let (s, f) = (self.new_state(), self.new_state());
                let (s1, f1) = self.build(a);
                let (s2, f2) = self.build(b);
                self.transitions.push((s, Sym::Eps, s1));
                self.transitions.push((s, Sym::Eps, s2));
                self.transitions.push((f1, Sym::Eps, f));
                self.transitions.push((f2, Sym::Eps, f));
                (s, f)
            }
            CatExpr::Star(a) => {
                let s = self.new_state();
                let (s1, f1) = self.build(a);
                self.transitions.push((s, Sym::Eps, s1));
                self.transitions.push((f1, Sym::Eps, s));
                (s, s)
            }
            CatExpr::Inv(a) => self.build(&invert(&a.clone().inv())),
        }
    }

    /// Image of `sources` under the automaton's relation, by search over
    /// (state, node) pairs.
    pub fn image(&self, t: &Tree, sources: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut out_edges: Vec<Vec<(Sym, usize)>> = vec![Vec::new(); self.states];
        for (a, s, b) in &self.transitions {
            out_edges[*a].push((s.clone(), *b));
        }
        let n = t.len();
        let mut seen = vec![false; self.states * n];
        let mut stack: Vec<(usize, NodeId)> = Vec::new();
        for &x in sources {
            stack.push((self.start, x));
        }
        let mut out = BTreeSet::new();
        while let Some((q, x)) = stack.pop() {
            if std::mem::replace(&mut seen[q * n + x.0], true) {
                continue;
            }
            if self.finals.contains(&q) {
                out.insert(x);
            }
            for (sym, q2) in &out_edges[q] {
                let next = match sym {
                    Sym::Eps => Some(x),
                    Sym::Test(r) => t.holds_unary(r, x).then_some(x),
                    Sym::Step { axis, inverse: false } => t.step_forward(&axis.relation(), x),
                    Sym::Step { axis, inverse: true } => t.step_backward(&axis.relation(), x),
                };
                if let Some(y) = next {
                    stack.push((*q2, y));
                }
            }
        }
        out
    }
}

/// Emits one rule per automaton component: a start rule from `p0`, one rule
/// per transition and one final rule into `target`. State predicates are
/// drawn from `fresh`.
pub fn nfa_to_rules(nfa: &EpsNfa, p0: &Pred, target: &str, fresh: &mut FreshNames) -> Vec<Rule> {
    let names: Vec<String> = (0..nfa.states).map(|_| fresh.fresh("q")).collect();
    let q = |i: usize| Atom::idb(&names[i], "X");
    let mut rules = vec![Rule::new(q(nfa.start), vec![Atom::unary(p0.clone(), "X")])];
    for (a, sym, b) in &nfa.transitions {
        let body = match sym {
            Sym::Eps => vec![q(*a)],
            Sym::Test(r) => vec![q(*a), Atom::rel(r.clone(), &["X"])],
            Sym::Step { axis, inverse: false } => {
                vec![Atom::idb(&names[*a], "X0"), Atom::rel(axis.relation(), &["X0", "X"])]
            }
            Sym::Step { axis, inverse: true } => {
                vec![Atom::idb(&names[*a], "X0"), Atom::rel(axis.relation(), &["X", "X0"])]
            }
        };
        rules.push(Rule::new(q(*b), body));
    }
    for &f in &nfa.finals {
        rules.push(Rule::new(Atom::idb(target, "X"), vec![q(f)]));
    }
    rules
}

/// TMNF program defining `target = {x | exists x0: p0(x0) and (x0,x) in [[e]]}`.
pub fn caterpillar_to_tmnf(p0: &Pred, e: &CatExpr, target: &str) -> Program {
    let mut fresh = FreshNames::default();
    if let Some(n) = p0.name() {
        fresh.reserve(n);
    }
    fresh.reserve(target);
    Program::new(caterpillar_rules(p0, e, target, &mut fresh))
}

pub(crate) fn caterpillar_rules(p0: &Pred, e: &CatExpr, target: &str, fresh: &mut FreshNames) -> Vec<Rule> {
    nfa_to_rules(&EpsNfa::thompson(e), p0, target, fresh)
}

// ---- relational semantics ----

/// Default node cap for [`eval_caterpillar`].
pub const CATERPILLAR_CAP: usize = 2000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("tree has {nodes} nodes; the relational caterpillar evaluator is capped at {cap}")]
pub struct CapExceeded {
    pub nodes: usize,
    pub cap: usize,
}

/// Dense binary relation over `0..n`, one bit row per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitRel {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitRel {
    pub fn empty(n: usize) -> BitRel {
        let words = n.div_ceil(64).max(1);
        BitRel { n, words, bits: vec![0; n * words] }
    }

    pub fn identity(n: usize) -> BitRel {
        let mut r = BitRel::empty(n);
        for i in 0..n {
            r.set(i, i);
        }
        r
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize) {
        self.bits[x * self.words + y / 64] |= 1 << (y % 64);
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[x * self.words + y / 64] >> (y % 64) & 1 == 1
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if self.get(x, y) {
                    out.push((NodeId(x), NodeId(y)));
                }
            }
        }
        out
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn union_with(&mut self, o: &BitRel) {
        for (a, b) in self.bits.iter_mut().zip(&o.bits) {
            *a |= b;
        }
    }

    fn compose(&self, o: &BitRel) -> BitRel {
        let mut out = BitRel::empty(self.n);
        for x in 0..self.n {
            let base = x * self.words;
            for y in 0..self.n {
                if self.get(x, y) {
                    let src = o.row(y);
                    for (w, s) in out.bits[base..base + self.words].iter_mut().zip(src) {
                        *w |= s;
                    }
                }
            }
        }
        out
    }

    fn converse(&self) -> BitRel {
        let mut out = BitRel::empty(self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                if self.get(x, y) {
                    out.set(y, x);
                }
            }
        }
        out
    }

    fn reflexive_transitive(&self) -> BitRel {
        // Per source, a search that unions successor rows.
        let mut out = BitRel::empty(self.n);
        let mut stack = Vec::new();
        for x in 0..self.n {
            out.set(x, x);
            stack.push(x);
            while let Some(y) = stack.pop() {
                for z in 0..self.n {
                    if self.get(y, z) && !out.get(x, z) {
                        out.set(x, z);
                        stack.push(z);
                    }
                }
            }
        }
        out
    }
}

/// The relation `[[e]]` on `t`, computed bottom-up by relation algebra.
pub fn caterpillar_relation(t: &Tree, e: &CatExpr) -> Result<BitRel, CapExceeded> {
    caterpillar_relation_capped(t, e, CATERPILLAR_CAP)
}

pub fn caterpillar_relation_capped(t: &Tree, e: &CatExpr, cap: usize) -> Result<BitRel, CapExceeded> {
    if t.len() > cap {
        return Err(CapExceeded { nodes: t.len(), cap });
    }
    Ok(rel(t, e))
}

fn rel(t: &Tree, e: &CatExpr) -> BitRel {
    let n = t.len();
    match e {
        CatExpr::Step { axis, inverse } => {
            let mut r = BitRel::empty(n);
            for (x, y) in t.pairs(&axis.relation()) {
                if *inverse {
                    r.set(y.0, x.0);
                } else {
                    r.set(x.0, y.0);
                }
            }
            r
        }
        CatExpr::Test(u) => {
            let mut r = BitRel::empty(n);
            for x in t.nodes() {
                if t.holds_unary(u, x) {
                    r.set(x.0, x.0);
                }
            }
            r
        }
        CatExpr::Eps => BitRel::identity(n),
        CatExpr::Concat(a, b) => rel(t, a).compose(&rel(t, b)),
        CatExpr::Union(a, b) => {
            let mut r = rel(t, a);
            r.union_with(&rel(t, b));
            r
        }
        CatExpr::Star(a) => rel(t, a).reflexive_transitive(),
        CatExpr::Inv(a) => rel(t, a).converse(),
    }
}

/// Image of `sources` under `[[e]]`.
pub fn eval_caterpillar(t: &Tree, e: &CatExpr, sources: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, CapExceeded> {
    let r = caterpillar_relation(t, e)?;
    let mut out = BTreeSet::new();
    for x in sources {
        for y in t.nodes() {
            if r.get(x.0, y.0) {
                out.insert(y);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_term_tree;

    fn set(ids: &[usize]) -> BTreeSet<NodeId> {
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn parse_and_print() {
        for s in [
            "firstchild.nextsibling*",
            "firstchild|nextsibling.leaf",
            "(firstchild|nextsibling)*",
            "(nextsibling^-1)*.firstchild^-1",
            "(firstchild.nextsibling)^-1",
            "label_a.child_2^-1.not_label('p.x')",
            "eps",
        ] {
            let e = CatExpr::parse(s).unwrap();
            assert_eq!(e.to_string(), s);
            assert_eq!(CatExpr::parse(&e.to_string()).unwrap(), e);
        }
        assert_eq!(CatExpr::parse("child").unwrap(), CatExpr::child());
        assert_eq!(CatExpr::parse("nextsibling+").unwrap().to_string(), "nextsibling.nextsibling*");
        assert!(CatExpr::parse("firstchild.").is_err());
        assert!(CatExpr::parse("child_0").is_err());
        assert!(CatExpr::parse("lastchild").is_err());
        assert!(CatExpr::parse("(leaf").is_err());
    }

    #[test]
    fn invert_child() {
        let e = CatExpr::child().inv();
        assert_eq!(invert(&e).to_string(), "(nextsibling^-1)*.firstchild^-1");
        let e = CatExpr::parse("(firstchild.leaf)^-1^-1").unwrap();
        assert_eq!(invert(&e), CatExpr::parse("firstchild.leaf").unwrap());
    }

    #[test]
    fn document_order_on_figure_one() {
        let t = parse_term_tree("a(a,a(a,a),a)").unwrap();
        let r = caterpillar_relation(&t, &CatExpr::doc_order()).unwrap();
        for x in 0..6 {
            for y in 0..6 {
                assert_eq!(r.get(x, y), x < y, "{x} {y}");
            }
        }
        assert_eq!(eval_caterpillar(&t, &CatExpr::doc_order(), &set(&[0])).unwrap(), set(&[1, 2, 3, 4, 5]));
        assert_eq!(eval_caterpillar(&t, &CatExpr::Eps, &set(&[2, 4])).unwrap(), set(&[2, 4]));
    }

    #[test]
    fn total_relations() {
        let t = parse_term_tree("a(b(c),d,e(f,g))").unwrap();
        assert_eq!(caterpillar_relation(&t, &CatExpr::total_unranked()).unwrap().count(), 49);
        let t = parse_term_tree("a(b(c,d),e)").unwrap();
        assert_eq!(caterpillar_relation(&t, &CatExpr::total_ranked(2)).unwrap().count(), 25);
    }

    #[test]
    fn nfa_image_matches_relation() {
        let t = parse_term_tree("a(b(c,d),e,f(g))").unwrap();
        for s in ["child", "child^-1", "(child|nextsibling^-1)*.leaf", "doc", "firstchild.label_c"] {
            let e = if s == "doc" { CatExpr::doc_order() } else { CatExpr::parse(s).unwrap() };
            let nfa = EpsNfa::thompson(&e);
            for x in t.nodes() {
                let src = [x].into_iter().collect();
                assert_eq!(nfa.image(&t, &src), eval_caterpillar(&t, &e, &src).unwrap(), "{s} from {x}");
            }
        }
    }

    #[test]
    fn example_child_program_from_a_dfa() {
        // The deterministic automaton for firstchild.nextsibling*: 1 -f-> 2, 2 -n-> 2.
        let dfa = EpsNfa {
            states: 2,
            start: 0,
            finals: vec![1],
            transitions: vec![
                (0, Sym::Step { axis: Axis::FirstChild, inverse: false }, 1),
                (1, Sym::Step { axis: Axis::NextSibling, inverse: false }, 1),
            ],
        };
        let mut fresh = FreshNames::default();
        let rules = nfa_to_rules(&dfa, &Pred::idb("p"), "p.child", &mut fresh);
        let text: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(
            text,
            vec![
                "$q0(X) :- p(X).",
                "$q1(X) :- $q0(X0), firstchild(X0,X).",
                "$q1(X) :- $q1(X0), nextsibling(X0,X).",
                "p.child(X) :- $q1(X).",
            ]
        );
    }

    #[test]
    fn cap_enforced() {
        let t = parse_term_tree(&format!("a({})", ["b"; 10].join(","))).unwrap();
        assert!(caterpillar_relation_capped(&t, &CatExpr::Eps, 5).is_err());
    }
}
