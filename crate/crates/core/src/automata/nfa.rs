//! Regular expressions and ε-free NFAs over `(state, label)` letters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::tree::Label;

/// A letter of the transition languages: an automaton state paired with a
/// node label.
pub type Letter = (usize, Label);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LetterRegex {
    Eps,
    Letter(Letter),
    Concat(Vec<LetterRegex>),
    Union(Vec<LetterRegex>),
    Star(Box<LetterRegex>),
}

/// An NFA without ε-moves. Built from a [`LetterRegex`] by the Thompson
/// construction followed by ε-closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    pub num_states: usize,
    pub initial: BTreeSet<usize>,
    pub finals: BTreeSet<usize>,
    pub delta: BTreeMap<(usize, Letter), BTreeSet<usize>>,
    /// Text the automaton was built from.
    pub source: String,
}

struct Thompson {
    eps: Vec<Vec<usize>>,
    moves: Vec<(usize, Letter, usize)>,
}

impl Thompson {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.eps.len() - 1
    }

    fn build(&mut self, r: &LetterRegex) -> (usize, usize) {
        match r {
            LetterRegex::Eps => {
                let s = self.state();
                let f = self.state();
                self.eps[s].push(f);
                (s, f)
            }
            LetterRegex::Letter(l) => {
                let s = self.state();
                let f = self.state();
                self.moves.push((s, l.clone(), f));
                (s, f)
            }
            LetterRegex::Concat(parts) => {
                let s = self.state();
                let mut cur = s;
                for p in parts {
                    let (ps, pf) = self.build(p);
                    self.eps[cur].push(ps);
                    cur = pf;
                }
                (s, cur)
            }
            LetterRegex::Union(alts) => {
                let s = self.state();
                let f = self.state();
                for a in alts {
                    let (as_, af) = self.build(a);
                    self.eps[s].push(as_);
                    self.eps[af].push(f);
                }
                (s, f)
            }
            LetterRegex::Star(inner) => {
                let s = self.state();
                let f = self.state();
                let (is, if_) = self.build(inner);
                self.eps[s].push(is);
                self.eps[s].push(f);
                self.eps[if_].push(is);
                self.eps[if_].push(f);
                (s, f)
            }
        }
    }

    fn closure(&self, p: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([p]);
        let mut stack = vec![p];
        while let Some(x) = stack.pop() {
            for &y in &self.eps[x] {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen
    }
}

impl Nfa {
    pub fn from_regex(r: &LetterRegex, source: &str) -> Nfa {
        let mut th = Thompson { eps: Vec::new(), moves: Vec::new() };
        let (start, fin) = th.build(r);
        let n = th.eps.len();
        let mut out_moves: Vec<Vec<(Letter, usize)>> = vec![Vec::new(); n];
        for (a, l, b) in &th.moves {
            out_moves[*a].push((l.clone(), *b));
        }
        let mut delta: BTreeMap<(usize, Letter), BTreeSet<usize>> = BTreeMap::new();
        let mut finals = BTreeSet::new();
        for p in 0..n {
            let cl = th.closure(p);
            if cl.contains(&fin) {
                finals.insert(p);
            }
            for r in cl {
                for (l, b) in &out_moves[r] {
                    delta.entry((p, l.clone())).or_default().insert(*b);
                }
            }
        }
        let nfa = Nfa { num_states: n, initial: BTreeSet::from([start]), finals, delta, source: source.to_string() };
        nfa.trimmed()
    }

    /// Drops states unreachable from the initial states and renumbers.
    fn trimmed(self) -> Nfa {
        let mut seen: BTreeSet<usize> = self.initial.clone();
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        let mut succ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for ((p, _), qs) in &self.delta {
            succ.entry(*p).or_default().extend(qs.iter().copied());
        }
        while let Some(p) = queue.pop_front() {
            for &q in succ.get(&p).into_iter().flatten() {
                if seen.insert(q) {
                    queue.push_back(q);
                }
            }
        }
        let index: BTreeMap<usize, usize> = seen.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let delta = self
            .delta
            .into_iter()
            .filter(|((p, _), _)| index.contains_key(p))
            .map(|((p, l), qs)| ((index[&p], l), qs.into_iter().map(|q| index[&q]).collect()))
            .collect();
        Nfa {
            num_states: index.len(),
            initial: self.initial.iter().map(|s| index[s]).collect(),
            finals: self.finals.iter().filter_map(|s| index.get(s).copied()).collect(),
            delta,
            source: self.source,
        }
    }

    pub fn step(&self, from: &BTreeSet<usize>, l: &Letter) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &p in from {
            if let Some(qs) = self.delta.get(&(p, l.clone())) {
                out.extend(qs.iter().copied());
            }
        }
        out
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cur = self.initial.clone();
        for l in word {
            cur = self.step(&cur, l);
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|s| self.finals.contains(s))
    }

    pub fn letters(&self) -> BTreeSet<&Letter> {
        self.delta.keys().map(|(_, l)| l).collect()
    }

    /// Whether the two languages share a nonempty word.
    pub fn intersects_nonempty(&self, other: &Nfa) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        for &a in &self.initial {
            for &b in &other.initial {
                seen.insert((a, b));
                queue.push_back((a, b, false));
            }
        }
        let mut by_state: BTreeMap<usize, Vec<(&Letter, &BTreeSet<usize>)>> = BTreeMap::new();
        for ((p, l), qs) in &other.delta {
            by_state.entry(*p).or_default().push((l, qs));
        }
        while let Some((a, b, moved)) = queue.pop_front() {
            if moved && self.finals.contains(&a) && other.finals.contains(&b) {
                return true;
            }
            for (l, qs) in by_state.get(&b).into_iter().flatten() {
                let Some(ps) = self.delta.get(&(a, (*l).clone())) else { continue };
                for &p in ps {
                    for &q in *qs {
                        if seen.insert((p, q)) {
                            queue.push_back((p, q, true));
                        }
                    }
                }
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Letter(String, String),
    Eps,
    Open,
    Close,
    Bar,
    Star,
    Plus,
    Quest,
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let cs: Vec<char> = text.chars().collect();
    let mut i = 0;
    let ident = |c: char| c.is_alphanumeric() || c == '_' || c == '-' || c == '.';
    while i < cs.len() {
        let c = cs[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => (out.push(Tok::Open), i += 1).1,
            ')' => (out.push(Tok::Close), i += 1).1,
            '|' => (out.push(Tok::Bar), i += 1).1,
            '*' => (out.push(Tok::Star), i += 1).1,
            '+' => (out.push(Tok::Plus), i += 1).1,
            '?' => (out.push(Tok::Quest), i += 1).1,
            _ if ident(c) => {
                let s = i;
                while i < cs.len() && ident(cs[i]) {
                    i += 1;
                }
                let word: String = cs[s..i].iter().collect();
                if i < cs.len() && cs[i] == ',' {
                    i += 1;
                    let ls = i;
                    if i < cs.len() && cs[i] == '*' {
                        i += 1;
                    } else {
                        while i < cs.len() && ident(cs[i]) {
                            i += 1;
                        }
                    }
                    if ls == i {
                        return Err(format!("missing label after `{word},`"));
                    }
                    out.push(Tok::Letter(word, cs[ls..i].iter().collect()));
                } else if word == "eps" {
                    out.push(Tok::Eps);
                } else {
                    return Err(format!("expected `state,label` but found `{word}`"));
                }
            }
            _ => return Err(format!("unexpected character `{c}`")),
        }
    }
    Ok(out)
}

/// Parses a letter regex. Letters are written `state,label`; `label` may be
/// `*` for every label. Juxtaposition concatenates; `|`, `*`, `+`, `?`,
/// parentheses and `eps` have their usual meaning.
pub fn parse_letter_regex(
    text: &str,
    resolve: &dyn Fn(&str, &str) -> Result<Vec<Letter>, String>,
) -> Result<LetterRegex, String> {
    let toks = lex(text)?;
    let mut p = RegexParser { toks, pos: 0, resolve };
    let r = p.union()?;
    if p.pos != p.toks.len() {
        return Err(format!("unexpected `{:?}` in regex", p.toks[p.pos]));
    }
    Ok(r)
}

struct RegexParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    resolve: &'a dyn Fn(&str, &str) -> Result<Vec<Letter>, String>,
}

impl RegexParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn union(&mut self) -> Result<LetterRegex, String> {
        let mut alts = vec![self.concat()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            alts.push(self.concat()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { LetterRegex::Union(alts) })
    }

    fn concat(&mut self) -> Result<LetterRegex, String> {
        let mut parts = Vec::new();
        while matches!(self.peek(), Some(Tok::Letter(..) | Tok::Eps | Tok::Open)) {
            parts.push(self.postfix()?);
        }
        Ok(match parts.len() {
            0 => LetterRegex::Eps,
            1 => parts.pop().unwrap(),
            _ => LetterRegex::Concat(parts),
        })
    }

    fn postfix(&mut self) -> Result<LetterRegex, String> {
        let mut r = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => r = LetterRegex::Star(Box::new(r)),
                Some(Tok::Plus) => r = LetterRegex::Concat(vec![r.clone(), LetterRegex::Star(Box::new(r))]),
                Some(Tok::Quest) => r = LetterRegex::Union(vec![r, LetterRegex::Eps]),
                _ => return Ok(r),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<LetterRegex, String> {
        let t = self.toks[self.pos].clone();
        self.pos += 1;
        match t {
            Tok::Eps => Ok(LetterRegex::Eps),
            Tok::Letter(q, a) => {
                let mut ls: Vec<LetterRegex> = (self.resolve)(&q, &a)?.into_iter().map(LetterRegex::Letter).collect();
                Ok(if ls.len() == 1 { ls.pop().unwrap() } else { LetterRegex::Union(ls) })
            }
            Tok::Open => {
                let r = self.union()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err("unclosed `(`".into());
                }
                self.pos += 1;
                Ok(r)
            }
            other => Err(format!("unexpected `{other:?}` in regex")),
        }
    }
}
