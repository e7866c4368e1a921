//! The sectioned `.qa` text format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use super::nfa::{parse_letter_regex, Letter, Nfa};
use super::{Branch, Dir, QaCore, QaError, QueryAutomaton, RankedQa, Stay, TwoDfa, UnrankedSqa};
use crate::tree::{Label, RankedAlphabet};

const SECTIONS: [&str; 12] =
    ["kind", "states", "alphabet", "start", "final", "partition", "up", "down", "root", "leaf", "stay", "select"];

type Lines<'a> = Vec<(usize, &'a str)>;

fn perr(line: usize, message: impl Into<String>) -> QaError {
    QaError::Parse { line, message: message.into() }
}

fn valid_state_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !s.contains("__")
        && !s.starts_with('_')
        && !s.ends_with('_')
}

struct Ctx<'a> {
    core: &'a QaCore,
}

impl Ctx<'_> {
    fn state(&self, line: usize, name: &str) -> Result<usize, QaError> {
        self.core.state(name).ok_or_else(|| perr(line, format!("undeclared state `{name}`")))
    }

    fn labels(&self, line: usize, name: &str) -> Result<Vec<Label>, QaError> {
        if name == "*" {
            return Ok(self.core.labels.clone());
        }
        self.core
            .labels
            .iter()
            .find(|l| l.as_str() == name)
            .cloned()
            .map(|l| vec![l])
            .ok_or_else(|| perr(line, format!("undeclared label `{name}`")))
    }

    /// `q,a` with `a` possibly `*`.
    fn letters(&self, line: usize, text: &str) -> Result<Vec<Letter>, QaError> {
        let (q, a) = text.split_once(',').ok_or_else(|| perr(line, format!("expected `state,label`, found `{text}`")))?;
        let q = self.state(line, q.trim())?;
        Ok(self.labels(line, a.trim())?.into_iter().map(|l| (q, l)).collect())
    }

    fn states(&self, line: usize, text: &str) -> Result<Vec<usize>, QaError> {
        text.split_whitespace().map(|s| self.state(line, s)).collect()
    }

    fn nfa(&self, line: usize, text: &str) -> Result<Nfa, QaError> {
        let resolve = |q: &str, a: &str| -> Result<Vec<Letter>, String> {
            let qi = self.core.state(q).ok_or_else(|| format!("undeclared state `{q}`"))?;
            let ls = self.labels(line, a).map_err(|e| e.to_string())?;
            Ok(ls.into_iter().map(|l| (qi, l)).collect())
        };
        let r = parse_letter_regex(text, &resolve).map_err(|m| perr(line, m))?;
        Ok(Nfa::from_regex(&r, text.trim()))
    }
}

fn split_arrow<'a>(line: usize, text: &'a str, arrow: &str) -> Result<(&'a str, &'a str), QaError> {
    text.split_once(arrow).map(|(a, b)| (a.trim(), b.trim())).ok_or_else(|| perr(line, format!("missing `{arrow}`")))
}

fn single<'a>(sec: &str, lines: &Lines<'a>) -> Result<(usize, &'a str), QaError> {
    let toks: Vec<(usize, &str)> = lines.iter().flat_map(|(n, l)| l.split_whitespace().map(move |t| (*n, t))).collect();
    match toks.as_slice() {
        [one] => Ok(*one),
        [] => Err(perr(0, format!("section [{sec}] is empty"))),
        [_, (n, _), ..] => Err(perr(*n, format!("section [{sec}] takes a single entry"))),
    }
}

/// Parses a `.qa` file.
pub fn parse_qa(text: &str) -> Result<QueryAutomaton, QaError> {
    let mut sections: BTreeMap<&str, Lines> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            let Some(&sec) = SECTIONS.iter().find(|s| **s == name) else {
                return Err(perr(n, format!("unknown section [{name}]")));
            };
            if sections.contains_key(sec) {
                return Err(perr(n, format!("duplicate section [{sec}]")));
            }
            sections.insert(sec, Vec::new());
            current = Some(sec);
            continue;
        }
        let Some(sec) = current else {
            return Err(perr(n, "content before the first section"));
        };
        sections.get_mut(sec).unwrap().push((n, line));
    }
    let get = |s: &str| sections.get(s).cloned().unwrap_or_default();

    let mut core = QaCore::default();
    for (n, l) in get("states") {
        for s in l.split_whitespace() {
            if !valid_state_name(s) {
                return Err(perr(n, format!("bad state name `{s}` (letters, digits and single inner underscores)")));
            }
            if core.state(s).is_some() {
                return Err(perr(n, format!("duplicate state `{s}`")));
            }
            core.states.push(s.to_string());
        }
    }
    let alphabet_text: Vec<(usize, &str)> = get("alphabet");
    let ranked = match sections.get("kind") {
        Some(lines) => match single("kind", lines)? {
            (_, "ranked") => true,
            (_, "unranked") => false,
            (n, other) => return Err(perr(n, format!("unknown kind `{other}`"))),
        },
        None => alphabet_text.iter().any(|(_, l)| l.contains(':')),
    };
    let mut alphabet = RankedAlphabet::new();
    if ranked {
        for (n, l) in &alphabet_text {
            let part = RankedAlphabet::parse(l).map_err(|m| perr(*n, m))?;
            for lab in part.labels() {
                alphabet.insert(lab.clone(), part.arities(lab).unwrap().iter().copied());
            }
        }
        core.labels = alphabet.labels().cloned().collect();
    } else {
        for (n, l) in &alphabet_text {
            for s in l.split_whitespace() {
                let lab = Label::new(s).map_err(|e| perr(*n, e.to_string()))?;
                if !core.labels.contains(&lab) {
                    core.labels.push(lab);
                }
            }
        }
    }
    for l in &core.labels {
        if !l.is_bare() {
            return Err(perr(0, format!("label `{l}` must be an identifier")));
        }
    }
    let (n, s) = single("start", &get("start"))?;
    core.start = core.state(s).ok_or_else(|| perr(n, format!("undeclared state `{s}`")))?;

    let mut finals = BTreeSet::new();
    let mut up_pairs = BTreeSet::new();
    let mut down_pairs = BTreeSet::new();
    let mut root = BTreeMap::new();
    let mut leaf = BTreeMap::new();
    let mut select = BTreeSet::new();
    {
        let cx = Ctx { core: &core };
        for (n, l) in get("final") {
            finals.extend(cx.states(n, l)?);
        }
        for (n, l) in get("partition") {
            let (side, rest) = l.split_once(':').ok_or_else(|| perr(n, "expected `U: q,a` or `D: q,a`"))?;
            let target = match side.trim() {
                "U" => &mut up_pairs,
                "D" => &mut down_pairs,
                other => return Err(perr(n, format!("unknown partition side `{other}`"))),
            };
            for item in rest.split_whitespace() {
                target.extend(cx.letters(n, item)?);
            }
        }
        for (sec, map) in [("root", &mut root), ("leaf", &mut leaf)] {
            for (n, l) in get(sec) {
                let (lhs, rhs) = split_arrow(n, l, "->")?;
                let q = cx.state(n, rhs)?;
                for letter in cx.letters(n, lhs)? {
                    if map.insert(letter, q).is_some_and(|old| old != q) {
                        return Err(perr(n, format!("conflicting [{sec}] entries")));
                    }
                }
            }
        }
        for (n, l) in get("select") {
            for item in l.split_whitespace() {
                select.extend(cx.letters(n, item)?);
            }
        }
    }
    core.finals = finals;
    core.up_pairs = up_pairs;
    core.down_pairs = down_pairs;
    core.root = root;
    core.leaf = leaf;
    core.select = select;

    let cx = Ctx { core: &core };
    if ranked {
        let mut up = BTreeMap::new();
        for (n, l) in get("up") {
            let (lhs, rhs) = split_arrow(n, l, "->")?;
            let q = cx.state(n, rhs)?;
            let mut words: Vec<Vec<Letter>> = vec![Vec::new()];
            for item in lhs.split_whitespace() {
                let ls = cx.letters(n, item)?;
                words = words.into_iter().flat_map(|w| ls.iter().map(move |x| [w.clone(), vec![x.clone()]].concat())).collect();
            }
            for w in words {
                if up.insert(w, q).is_some_and(|old| old != q) {
                    return Err(perr(n, "conflicting [up] entries"));
                }
            }
        }
        let mut down = BTreeMap::new();
        for (n, l) in get("down") {
            let (lhs, rhs) = split_arrow(n, l, "->")?;
            let (pair, i) = lhs.rsplit_once(',').ok_or_else(|| perr(n, "expected `q,a,i -> states`"))?;
            let i: usize = i.trim().parse().map_err(|_| perr(n, format!("bad arity `{i}`")))?;
            let word = cx.states(n, rhs)?;
            for (q, a) in cx.letters(n, pair)? {
                if down.insert((q, a, i), word.clone()).is_some_and(|old| old != word) {
                    return Err(perr(n, "conflicting [down] entries"));
                }
            }
        }
        if sections.contains_key("stay") {
            return Err(perr(0, "ranked automata have no stay transitions"));
        }
        let core = core.clone();
        return Ok(QueryAutomaton::Ranked(RankedQa { core, alphabet, up, down }));
    }

    let mut up = Vec::new();
    for (n, l) in get("up") {
        let (lhs, rhs) = split_arrow(n, l, "<-")?;
        let q = cx.state(n, lhs)?;
        if up.iter().any(|(p, _)| *p == q) {
            return Err(perr(n, format!("second up language for state `{lhs}`")));
        }
        up.push((q, cx.nfa(n, rhs)?));
    }
    let mut down: BTreeMap<Letter, Vec<Branch>> = BTreeMap::new();
    for (n, l) in get("down") {
        let (lhs, rhs) = split_arrow(n, l, "->")?;
        let mut branches = Vec::new();
        for b in rhs.split(';') {
            let parts: Vec<&str> = b.split('|').collect();
            if parts.len() != 3 {
                return Err(perr(n, format!("branch `{}` must have the form `u | v* | w`", b.trim())));
            }
            let v_text = parts[1].trim();
            let v_text = v_text.strip_suffix('*').unwrap_or(v_text);
            branches.push(Branch { u: cx.states(n, parts[0])?, v: cx.states(n, v_text)?, w: cx.states(n, parts[2])? });
        }
        for letter in cx.letters(n, lhs)? {
            if down.insert(letter, branches.clone()).is_some() {
                return Err(perr(n, "conflicting [down] entries"));
            }
        }
    }
    let stay = match sections.get("stay") {
        None => None,
        Some(lines) => Some(parse_stay(&cx, lines)?),
    };
    let core = core.clone();
    Ok(QueryAutomaton::Unranked(UnrankedSqa { core, up, down, stay }))
}

fn parse_stay(cx: &Ctx, lines: &Lines) -> Result<Stay, QaError> {
    let mut word = None;
    let mut dfa = TwoDfa::default();
    let mut start = None;
    let mut finals = Vec::new();
    let mut moves = Vec::new();
    let mut selects = Vec::new();
    for &(n, l) in lines {
        if let Some(r) = l.strip_prefix("word:") {
            word = Some(cx.nfa(n, r)?);
        } else if let Some(r) = l.strip_prefix("states:") {
            for s in r.split_whitespace() {
                if dfa.states.iter().any(|x| x == s) {
                    return Err(perr(n, format!("duplicate stay state `{s}`")));
                }
                dfa.states.push(s.to_string());
            }
        } else if let Some(r) = l.strip_prefix("start:") {
            start = Some((n, r.trim()));
        } else if let Some(r) = l.strip_prefix("final:") {
            finals.extend(r.split_whitespace().map(|s| (n, s)));
        } else if let Some(r) = l.strip_prefix("select:") {
            selects.push((n, r.trim()));
        } else {
            moves.push((n, l));
        }
    }
    let sidx = |n: usize, s: &str| -> Result<usize, QaError> {
        dfa.states.iter().position(|x| x == s).ok_or_else(|| perr(n, format!("undeclared stay state `{s}`")))
    };
    // `s,q,a` with the stay state first.
    let triple = |n: usize, t: &str| -> Result<(usize, Vec<Letter>), QaError> {
        let (s, rest) = t.split_once(',').ok_or_else(|| perr(n, format!("expected `s,q,a`, found `{t}`")))?;
        Ok((sidx(n, s.trim())?, cx.letters(n, rest)?))
    };
    let (n, s) = start.ok_or_else(|| perr(0, "[stay] needs `start:`"))?;
    let start = sidx(n, s)?;
    let finals: BTreeSet<usize> = finals.into_iter().map(|(n, s)| sidx(n, s)).collect::<Result<_, _>>()?;
    let mut delta = BTreeMap::new();
    for (n, l) in moves {
        let (lhs, rhs) = split_arrow(n, l, "->")?;
        let (s, letters) = triple(n, lhs)?;
        let mut it = rhs.split_whitespace();
        let (Some(t), Some(d), None) = (it.next(), it.next(), it.next()) else {
            return Err(perr(n, "expected `s,q,a -> s' L|R`"));
        };
        let dir = match d {
            "L" => Dir::L,
            "R" => Dir::R,
            _ => return Err(perr(n, format!("direction must be L or R, found `{d}`"))),
        };
        let t = sidx(n, t)?;
        for letter in letters {
            delta.insert((s, letter), (t, dir));
        }
    }
    let mut select = BTreeMap::new();
    for (n, l) in selects {
        let (lhs, rhs) = split_arrow(n, l, "->")?;
        let (s, letters) = triple(n, lhs)?;
        let q = cx.state(n, rhs)?;
        for letter in letters {
            select.insert((s, letter), q);
        }
    }
    let word = word.ok_or_else(|| perr(0, "[stay] needs `word:`"))?;
    let states = dfa.states;
    Ok(Stay { word, dfa: TwoDfa { states, start, finals, delta, select } })
}

impl fmt::Display for QueryAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.core();
        let st = |q: usize| c.states[q].as_str();
        let letter = |(q, a): &Letter| format!("{},{a}", st(*q));
        let mut s = String::new();
        let ranked = matches!(self, QueryAutomaton::Ranked(_));
        writeln!(s, "[kind]\n{}", if ranked { "ranked" } else { "unranked" })?;
        writeln!(s, "[states]\n{}", c.states.join(" "))?;
        match self {
            QueryAutomaton::Ranked(r) => writeln!(s, "[alphabet]\n{}", r.alphabet)?,
            QueryAutomaton::Unranked(_) => {
                writeln!(s, "[alphabet]\n{}", c.labels.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(" "))?
            }
        }
        writeln!(s, "[start]\n{}", st(c.start))?;
        writeln!(s, "[final]\n{}", c.finals.iter().map(|&q| st(q)).collect::<Vec<_>>().join(" "))?;
        writeln!(s, "[partition]")?;
        for l in &c.up_pairs {
            writeln!(s, "U: {}", letter(l))?;
        }
        for l in &c.down_pairs {
            writeln!(s, "D: {}", letter(l))?;
        }
        let states = |w: &[usize]| w.iter().map(|&q| st(q)).collect::<Vec<_>>().join(" ");
        match self {
            QueryAutomaton::Ranked(r) => {
                writeln!(s, "[up]")?;
                for (w, q) in &r.up {
                    writeln!(s, "{} -> {}", w.iter().map(letter).collect::<Vec<_>>().join(" "), st(*q))?;
                }
                writeln!(s, "[down]")?;
                for ((q, a, i), w) in &r.down {
                    writeln!(s, "{},{a},{i} -> {}", st(*q), states(w))?;
                }
            }
            QueryAutomaton::Unranked(u) => {
                writeln!(s, "[up]")?;
                for (q, n) in &u.up {
                    writeln!(s, "{} <- {}", st(*q), n.source)?;
                }
                writeln!(s, "[down]")?;
                for (l, bs) in &u.down {
                    let bs: Vec<String> = bs
                        .iter()
                        .map(|b| {
                            let v = if b.v.is_empty() { String::new() } else { format!("{}*", states(&b.v)) };
                            format!("{} | {} | {}", states(&b.u), v, states(&b.w))
                        })
                        .collect();
                    writeln!(s, "{} -> {}", letter(l), bs.join(" ; "))?;
                }
            }
        }
        writeln!(s, "[root]")?;
        for (l, q) in &c.root {
            writeln!(s, "{} -> {}", letter(l), st(*q))?;
        }
        writeln!(s, "[leaf]")?;
        for (l, q) in &c.leaf {
            writeln!(s, "{} -> {}", letter(l), st(*q))?;
        }
        if let QueryAutomaton::Unranked(UnrankedSqa { stay: Some(stay), .. }) = self {
            let d = &stay.dfa;
            writeln!(s, "[stay]\nword: {}", stay.word.source)?;
            writeln!(s, "states: {}", d.states.join(" "))?;
            writeln!(s, "start: {}", d.states[d.start])?;
            writeln!(s, "final: {}", d.finals.iter().map(|&x| d.states[x].as_str()).collect::<Vec<_>>().join(" "))?;
            for ((x, l), (y, dir)) in &d.delta {
                writeln!(s, "{},{} -> {} {:?}", d.states[*x], letter(l), d.states[*y], dir)?;
            }
            for ((x, l), q) in &d.select {
                writeln!(s, "select: {},{} -> {}", d.states[*x], letter(l), st(*q))?;
            }
        }
        writeln!(s, "[select]")?;
        for l in &c.select {
            writeln!(s, "{}", letter(l))?;
        }
        f.write_str(&s)
    }
}
