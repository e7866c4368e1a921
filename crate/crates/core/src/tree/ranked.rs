use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Label, NodeId, Tree};

/// Allowed child counts per label. A label may admit several arities, e.g.
/// `a:{0,2}` for a symbol used both at leaves and at binary inner nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankedAlphabet {
    arities: BTreeMap<Label, BTreeSet<usize>>,
}

impl RankedAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: &str, arities: &[usize]) -> Self {
        self.insert(Label::new(label).expect("nonempty label"), arities.iter().copied());
        self
    }

    pub fn insert(&mut self, label: Label, arities: impl IntoIterator<Item = usize>) {
        self.arities.entry(label).or_default().extend(arities);
    }

    pub fn arities(&self, label: &Label) -> Option<&BTreeSet<usize>> {
        self.arities.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.arities.keys()
    }

    /// Maximum rank K.
    pub fn max_rank(&self) -> usize {
        self.arities.values().flat_map(|s| s.iter().copied()).max().unwrap_or(0)
    }

    /// Parses `a:0,2 b:0` (whitespace- or `;`-separated entries).
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut ra = RankedAlphabet::new();
        for entry in text.split(|c: char| c.is_whitespace() || c == ';').filter(|e| !e.is_empty()) {
            let (name, ks) = entry.rsplit_once(':').ok_or_else(|| format!("missing `:` in `{entry}`"))?;
            let label = Label::new(name).map_err(|e| e.to_string())?;
            let mut set = Vec::new();
            for k in ks.split(',').filter(|k| !k.is_empty()) {
                set.push(k.parse::<usize>().map_err(|_| format!("bad arity `{k}` in `{entry}`"))?);
            }
            if set.is_empty() {
                return Err(format!("no arity given in `{entry}`"));
            }
            ra.insert(label, set);
        }
        Ok(ra)
    }
}

impl fmt::Display for RankedAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (l, ks) in &self.arities {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let ks: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
            write!(f, "{l}:{}", ks.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankViolation {
    UnknownLabel { node: NodeId, label: Label },
    WrongArity { node: NodeId, label: Label, children: usize },
}

impl fmt::Display for RankViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankViolation::UnknownLabel { node, label } => {
                write!(f, "node {node}: label `{label}` is not in the ranked alphabet")
            }
            RankViolation::WrongArity { node, label, children } => {
                write!(f, "node {node}: label `{label}` does not allow {children} children")
            }
        }
    }
}

pub fn validate_ranked(t: &Tree, ra: &RankedAlphabet) -> Vec<RankViolation> {
    let mut out = Vec::new();
    for n in t.nodes() {
        let label = t.label(n);
        match ra.arities(label) {
            None => out.push(RankViolation::UnknownLabel { node: n, label: label.clone() }),
            Some(ks) => {
                let c = t.child_count(n);
                if !ks.contains(&c) {
                    out.push(RankViolation::WrongArity { node: n, label: label.clone(), children: c });
                }
            }
        }
    }
    out
}
