//! Immutable ordered, unranked, labeled trees.
//!
//! Node ids are assigned in document order (preorder), so `id(u) < id(v)`
//! exactly when the opening tag of `u` precedes that of `v`. Besides the
//! navigation arrays, a [`Tree`] exposes the relational view used by the
//! datalog engine: the unranked signature (`root`, `leaf`, `label_l`,
//! `firstchild`, `nextsibling`, `lastsibling`) plus the derived relations
//! `firstsibling`, `child`, `lastchild` and `child_k`.

mod html;
mod ranked;
mod term;

pub use html::{parse_html, HtmlOptions};
pub use ranked::{validate_ranked, RankViolation, RankedAlphabet};
pub use term::{outline, parse_term_tree, serialize_tree, TreeFormat};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

const NONE: u32 = u32::MAX;

/// A node label. Labels form an open alphabet; equality is byte equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self, TreeError> {
        let name = name.into();
        if name.is_empty() {
            return Err(TreeError::EmptyLabel);
        }
        Ok(Label(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the label can be written in term format without quotes.
    pub fn is_bare(&self) -> bool {
        self.0
            .chars()
            .all(|c| c.is_alphanumeric() || c == '-' || c == ':' || c == '#')
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Index of a node; ids are dense and follow document order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("empty input")]
    EmptyInput,
    #[error("labels must be nonempty")]
    EmptyLabel,
    #[error("input is not decodable as text")]
    Undecodable,
    #[error("document contains no elements")]
    NoElements,
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` takes {expected} argument(s), got {got}")]
    Arity {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("node id {0} out of range")]
    NodeOutOfRange(usize),
    #[error("tree builder misuse: {0}")]
    Builder(&'static str),
}

/// The relations of the tree signatures, both unranked and ranked.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Root,
    Leaf,
    LastSibling,
    FirstSibling,
    Label(Label),
    NotLabel(Label),
    FirstChild,
    NextSibling,
    Child,
    LastChild,
    /// `child_k(x, y)`: y is the k-th child of x (k >= 1).
    ChildK(u32),
}

impl Relation {
    pub fn arity(&self) -> usize {
        match self {
            Relation::Root
            | Relation::Leaf
            | Relation::LastSibling
            | Relation::FirstSibling
            | Relation::Label(_)
            | Relation::NotLabel(_) => 1,
            _ => 2,
        }
    }

    /// Resolves a relation by its surface name (`label_div`, `child_2`, ...).
    pub fn from_name(name: &str) -> Option<Relation> {
        Some(match name {
            "root" => Relation::Root,
            "leaf" => Relation::Leaf,
            "lastsibling" => Relation::LastSibling,
            "firstsibling" => Relation::FirstSibling,
            "firstchild" => Relation::FirstChild,
            "nextsibling" => Relation::NextSibling,
            "child" => Relation::Child,
            "lastchild" => Relation::LastChild,
            _ => {
                if let Some(rest) = name.strip_prefix("not_label_") {
                    return Label::new(rest).ok().map(Relation::NotLabel);
                }
                if let Some(rest) = name.strip_prefix("label_") {
                    return Label::new(rest).ok().map(Relation::Label);
                }
                if let Some(rest) = name.strip_prefix("child_") {
                    if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                        let k: u32 = rest.parse().ok()?;
                        if k >= 1 {
                            return Some(Relation::ChildK(k));
                        }
                    }
                }
                return None;
            }
        })
    }

    pub fn is_binary(&self) -> bool {
        self.arity() == 2
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Root => f.write_str("root"),
            Relation::Leaf => f.write_str("leaf"),
            Relation::LastSibling => f.write_str("lastsibling"),
            Relation::FirstSibling => f.write_str("firstsibling"),
            Relation::Label(l) => write!(f, "label_{l}"),
            Relation::NotLabel(l) => write!(f, "not_label_{l}"),
            Relation::FirstChild => f.write_str("firstchild"),
            Relation::NextSibling => f.write_str("nextsibling"),
            Relation::Child => f.write_str("child"),
            Relation::LastChild => f.write_str("lastchild"),
            Relation::ChildK(k) => write!(f, "child_{k}"),
        }
    }
}

/// An immutable document tree.
#[derive(Clone, Debug)]
pub struct Tree {
    labels: Vec<u32>,
    label_names: Vec<Label>,
    label_index: HashMap<Label, u32>,
    parent: Vec<u32>,
    first_child: Vec<u32>,
    last_child: Vec<u32>,
    next_sibling: Vec<u32>,
    prev_sibling: Vec<u32>,
    /// 1-based position among siblings; 0 for the root.
    position: Vec<u32>,
    child_count: Vec<u32>,
    /// CSR layout of children: children of `n` are
    /// `children[child_start[n]..child_start[n] + child_count[n]]`.
    child_start: Vec<u32>,
    children: Vec<u32>,
    text: Vec<Option<String>>,
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.parent == other.parent
            && (0..self.len()).all(|i| self.label(NodeId(i)) == other.label(NodeId(i)))
            && self.text == other.text
    }
}

impl Eq for Tree {}

#[inline]
fn opt(v: u32) -> Option<NodeId> {
    (v != NONE).then_some(NodeId(v as usize))
}

impl Tree {
    /// Builds a tree from labels and parent pointers given in preorder.
    ///
    /// `parents[0]` must be `None` and every other node's parent must be a
    /// node on the rightmost path of the tree built so far, which is exactly
    /// the condition for the indices to be preorder.
    pub fn from_preorder(labels: &[Label], parents: &[Option<usize>]) -> Result<Tree, TreeError> {
        if labels.is_empty() || labels.len() != parents.len() {
            return Err(TreeError::Builder("labels and parents must be nonempty and aligned"));
        }
        let mut b = TreeBuilder::new();
        let mut path: Vec<usize> = Vec::new();
        for (i, (label, parent)) in labels.iter().zip(parents).enumerate() {
            match parent {
                None if i == 0 => {}
                None => return Err(TreeError::Builder("only node 0 may lack a parent")),
                Some(p) => {
                    while path.last().is_some_and(|&top| top != *p) {
                        path.pop();
                        b.close()?;
                    }
                    if path.is_empty() {
                        return Err(TreeError::Builder("parents are not in preorder"));
                    }
                }
            }
            b.open(label.clone())?;
            path.push(i);
        }
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator {
        (0..self.len()).map(NodeId)
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn label(&self, n: NodeId) -> &Label {
        &self.label_names[self.labels[n.0] as usize]
    }

    /// Interned id of a node's label; comparable with [`Tree::label_id`].
    #[inline]
    pub fn label_code(&self, n: NodeId) -> u32 {
        self.labels[n.0]
    }

    /// Interned id of `label` in this tree, if any node carries it.
    pub fn label_id(&self, label: &Label) -> Option<u32> {
        self.label_index.get(label).copied()
    }

    pub fn distinct_labels(&self) -> &[Label] {
        &self.label_names
    }

    pub fn text(&self, n: NodeId) -> Option<&str> {
        self.text[n.0].as_deref()
    }

    #[inline]
    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        opt(self.parent[n.0])
    }

    #[inline]
    pub fn first_child(&self, n: NodeId) -> Option<NodeId> {
        opt(self.first_child[n.0])
    }

    #[inline]
    pub fn last_child(&self, n: NodeId) -> Option<NodeId> {
        opt(self.last_child[n.0])
    }

    #[inline]
    pub fn next_sibling(&self, n: NodeId) -> Option<NodeId> {
        opt(self.next_sibling[n.0])
    }

    #[inline]
    pub fn prev_sibling(&self, n: NodeId) -> Option<NodeId> {
        opt(self.prev_sibling[n.0])
    }

    /// 1-based position of `n` among its siblings, `None` for the root.
    #[inline]
    pub fn position(&self, n: NodeId) -> Option<usize> {
        let p = self.position[n.0];
        (p != 0).then_some(p as usize)
    }

    #[inline]
    pub fn child_count(&self, n: NodeId) -> usize {
        self.child_count[n.0] as usize
    }

    /// The k-th child (1-based) of `n`.
    #[inline]
    pub fn nth_child(&self, n: NodeId, k: usize) -> Option<NodeId> {
        if k == 0 || k > self.child_count[n.0] as usize {
            return None;
        }
        Some(NodeId(self.children[self.child_start[n.0] as usize + k - 1] as usize))
    }

    pub fn children(&self, n: NodeId) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator + '_ {
        let start = self.child_start[n.0] as usize;
        let end = start + self.child_count[n.0] as usize;
        self.children[start..end].iter().map(|&c| NodeId(c as usize))
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.first_child[n.0] == NONE
    }

    pub fn is_last_sibling(&self, n: NodeId) -> bool {
        self.parent[n.0] != NONE && self.next_sibling[n.0] == NONE
    }

    pub fn is_first_sibling(&self, n: NodeId) -> bool {
        self.parent[n.0] != NONE && self.prev_sibling[n.0] == NONE
    }

    /// Proper-ancestor test.
    pub fn is_ancestor(&self, anc: NodeId, n: NodeId) -> bool {
        let mut cur = self.parent(n);
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            if p < anc {
                return false;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Depth of a node, the root having depth 0.
    pub fn depth(&self, n: NodeId) -> usize {
        let mut d = 0;
        let mut cur = n;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
        }
        d
    }

    /// Unary relation test.
    pub fn holds_unary(&self, rel: &Relation, n: NodeId) -> bool {
        match rel {
            Relation::Root => n.0 == 0,
            Relation::Leaf => self.is_leaf(n),
            Relation::LastSibling => self.is_last_sibling(n),
            Relation::FirstSibling => self.is_first_sibling(n),
            Relation::Label(l) => self.label(n) == l,
            Relation::NotLabel(l) => self.label(n) != l,
            _ => false,
        }
    }

    /// Binary relation test.
    pub fn holds_binary(&self, rel: &Relation, x: NodeId, y: NodeId) -> bool {
        match rel {
            Relation::FirstChild => self.first_child(x) == Some(y),
            Relation::NextSibling => self.next_sibling(x) == Some(y),
            Relation::Child => self.parent(y) == Some(x),
            Relation::LastChild => self.last_child(x) == Some(y),
            Relation::ChildK(k) => self.parent(y) == Some(x) && self.position[y.0] == *k,
            _ => false,
        }
    }

    /// Functional forward step of a binary relation that has the dependency
    /// `$1 -> $2`. `child` has no such dependency and yields `None`.
    #[inline]
    pub fn step_forward(&self, rel: &Relation, x: NodeId) -> Option<NodeId> {
        match rel {
            Relation::FirstChild => self.first_child(x),
            Relation::NextSibling => self.next_sibling(x),
            Relation::LastChild => self.last_child(x),
            Relation::ChildK(k) => self.nth_child(x, *k as usize),
            _ => None,
        }
    }

    /// Functional backward step (`$2 -> $1`); defined for every binary relation.
    #[inline]
    pub fn step_backward(&self, rel: &Relation, y: NodeId) -> Option<NodeId> {
        match rel {
            Relation::FirstChild => {
                if self.prev_sibling[y.0] == NONE {
                    self.parent(y)
                } else {
                    None
                }
            }
            Relation::NextSibling => self.prev_sibling(y),
            Relation::Child => self.parent(y),
            Relation::LastChild => {
                if self.next_sibling[y.0] == NONE {
                    self.parent(y)
                } else {
                    None
                }
            }
            Relation::ChildK(k) => {
                if self.position[y.0] == *k {
                    self.parent(y)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// All tuples of a binary relation, in order of the first component.
    pub fn pairs(&self, rel: &Relation) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for x in self.nodes() {
            match rel {
                Relation::Child => out.extend(self.children(x).map(|y| (x, y))),
                _ => {
                    if let Some(y) = self.step_forward(rel, x) {
                        out.push((x, y));
                    }
                }
            }
        }
        out
    }
}

/// Truth of a signature relation on a tuple of node ids.
pub fn holds(t: &Tree, rel: &Relation, args: &[NodeId]) -> Result<bool, TreeError> {
    if args.len() != rel.arity() {
        return Err(TreeError::Arity {
            relation: rel.to_string(),
            expected: rel.arity(),
            got: args.len(),
        });
    }
    if let Some(bad) = args.iter().find(|n| n.0 >= t.len()) {
        return Err(TreeError::NodeOutOfRange(bad.0));
    }
    Ok(match args {
        [n] => t.holds_unary(rel, *n),
        [x, y] => t.holds_binary(rel, *x, *y),
        _ => unreachable!(),
    })
}

/// Same as [`holds`] but resolves the relation by name.
pub fn holds_named(t: &Tree, name: &str, args: &[NodeId]) -> Result<bool, TreeError> {
    let rel = Relation::from_name(name).ok_or_else(|| TreeError::UnknownRelation(name.to_string()))?;
    holds(t, &rel, args)
}

/// Incremental construction in document order: `open` a node, add its
/// children, `close` it.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    labels: Vec<Label>,
    parent: Vec<u32>,
    text: Vec<Option<String>>,
    stack: Vec<u32>,
    closed_root: bool,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a new node as the last child of the innermost open node.
    pub fn open(&mut self, label: Label) -> Result<NodeId, TreeError> {
        if self.stack.is_empty() && !self.labels.is_empty() {
            return Err(TreeError::Builder("a tree has exactly one root"));
        }
        let id = self.labels.len() as u32;
        self.parent.push(self.stack.last().copied().unwrap_or(NONE));
        self.labels.push(label);
        self.text.push(None);
        self.stack.push(id);
        Ok(NodeId(id as usize))
    }

    /// Adds a leaf carrying a text payload.
    pub fn leaf_with_text(&mut self, label: Label, text: Option<String>) -> Result<NodeId, TreeError> {
        let id = self.open(label)?;
        self.text[id.0] = text;
        self.close()?;
        Ok(id)
    }

    pub fn close(&mut self) -> Result<(), TreeError> {
        self.stack.pop().ok_or(TreeError::Builder("close without open"))?;
        if self.stack.is_empty() {
            self.closed_root = true;
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Closes any nodes still open and freezes the tree.
    pub fn finish(mut self) -> Result<Tree, TreeError> {
        if self.labels.is_empty() {
            return Err(TreeError::EmptyInput);
        }
        self.stack.clear();
        let n = self.labels.len();
        let mut label_index: HashMap<Label, u32> = HashMap::new();
        let mut label_names = Vec::new();
        let mut labels = Vec::with_capacity(n);
        for l in self.labels {
            let next = label_names.len() as u32;
            let code = *label_index.entry(l.clone()).or_insert_with(|| {
                label_names.push(l);
                next
            });
            labels.push(code);
        }
        let mut first_child = vec![NONE; n];
        let mut last_child = vec![NONE; n];
        let mut next_sibling = vec![NONE; n];
        let mut prev_sibling = vec![NONE; n];
        let mut position = vec![0u32; n];
        let mut child_count = vec![0u32; n];
        // Children are appended in increasing id order, so one pass suffices.
        for i in 1..n {
            let p = self.parent[i] as usize;
            child_count[p] += 1;
            position[i] = child_count[p];
            if last_child[p] == NONE {
                first_child[p] = i as u32;
            } else {
                let prev = last_child[p] as usize;
                next_sibling[prev] = i as u32;
                prev_sibling[i] = prev as u32;
            }
            last_child[p] = i as u32;
        }
        let mut child_start = vec![0u32; n];
        let mut acc = 0u32;
        for i in 0..n {
            child_start[i] = acc;
            acc += child_count[i];
        }
        let mut children = vec![0u32; acc as usize];
        for i in 1..n {
            let p = self.parent[i] as usize;
            children[(child_start[p] + position[i] - 1) as usize] = i as u32;
        }
        Ok(Tree {
            labels,
            label_names,
            label_index,
            parent: self.parent,
            first_child,
            last_child,
            next_sibling,
            prev_sibling,
            position,
            child_count,
            child_start,
            children,
            text: self.text,
        })
    }
}
