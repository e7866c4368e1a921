//! Evaluation of monadic datalog over trees.
//!
//! [`evaluate`] runs in time linear in program size times tree size: rules
//! are made connected ([`connect_rules`]), grounded along the functional
//! dependencies of the tree relations ([`ground`]), and the resulting
//! propositional Horn instance is closed by unit propagation
//! ([`horn_fixpoint`]). [`naive_fixpoint`] is a direct implementation of the
//! immediate consequence operator, used as an oracle.

mod ground;
mod horn;
mod naive;

pub use ground::{connect_rules, ground, AtomTable};
pub use horn::{horn_fixpoint, horn_fixpoint_naive, HornInstance};
pub use naive::{naive_fixpoint, naive_fixpoint_capped, GroundAtom, NaiveResult, NAIVE_CAP};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::datalog::{check, DatalogError, Program};
use crate::normalize::{to_tmnf, NormalizeError, NormalizeOptions, Signature};
use crate::tree::{NodeId, Relation, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error(transparent)]
    Invalid(#[from] DatalogError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("tree has {nodes} nodes, above the cap of {cap}")]
    Cap { nodes: usize, cap: usize },
    #[error("unknown query predicate `{0}`")]
    UnknownQuery(String),
}

/// The least model restricted to the predicates of the input program.
#[derive(Clone, Debug)]
pub struct EvalResult {
    atoms: AtomTable,
    model: Vec<bool>,
    visible: BTreeSet<String>,
    pub stats: EvalStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub rules: usize,
    pub clauses: usize,
    pub horn_size: usize,
}

impl EvalResult {
    /// Node ids of `pred`, ascending. Unknown predicates are empty.
    pub fn nodes_of(&self, pred: &str) -> Vec<usize> {
        let Some(&p) = self.atoms.index.get(pred) else {
            return Vec::new();
        };
        (0..self.atoms.n).filter(|&v| self.model[self.atoms.id(p, Some(v)) as usize]).collect()
    }

    pub fn set_of(&self, pred: &str) -> BTreeSet<NodeId> {
        self.nodes_of(pred).into_iter().map(NodeId).collect()
    }

    pub fn holds(&self, pred: &str, node: NodeId) -> bool {
        self.atoms.index.get(pred).is_some_and(|&p| self.model[self.atoms.id(p, Some(node.0)) as usize])
    }

    pub fn holds_prop(&self, pred: &str) -> bool {
        self.atoms.index.get(pred).is_some_and(|&p| self.model[self.atoms.id(p, None) as usize])
    }

    /// Predicates of the input program.
    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.visible.iter().map(String::as_str)
    }
}

/// Evaluates every predicate of `p` on `t`.
///
/// Programs using `child` or caterpillar atoms are first rewritten into
/// TMNF. `lastchild` and `child_k` are functional in both directions and are
/// grounded directly.
pub fn evaluate(p: &Program, t: &Tree) -> Result<EvalResult, EvalError> {
    check(p)?;
    let visible: BTreeSet<String> = p.all_names();
    let needs_rewrite = p.has_cat_atoms() || p.uses_relation(|r| *r == Relation::Child);
    let normalized;
    let source = if needs_rewrite {
        let opts = NormalizeOptions { signature: Signature::Unranked, ..Default::default() };
        normalized = to_tmnf(p, &opts)?.program;
        &normalized
    } else {
        p
    };
    let connected = connect_rules(source);
    let (h, atoms) = ground(&connected, t)?;
    let model = horn_fixpoint(&h);
    let stats = EvalStats { rules: connected.rules.len(), clauses: h.num_clauses(), horn_size: h.size() };
    Ok(EvalResult { atoms, model, visible, stats })
}

/// `{n | q(n)}` in the least model of `p` on `t`.
pub fn evaluate_query(p: &Program, t: &Tree, query: &str) -> Result<BTreeSet<NodeId>, EvalError> {
    if !p.idb_predicates().contains(query) {
        return Err(EvalError::UnknownQuery(query.to_string()));
    }
    Ok(evaluate(p, t)?.set_of(query))
}
