//! Translations between Elog programs and monadic datalog.

use std::collections::{BTreeMap, BTreeSet};

use super::{Condition, ElogError, ElogProgram, ElogRule, Mode, Parent, PathPattern, PathStep};
use crate::datalog::{Atom, Pred, Program, Rule};
use crate::eval::EvalError;
use crate::normalize::{to_tmnf, NormalizeOptions, Signature};
use crate::tree::{Label, Relation};

/// The `child`/`label` chain denoted by `subelem(from, to, path)`. The empty
/// path yields no atoms; the caller identifies `to` with `from`.
pub fn expand_subelem(path: &PathPattern, from: &str, to: &str, fresh: &mut dyn FnMut() -> String) -> Vec<Atom> {
    let mut out = Vec::new();
    let mut cur = from.to_string();
    for (i, step) in path.steps.iter().enumerate() {
        let next = if i + 1 == path.steps.len() { to.to_string() } else { fresh() };
        out.push(Atom::rel(Relation::Child, &[&cur, &next]));
        if let PathStep::Label(l) = step {
            out.push(Atom::rel(Relation::Label(l.clone()), &[&next]));
        }
        cur = next;
    }
    out
}

fn fresh_vars(r: &ElogRule) -> impl FnMut() -> String {
    let mut used: BTreeSet<String> = BTreeSet::new();
    used.insert(r.var.clone());
    used.insert(r.parent_var.clone());
    for c in &r.conditions {
        used.extend(c.vars().into_iter().map(String::from));
    }
    used.extend(r.refs.iter().map(|(_, v)| v.clone()));
    let mut n = 0;
    move || loop {
        n += 1;
        let cand = format!("Z{n}");
        if used.insert(cand.clone()) {
            return cand;
        }
    }
}

fn rule_to_datalog(r: &ElogRule) -> Result<Rule, ElogError> {
    let mut fresh = fresh_vars(r);
    // An empty link identifies the head variable with the parent variable.
    let rename = |v: &str| if r.path.is_empty() && v == r.var { r.parent_var.clone() } else { v.to_string() };
    let head = Atom::idb(&r.head, &rename(&r.var));
    let mut body = vec![match &r.parent {
        Parent::Root => Atom::rel(Relation::Root, &[&r.parent_var]),
        Parent::Pattern(p) => Atom::idb(p, &r.parent_var),
    }];
    body.extend(expand_subelem(&r.path, &r.parent_var, &r.var, &mut fresh));
    for c in &r.conditions {
        match c {
            Condition::Leaf(x) => body.push(Atom::rel(Relation::Leaf, &[&rename(x)])),
            Condition::LastSibling(x) => body.push(Atom::rel(Relation::LastSibling, &[&rename(x)])),
            Condition::FirstSibling(x) => {
                let p = fresh();
                body.push(Atom::rel(Relation::FirstChild, &[&p, &rename(x)]));
            }
            Condition::NextSibling(x, y) => body.push(Atom::rel(Relation::NextSibling, &[&rename(x), &rename(y)])),
            Condition::Contains(x, y, path) => body.extend(expand_subelem(path, &rename(x), &rename(y), &mut fresh)),
            d => return Err(ElogError::DeltaAtom { line: r.line, atom: d.to_string() }),
        }
    }
    for (p, v) in &r.refs {
        body.push(Atom::idb(p, &rename(v)));
    }
    Ok(Rule::new(head, body))
}

/// Expands every `subelem`, `contains` and `firstsibling` atom. Every
/// pattern becomes a query predicate of the output.
pub fn elog_to_datalog(e: &ElogProgram) -> Result<Program, ElogError> {
    let rules = e.rules.iter().map(rule_to_datalog).collect::<Result<Vec<_>, _>>()?;
    let mut p = Program::new(rules);
    for name in e.patterns() {
        p = p.with_query(name);
    }
    Ok(p)
}

/// How a unary datalog atom shows up in an Elog rule.
enum Item {
    Cond(Condition),
    Ref(String),
}

struct Builder {
    used: BTreeSet<String>,
    dom: String,
    helpers: BTreeMap<String, String>,
    alphabet: BTreeSet<Label>,
    rules: Vec<ElogRule>,
}

impl Builder {
    fn fresh(&mut self, base: &str) -> String {
        let mut cand = base.to_string();
        let mut n = 0;
        while self.used.contains(&cand) || super::is_reserved(&cand) {
            n += 1;
            cand = format!("{base}_{n}");
        }
        self.used.insert(cand.clone());
        cand
    }

    fn push(&mut self, head: &str, parent: Parent, parent_var: &str, path: PathPattern, items: Vec<(Item, &str)>) {
        let var = if path.is_empty() { parent_var } else { "X" };
        let mut r = ElogRule {
            head: head.to_string(),
            var: var.to_string(),
            parent,
            parent_var: parent_var.to_string(),
            path,
            conditions: Vec::new(),
            refs: Vec::new(),
            line: 0,
        };
        for (item, v) in items {
            match item {
                Item::Cond(c) => r.conditions.push(c),
                Item::Ref(p) => r.refs.push((p, v.to_string())),
            }
        }
        self.rules.push(r);
    }

    /// Helper pattern for the nodes with label `l`.
    fn label_pattern(&mut self, l: &Label) -> String {
        let key = format!("label {l}");
        if let Some(n) = self.helpers.get(&key) {
            return n.clone();
        }
        let name = self.fresh(&format!("lab_{l}"));
        self.helpers.insert(key, name.clone());
        let dom = self.dom.clone();
        self.push(&name, Parent::Pattern(dom), "X0", PathPattern::label(l), Vec::new());
        name
    }

    /// Helper pattern for the nodes whose label is in the alphabet but not `l`.
    fn not_label_pattern(&mut self, l: &Label) -> String {
        let key = format!("not {l}");
        if let Some(n) = self.helpers.get(&key) {
            return n.clone();
        }
        let name = self.fresh(&format!("nlab_{l}"));
        self.helpers.insert(key, name.clone());
        let dom = self.dom.clone();
        for other in self.alphabet.clone().iter().filter(|o| *o != l) {
            self.push(&name, Parent::Pattern(dom.clone()), "X0", PathPattern::label(other), Vec::new());
        }
        name
    }

    fn root_pattern(&mut self) -> String {
        if let Some(n) = self.helpers.get("root") {
            return n.clone();
        }
        let name = self.fresh("is_root");
        self.helpers.insert("root".into(), name.clone());
        self.push(&name, Parent::Root, "X", PathPattern::default(), Vec::new());
        name
    }

    fn item(&mut self, a: &Atom, v: &str) -> Item {
        match &a.pred {
            Pred::Idb(q) => Item::Ref(q.clone()),
            Pred::Builtin(Relation::Root) => Item::Ref(self.root_pattern()),
            Pred::Builtin(Relation::Label(l)) => Item::Ref(self.label_pattern(l)),
            Pred::Builtin(Relation::NotLabel(l)) => Item::Ref(self.not_label_pattern(l)),
            Pred::Builtin(Relation::Leaf) => Item::Cond(Condition::Leaf(v.into())),
            Pred::Builtin(Relation::FirstSibling) => Item::Cond(Condition::FirstSibling(v.into())),
            Pred::Builtin(Relation::LastSibling) => Item::Cond(Condition::LastSibling(v.into())),
            other => unreachable!("not a unary TMNF atom: {other:?}"),
        }
    }

    /// A pattern (or `root`) standing for the unary atom `a`, usable as a
    /// parent; otherwise `dom` plus a condition.
    fn parent_for(&mut self, a: &Atom, v: &str) -> (Parent, Vec<(Item, String)>) {
        if a.pred == Pred::Builtin(Relation::Root) {
            return (Parent::Root, Vec::new());
        }
        match self.item(a, v) {
            Item::Ref(p) => (Parent::Pattern(p), Vec::new()),
            c => (Parent::Pattern(self.dom.clone()), vec![(c, v.to_string())]),
        }
    }

    fn tmnf_rule(&mut self, r: &Rule) -> Result<(), ElogError> {
        let head = match &r.head.pred {
            Pred::Idb(h) => h.clone(),
            other => return Err(ElogError::Shape { line: 0, message: format!("unexpected head {other:?}") }),
        };
        let x = r.head.args[0].as_str();
        let binary = r.body.iter().find(|a| a.args.len() == 2);
        let Some(axis) = binary else {
            // Unary atoms on the head variable only.
            let atoms: Vec<&Atom> = r.body.iter().collect();
            let pick = atoms
                .iter()
                .position(|a| matches!(a.pred, Pred::Builtin(Relation::Label(_))))
                .or_else(|| atoms.iter().position(|a| a.pred == Pred::Builtin(Relation::Root)))
                .or_else(|| atoms.iter().position(|a| matches!(a.pred, Pred::Idb(_))));
            let rest: Vec<&Atom> = atoms.iter().enumerate().filter(|(i, _)| Some(*i) != pick).map(|(_, a)| *a).collect();
            let items: Vec<Item> = rest.iter().map(|a| self.item(a, "X")).collect();
            let items: Vec<(Item, &str)> = items.into_iter().map(|i| (i, "X")).collect();
            match pick.map(|i| &atoms[i].pred) {
                Some(Pred::Builtin(Relation::Label(l))) => {
                    let dom = self.dom.clone();
                    self.push(&head, Parent::Pattern(dom), "X0", PathPattern::label(l), items);
                }
                Some(Pred::Builtin(Relation::Root)) => self.push(&head, Parent::Root, "X", PathPattern::default(), items),
                Some(Pred::Idb(q)) => {
                    let q = q.clone();
                    self.push(&head, Parent::Pattern(q), "X", PathPattern::default(), items);
                }
                _ => {
                    let dom = self.dom.clone();
                    self.push(&head, Parent::Pattern(dom), "X", PathPattern::default(), items);
                }
            }
            return Ok(());
        };
        let unary = r.body.iter().find(|a| a.args.len() == 1).expect("TMNF rule with an axis has a unary atom");
        let x0 = unary.args[0].as_str();
        let forward = axis.args[0] == x0;
        let dom = Parent::Pattern(self.dom.clone());
        match (&axis.pred, forward) {
            (Pred::Builtin(Relation::FirstChild), true) => {
                let (parent, extra) = self.parent_for(unary, "X0");
                let mut items: Vec<(Item, &str)> = extra.into_iter().map(|(i, _)| (i, "X0")).collect();
                items.push((Item::Cond(Condition::FirstSibling("X".into())), "X"));
                self.push(&head, parent, "X0", PathPattern::any(), items);
            }
            (Pred::Builtin(Relation::FirstChild), false) => {
                let it = self.item(unary, "Y");
                let items = vec![
                    (Item::Cond(Condition::Contains("X".into(), "Y".into(), PathPattern::any())), "X"),
                    (Item::Cond(Condition::FirstSibling("Y".into())), "Y"),
                    (it, "Y"),
                ];
                self.push(&head, dom, "X", PathPattern::default(), items);
            }
            (Pred::Builtin(Relation::NextSibling), fwd) => {
                let cond = if fwd {
                    Condition::NextSibling("X0".into(), "X".into())
                } else {
                    Condition::NextSibling("X".into(), "X0".into())
                };
                let it = self.item(unary, "X0");
                self.push(&head, dom, "X", PathPattern::default(), vec![(Item::Cond(cond), "X"), (it, "X0")]);
            }
            (other, _) => {
                return Err(ElogError::Shape { line: 0, message: format!("no Elog form for `{other:?}` in `{r}` ({x})") })
            }
        }
        Ok(())
    }
}

/// [`datalog_to_elog_over`] with the labels the program mentions.
pub fn datalog_to_elog(p: &Program) -> Result<ElogProgram, ElogError> {
    datalog_to_elog_over(p, &p.labels())
}

/// Translates `p` through its TMNF into an Elog program defining the same
/// patterns, plus a `dom` pattern matching every node and helper patterns
/// for label tests. `not_label_a` is read relative to `alphabet`.
pub fn datalog_to_elog_over(p: &Program, alphabet: &BTreeSet<Label>) -> Result<ElogProgram, ElogError> {
    let opts = NormalizeOptions { signature: Signature::Unranked, ..Default::default() };
    let tmnf = to_tmnf(p, &opts).map_err(EvalError::from)?.program;
    let mut b = Builder {
        used: tmnf.all_names().into_iter().chain(p.all_names()).collect(),
        dom: String::new(),
        helpers: BTreeMap::new(),
        alphabet: alphabet.iter().cloned().chain(p.labels()).collect(),
        rules: Vec::new(),
    };
    b.dom = b.fresh("dom");
    let dom = b.dom.clone();
    b.push(&dom, Parent::Root, "X", PathPattern::default(), Vec::new());
    b.push(&dom, Parent::Pattern(dom.clone()), "X0", PathPattern::any(), Vec::new());
    for r in &tmnf.rules {
        b.tmnf_rule(r)?;
    }
    Ok(ElogProgram { mode: Mode::Minus, rules: b.rules })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;
    use crate::elog::parse_elog;

    #[test]
    fn subelem_expansion() {
        let mut n = 0;
        let mut fresh = || {
            n += 1;
            format!("Z{n}")
        };
        let atoms = expand_subelem(&"a.b".parse().unwrap(), "X", "Y", &mut fresh);
        let text: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
        assert_eq!(text, ["child(X,Z1)", "label_a(Z1)", "child(Z1,Y)", "label_b(Y)"]);
        assert!(expand_subelem(&PathPattern::default(), "X", "Y", &mut fresh).is_empty());
        assert_eq!(expand_subelem(&PathPattern::any(), "X", "Y", &mut fresh).len(), 1);
    }

    #[test]
    fn wrapper_rule_expands_to_six_atoms() {
        let e = parse_elog("item(X) :- root(X0), subelem(X0, X, \"table._.tr\").").unwrap();
        let p = elog_to_datalog(&e).unwrap();
        assert_eq!(p.rules[0].body.len(), 6);
        assert_eq!(p.queries, vec!["item"]);
    }

    #[test]
    fn specialization_and_epsilon() {
        let e = parse_elog("p(X) :- q(X).\nr(X) :- q(X0), subelem(X0, X, \"\"), leaf(X).").unwrap();
        let p = elog_to_datalog(&e).unwrap();
        assert_eq!(p.rules[0].to_string(), parse_program("p(X) :- q(X).").unwrap().rules[0].to_string());
        assert_eq!(p.rules[1].to_string(), parse_program("r(X0) :- q(X0), leaf(X0).").unwrap().rules[0].to_string());
    }

    #[test]
    fn label_rule_schema() {
        let e = datalog_to_elog(&parse_program("p(X) :- label_a(X).").unwrap()).unwrap();
        let text = e.to_string();
        assert!(text.contains("dom(X) :- root(X)."), "{text}");
        assert!(text.contains("dom(X) :- dom(X0), subelem(X0, X, \"_\")."), "{text}");
        assert!(text.contains("p(X) :- dom(X0), subelem(X0, X, \"a\")."), "{text}");
        assert_eq!(parse_elog(&text).unwrap(), e);
    }

    #[test]
    fn nextsibling_schema() {
        let e = datalog_to_elog(&parse_program("q(X) :- root(X). p(X) :- q(X0), nextsibling(X0, X).").unwrap());
        let text = e.unwrap().to_string();
        assert!(text.contains("p(X) :- dom(X), nextsibling(X0, X), q(X0)."), "{text}");
    }
}
