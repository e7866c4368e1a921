use std::collections::BTreeSet;

use super::{Formula, MsoError};
use crate::datalog::{Atom, Pred, Program, Rule};

fn set_var(pred: &str) -> String {
    format!("P_{pred}")
}

fn atom(a: &Atom) -> Result<Formula, MsoError> {
    match &a.pred {
        Pred::Builtin(r) => Ok(Formula::Rel(r.clone(), a.args.clone())),
        Pred::Idb(q) => Ok(Formula::In(a.args[0].clone(), set_var(q))),
        Pred::Cat(c) => Err(MsoError::Unsupported(format!("caterpillar atom {c}"))),
        Pred::Prop(p) => Err(MsoError::Unsupported(format!("propositional predicate {p}"))),
    }
}

/// `∀z1 … ∀zk (b1 ∧ … ∧ bm → h)`.
fn rule(r: &Rule) -> Result<Formula, MsoError> {
    let body = r.body.iter().map(atom).collect::<Result<Vec<_>, _>>()?;
    let mut f = Formula::implies(Formula::And(body), atom(&r.head)?);
    for v in r.vars().into_iter().rev() {
        f = Formula::forall(v, f);
    }
    Ok(f)
}

/// `φ(x) = ∀P1 … ∀Pn (SAT(P1, …, Pn) → x ∈ P_query)`, where `SAT` says the
/// sets are closed under every rule. `x` is the only free variable.
pub fn encode_program(p: &Program, query: &str) -> Result<Formula, MsoError> {
    let sat = p.rules.iter().map(rule).collect::<Result<Vec<_>, _>>()?;
    let mut preds: BTreeSet<&str> = p.idb_predicates();
    preds.insert(query);
    let mut f = Formula::implies(Formula::And(sat), Formula::In("x".into(), set_var(query)));
    for q in preds.into_iter().rev() {
        f = Formula::forall_set(&set_var(q), f);
    }
    Ok(f)
}


#[cfg(test)]
mod agreement {
    use crate::datalog::parse_program;
    use crate::eval::evaluate;
    use crate::mso::{encode_program, eval_mso_unary_with, MsoCaps};
    use crate::tree::parse_term_tree;

    #[test]
    fn even_program_on_four_nodes() {
        let p = parse_program(include_str!("../../tests/data/even.dl")).unwrap();
        let f = encode_program(&p, "C0").unwrap();
        let caps = MsoCaps { max_nodes: 6, max_set_quantifiers: 6 };
        for t in ["a(a,a,a)", "a(b,a,a)", "b(a(a),b)", "a(a(a(a)))", "b"] {
            let t = parse_term_tree(t).unwrap();
            let want = evaluate(&p, &t).unwrap().set_of("C0");
            assert_eq!(eval_mso_unary_with(&t, &f, caps).unwrap(), want);
        }
    }
}
