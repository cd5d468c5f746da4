//! Path enumeration and slicing checked against a concrete interpreter on
//! randomly generated functions.

use std::collections::BTreeSet;

use cdi_core::code_model::ast::{Stmt, StmtKind};
use cdi_core::code_model::{enumerate_paths, parse_function, slice_under_condition, FunctionModel, Terminal};
use cdi_core::constraint::{Constraint, Expression, Operator, Value};
use cdi_core::sat::is_satisfiable;
use proptest::prelude::*;

mod common;
use common::{assignments, function, interpret, Outcome};

fn slice_cond() -> impl Strategy<Value = Constraint> {
    let leaf = prop_oneof![
        (0i64..3).prop_map(|k| Constraint::Atom(Expression::new("a", Operator::Eq, Value::num(k)))),
        Just(Constraint::Atom(Expression::new("a", Operator::Eq, Value::None))),
        Just(Constraint::Atom(Expression::new("s", Operator::Eq, Value::str("x")))),
        Just(Constraint::Atom(Expression::new("f", Operator::Eq, Value::Bool(true)))),
    ];
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Constraint::not),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Constraint::and(x, y)),
            (inner.clone(), inner).prop_map(|(x, y)| Constraint::or(x, y)),
        ]
    })
}

fn non_if_ids(body: &[Stmt]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for s in body {
        s.walk(&mut |s| {
            if !matches!(s.kind, StmtKind::If { .. }) {
                out.insert(s.id);
            }
        });
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn paths_partition_inputs_and_match_terminals(src in function()) {
        let original = parse_function(&src).unwrap();
        let m = FunctionModel::from_source(&src).unwrap();
        let set = enumerate_paths(&m, 256);
        prop_assume!(!set.truncated);
        for p in &set.paths {
            prop_assert!(is_satisfiable(&p.formula()).unwrap(), "unsatisfiable path {p}");
        }
        for asg in assignments() {
            let matching: Vec<_> = set
                .paths
                .iter()
                .filter(|p| p.atoms.iter().all(|e| e.holds(&asg[&e.param])))
                .collect();
            prop_assert_eq!(matching.len(), 1, "{:?} matched {} paths\n{}", asg, matching.len(), src);
            let (outcome, _) = interpret(&original, &asg);
            let expected = if outcome == Outcome::Error { Terminal::ErrorEnd } else { Terminal::Normal };
            prop_assert_eq!(matching[0].terminal, expected, "{:?}\n{}", asg, src);
        }
    }

    #[test]
    fn slices_keep_executed_statements(src in function(), cond in slice_cond()) {
        let m = FunctionModel::from_source(&src).unwrap();
        let sl = slice_under_condition(&m, &cond);
        let kept = non_if_ids(&sl.model.body);
        let stmt_ids = non_if_ids(&m.body);
        for asg in assignments() {
            if cond.eval(&asg) != Some(true) {
                continue;
            }
            let (_, trace) = interpret(&m, &asg);
            for id in trace.intersection(&stmt_ids) {
                prop_assert!(kept.contains(id), "statement {} missing from slice under {}\n{}", id, cond, src);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(src in function()) {
        let m = FunctionModel::from_source(&src).unwrap();
        prop_assert_eq!(cdi_core::code_model::normalize_function(&m), m);
    }
}
