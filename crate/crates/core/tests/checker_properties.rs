//! Checker invariants on generated functions.

use cdi_core::checker::{check_crisp, check_fuzzy, check_usage_predicate, leaves_match_verbatim, CheckConfig, Kind};
use cdi_core::code_model::{enumerate_paths, ignored_conditions, FunctionModel};
use cdi_core::constraint::{Constraint, PredKind};
use proptest::prelude::*;

mod common;
use common::function;

/// A constraint assembled from atoms that occur verbatim on the paths.
fn verbatim_constraint(atoms: &[cdi_core::Expression], picks: &[(usize, u8)]) -> Option<Constraint> {
    if atoms.is_empty() {
        return None;
    }
    let mut it = picks
        .iter()
        .map(|(i, _)| Constraint::Atom(atoms[i % atoms.len()].clone()));
    let mut c = it.next()?;
    for ((_, how), next) in picks[1..].iter().zip(it) {
        c = match how % 4 {
            0 => Constraint::and(c, next),
            1 => Constraint::or(c, next),
            2 => Constraint::implies(c, next),
            _ => Constraint::and(Constraint::not(c), next),
        };
    }
    Some(c)
}

fn branchy(uses: &[bool], with_else: bool) -> String {
    let mut src = String::from("def f(k, x):\n");
    for (i, u) in uses.iter().enumerate() {
        let kw = if i == 0 { "if" } else { "elif" };
        src.push_str(&format!("    {kw} k == {i}:\n"));
        src.push_str(if *u { "        g(x)\n" } else { "        h()\n" });
    }
    if with_else {
        src.push_str("    else:\n        g(x)\n");
    }
    src
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fuzzy_mode_contains_crisp_mode(src in function(), picks in prop::collection::vec((0usize..64, 0u8..4), 1..4)) {
        let m = FunctionModel::from_source(&src).unwrap();
        let set = enumerate_paths(&m, 256);
        let atoms: Vec<_> = set.paths.iter().flat_map(|p| p.atoms.iter().cloned()).collect();
        let Some(c) = verbatim_constraint(&atoms, &picks) else { return Ok(()) };
        let rel: Vec<_> = set.paths.iter().enumerate().collect();
        prop_assert!(leaves_match_verbatim(&c, &rel));
        let cfg = CheckConfig::default();
        prop_assert_eq!(check_fuzzy(&c, &set.paths, &cfg).status, check_crisp(&c, &set.paths, true).status);
    }

    #[test]
    fn exact_cover_is_never_incomplete(uses in prop::collection::vec(any::<bool>(), 1..5), with_else in any::<bool>()) {
        let m = FunctionModel::from_source(&branchy(&uses, with_else)).unwrap();
        let b = ignored_conditions("x", &m);
        let a = Constraint::disjunction(b.clone());
        let c = Constraint::implies(a, Constraint::Pred(PredKind::Ignored, "x".into()));
        let v = check_usage_predicate(&c, &m);
        prop_assert_ne!(v.kind, Some(Kind::Incompleteness), "B = {:?}", b);
    }

    #[test]
    fn verdicts_are_deterministic(src in function(), picks in prop::collection::vec((0usize..64, 0u8..4), 1..4)) {
        let m = FunctionModel::from_source(&src).unwrap();
        let set = enumerate_paths(&m, 256);
        let atoms: Vec<_> = set.paths.iter().flat_map(|p| p.atoms.iter().cloned()).collect();
        let Some(c) = verbatim_constraint(&atoms, &picks) else { return Ok(()) };
        let cfg = CheckConfig::default();
        prop_assert_eq!(check_fuzzy(&c, &set.paths, &cfg), check_fuzzy(&c, &set.paths, &cfg));
    }
}
