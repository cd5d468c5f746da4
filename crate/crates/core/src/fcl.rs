//! Fuzzy constraint logic: similarity between expressions and constraints,
//! and the membership degree of a constraint with respect to code paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{PathConstraint, Terminal};
use crate::constraint::{Constraint, Expression, Operator, Value};
use crate::sat::{self, SatError};

pub const DEFAULT_BETA: f64 = 1.0 / 3.0;
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FclConfig {
    /// Weight of the operator component.
    pub beta: f64,
    /// Membership threshold.
    pub tau: f64,
}

impl Default for FclConfig {
    fn default() -> Self {
        FclConfig {
            beta: DEFAULT_BETA,
            tau: DEFAULT_TAU,
        }
    }
}

impl FclConfig {
    pub fn new(beta: f64, tau: f64) -> Result<FclConfig, FclError> {
        let cfg = FclConfig { beta, tau };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FclError> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(FclError::InvalidConfig(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(FclError::InvalidConfig(format!(
                "tau must lie in [0, 1], got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// Weight of each of the two name/value components: `(1 - beta) / 2`.
    pub fn alpha(&self) -> f64 {
        (1.0 - self.beta) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FclError {
    #[error("no path atoms to compare against")]
    EmptyEnvironment,
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Normalized Levenshtein similarity over characters. Two empty strings are
/// identical.
pub fn nld(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

pub fn op_similarity(a: Operator, b: Operator) -> f64 {
    let (x, y) = (a.embedding().as_array(), b.embedding().as_array());
    let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    // one square root of the product keeps integer cases exact
    dot / (nx * ny).sqrt()
}

pub fn expr_similarity(e1: &Expression, e2: &Expression, cfg: &FclConfig) -> f64 {
    let alpha = cfg.alpha();
    let s = alpha * nld(&e1.param, &e2.param)
        + cfg.beta * op_similarity(e1.op, e2.op)
        + alpha * nld(&e1.value.similarity_text(), &e2.value.similarity_text());
    s.clamp(0.0, 1.0)
}

/// Most similar environment atom; ties go to the earliest.
pub fn best_match<'a>(e: &Expression, env: &'a [Expression], cfg: &FclConfig) -> Option<(&'a Expression, f64)> {
    let mut best: Option<(&Expression, f64)> = None;
    for cand in env {
        let s = expr_similarity(e, cand, cfg);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((cand, s));
        }
    }
    best
}

/// Similarity of a constraint to a set of atoms. Negation complements,
/// conjunction takes the minimum and disjunction the maximum; negation is
/// not folded into atom operators first, so `!(a = 1)` scores 0 against
/// `a = 1`. A usage
/// predicate scores the best name similarity of its parameter.
pub fn constraint_similarity(c: &Constraint, env: &[Expression], cfg: &FclConfig) -> Result<f64, FclError> {
    if env.is_empty() {
        return Err(FclError::EmptyEnvironment);
    }
    Ok(rho(c, env, cfg))
}

fn rho(c: &Constraint, env: &[Expression], cfg: &FclConfig) -> f64 {
    match c {
        Constraint::Atom(e) => best_match(e, env, cfg).map(|(_, s)| s).unwrap_or(0.0),
        Constraint::Not(x) => 1.0 - rho(x, env, cfg),
        Constraint::And(a, b) => rho(a, env, cfg).min(rho(b, env, cfg)),
        Constraint::Or(a, b) => rho(a, env, cfg).max(rho(b, env, cfg)),
        Constraint::Implies(a, b) => (1.0 - rho(a, env, cfg)).max(rho(b, env, cfg)),
        Constraint::Pred(_, x) => env.iter().map(|e| nld(x, &e.param)).fold(0.0, f64::max),
        Constraint::Const(true) => 1.0,
        Constraint::Const(false) => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    pub path: usize,
    pub rho: f64,
    /// Whether the closest-match constraint agrees with the path.
    pub holds: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub value: f64,
    pub per_path: Vec<PathScore>,
}

fn kind(v: &Value) -> Option<std::mem::Discriminant<Value>> {
    (!matches!(v, Value::None)).then(|| std::mem::discriminant(v))
}

/// Whether `e` can be restated over `param` without mixing sorts with the
/// atoms of `env` that mention it.
fn sort_compatible(e: &Expression, param: &str, env: &[Expression]) -> bool {
    let Some(k) = kind(&e.value) else { return true };
    env.iter()
        .filter(|a| a.param == param)
        .all(|a| kind(&a.value).is_none_or(|ka| ka == k))
}

/// `c` with the parameter of every atom replaced by the parameter of its
/// closest sort-compatible atom in `env`. Operators and values stay as
/// written, so the instance still says what `c` says, about the names the
/// path uses.
pub fn closest_instance(c: &Constraint, env: &[Expression], cfg: &FclConfig) -> Constraint {
    c.map_atoms(&mut |e| {
        let candidates: Vec<Expression> = env
            .iter()
            .filter(|a| sort_compatible(e, &a.param, env))
            .cloned()
            .collect();
        match best_match(e, &candidates, cfg) {
            Some((m, _)) => Expression::new(m.param.clone(), e.op, e.value.clone()),
            None => e.clone(),
        }
    })
}

/// Mean over paths of ρ when the closest instance agrees with the path
/// (satisfiable on normal paths, unsatisfiable on error paths) and 1 − ρ
/// otherwise. `c` is brought to negation normal form first. `paths` pairs
/// each path with the index reported in the evidence.
pub fn membership(c: &Constraint, paths: &[(usize, &PathConstraint)], cfg: &FclConfig) -> Result<Membership, FclError> {
    if paths.is_empty() {
        return Err(FclError::EmptyEnvironment);
    }
    let c = c.normalize();
    let mut per_path = Vec::with_capacity(paths.len());
    for (idx, p) in paths {
        if p.atoms.is_empty() {
            return Err(FclError::EmptyEnvironment);
        }
        let r = rho(&c, &p.atoms, cfg);
        let ci = closest_instance(&c, &p.atoms, cfg);
        let joint = sat::is_satisfiable(&Constraint::and(ci, p.formula()))?;
        let holds = match p.terminal {
            Terminal::Normal => joint,
            Terminal::ErrorEnd => !joint,
        };
        per_path.push(PathScore {
            path: *idx,
            rho: r,
            holds,
            score: if holds { r } else { 1.0 - r },
        });
    }
    let value = per_path.iter().map(|s| s.score).sum::<f64>() / per_path.len() as f64;
    Ok(Membership { value, per_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::{enumerate_paths, FunctionModel};
    use crate::constraint::{parse_constraint, Value};

    /// Textbook dynamic-programming edit distance, independent of strsim.
    fn ld_oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    fn nld_oracle(a: &str, b: &str) -> f64 {
        let m = a.chars().count().max(b.chars().count());
        if m == 0 {
            1.0
        } else {
            1.0 - ld_oracle(a, b) as f64 / m as f64
        }
    }

    fn e(text: &str) -> Expression {
        match parse_constraint(text).unwrap() {
            Constraint::Atom(e) => e,
            other => panic!("not an atom: {other}"),
        }
    }

    #[test]
    fn nld_examples() {
        assert_eq!(nld("gamma", "gamma"), 1.0);
        assert!((nld("gamma", "gama") - 0.8).abs() < 1e-12);
        assert!((nld("gamma", "gama") - nld_oracle("gamma", "gama")).abs() < 1e-12);
        assert_eq!(nld("", ""), 1.0);
    }

    #[test]
    fn operator_cosines() {
        assert_eq!(op_similarity(Operator::Lt, Operator::Gt), 0.5);
        assert!((op_similarity(Operator::Lt, Operator::Le) - 0.8165).abs() < 1e-4);
        for op in Operator::ALL {
            assert_eq!(op_similarity(op, op), 1.0);
        }
    }

    #[test]
    fn expression_similarity_examples() {
        let cfg = FclConfig::default();
        assert!((expr_similarity(&e("gamma = 10"), &e("gamma = 10"), &cfg) - 1.0).abs() < 1e-12);
        let typo = (nld_oracle("gamma", "gama") + 1.0 + 1.0) / 3.0;
        assert!((expr_similarity(&e("gamma = 10"), &e("gama = 10"), &cfg) - typo).abs() < 1e-12);
        assert!((expr_similarity(&e("x < 3"), &e("x > 3"), &cfg) - 2.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constraint_similarity_examples() {
        let cfg = FclConfig::default();
        let env = vec![e("a = 1"), e("b = 2")];
        assert_eq!(
            constraint_similarity(&parse_constraint("a = 1").unwrap(), &env, &cfg).unwrap(),
            1.0
        );
        let env1 = vec![e("a = 1")];
        let got = constraint_similarity(&parse_constraint("(a = 1) ^ (zzz = 9)").unwrap(), &env1, &cfg).unwrap();
        let expected = 1.0f64.min((nld_oracle("zzz", "a") + 1.0 + nld_oracle("9", "1")) / 3.0);
        assert!((got - expected).abs() < 1e-12);
        assert_eq!(
            constraint_similarity(&parse_constraint("!(a = 1)").unwrap(), &env1, &cfg).unwrap(),
            0.0
        );
        assert_eq!(
            constraint_similarity(&Constraint::Const(true), &[], &cfg),
            Err(FclError::EmptyEnvironment)
        );
    }

    #[test]
    fn predicate_leaf_uses_name_similarity() {
        let cfg = FclConfig::default();
        let env = vec![e("gama = 1"), e("affinity = \"x\"")];
        let got = constraint_similarity(&parse_constraint("ignore(gamma)").unwrap(), &env, &cfg).unwrap();
        assert!((got - 0.8).abs() < 1e-12);
    }

    const FIG5: &str = r#"
def fit(self, sample_weight):
  if sample_weight is not None and self.strategy == "uniform":
    raise ValueError("Warning Info")
  if sample_weight is not None:
    sample_weight = _check_sample_weight(sample_weight, X)
"#;

    #[test]
    fn exact_constraint_on_single_normal_path() {
        let m = FunctionModel::from_source("def f(a):\n    if a == 1:\n        return 1\n    raise E\n").unwrap();
        let set = enumerate_paths(&m, 256);
        let normal: Vec<_> = set
            .paths
            .iter()
            .enumerate()
            .filter(|(_, p)| p.terminal == Terminal::Normal)
            .collect();
        let mu = membership(&parse_constraint("a = 1").unwrap(), &normal, &FclConfig::default()).unwrap();
        assert_eq!(mu.value, 1.0);
    }

    #[test]
    fn typo_on_fig5_stays_above_threshold() {
        let m = FunctionModel::from_source(FIG5).unwrap();
        let set = enumerate_paths(&m, 256);
        let paths: Vec<_> = set.paths.iter().enumerate().collect();
        let c = parse_constraint("(sample_weight = None) v (stratgy != \"uniform\")").unwrap();
        let mu = membership(&c, &paths, &FclConfig::default()).unwrap();
        // the closest instance corrects the name, so every path agrees and
        // each scores its rho
        let r_err = (nld_oracle("stratgy", "strategy") + op_similarity(Operator::Ne, Operator::Eq) + 1.0) / 3.0;
        let sw = (1.0 + op_similarity(Operator::Eq, Operator::Ne) + 1.0) / 3.0;
        let r_err = r_err.max(sw);
        let r_mid = (nld_oracle("stratgy", "strategy") + 2.0) / 3.0;
        let expected = (r_err + r_mid.max(sw) + 1.0) / 3.0;
        assert!((mu.value - expected).abs() < 1e-9, "{} vs {expected}", mu.value);
        assert!(mu.value > DEFAULT_TAU);
        assert!(mu.per_path.iter().all(|s| s.holds));
    }

    #[test]
    fn closest_instance_renames_within_sort() {
        let cfg = FclConfig::default();
        let c = parse_constraint("(solver = \"lbfgs\") -> (alxha >= 0)")
            .unwrap()
            .normalize();
        let env = vec![e("solver = \"lbfgs\""), e("alpha < 0")];
        let want = parse_constraint("(solver != \"lbfgs\") v (alpha >= 0)").unwrap();
        assert_eq!(closest_instance(&c, &env, &cfg), want);
        // no numeric atom to borrow a name from: the atom is kept
        let only_str = vec![e("solver != \"lbfgs\"")];
        let got = closest_instance(&parse_constraint("alxha >= 0").unwrap(), &only_str, &cfg);
        assert_eq!(got, parse_constraint("alxha >= 0").unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(FclConfig::new(1.5, 0.5).is_err());
        assert!(FclConfig::new(0.2, -0.1).is_err());
        let c = FclConfig::new(0.2, 0.5).unwrap();
        assert!((2.0 * c.alpha() + c.beta - 1.0).abs() < 1e-12);
        let _ = Value::None;
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn op() -> impl Strategy<Value = Operator> {
            prop_oneof![
                Just(Operator::Eq),
                Just(Operator::Ne),
                Just(Operator::Lt),
                Just(Operator::Gt),
                Just(Operator::Le),
                Just(Operator::Ge),
            ]
        }

        fn expr() -> impl Strategy<Value = Expression> {
            (
                "[a-z_]{0,8}",
                op(),
                prop_oneof![
                    (-50i64..50).prop_map(Value::num),
                    "[a-z]{0,6}".prop_map(Value::str),
                    Just(Value::None),
                    any::<bool>().prop_map(Value::Bool),
                ],
            )
                .prop_map(|(p, o, v)| Expression::new(p, o, v))
        }

        fn constraint() -> impl Strategy<Value = Constraint> {
            let leaf = prop_oneof![
                expr().prop_map(Constraint::Atom),
                any::<bool>().prop_map(Constraint::Const)
            ];
            leaf.prop_recursive(4, 16, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(Constraint::not),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Constraint::and(a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Constraint::or(a, b)),
                    (inner.clone(), inner).prop_map(|(a, b)| Constraint::implies(a, b)),
                ]
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]

            #[test]
            fn nld_matches_oracle(a in "[a-c]{0,7}", b in "[a-c]{0,7}") {
                prop_assert!((nld(&a, &b) - nld_oracle(&a, &b)).abs() < 1e-12);
                prop_assert_eq!(nld(&a, &b), nld(&b, &a));
            }

            #[test]
            fn similarity_range_and_symmetry(e1 in expr(), e2 in expr(), beta in 0.0f64..=1.0) {
                let cfg = FclConfig { beta, tau: 0.5 };
                let s = expr_similarity(&e1, &e2, &cfg);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert!((s - expr_similarity(&e2, &e1, &cfg)).abs() < 1e-12);
                prop_assert!((expr_similarity(&e1, &e1, &cfg) - 1.0).abs() < 1e-12);
                prop_assert!((op_similarity(e1.op, e2.op) - op_similarity(e2.op, e1.op)).abs() < 1e-12);
            }

            #[test]
            fn extra_edit_never_raises_similarity(e1 in expr(), suffix in "[x-z]{1,3}") {
                let cfg = FclConfig::default();
                let mut far = e1.clone();
                far.param = format!("{}{}", e1.param, suffix);
                let mut farther = far.clone();
                farther.param.push('q');
                prop_assert!(expr_similarity(&e1, &farther, &cfg) <= expr_similarity(&e1, &far, &cfg) + 1e-12);
            }

            #[test]
            fn rho_in_range(c in constraint(), env in prop::collection::vec(expr(), 1..5)) {
                let r = constraint_similarity(&c, &env, &FclConfig::default()).unwrap();
                prop_assert!((0.0..=1.0).contains(&r));
            }

            #[test]
            fn conjunction_of_env_atoms_scores_one(env in prop::collection::vec(expr(), 1..5)) {
                let c = Constraint::conjunction(env.iter().cloned().map(Constraint::Atom));
                let r = constraint_similarity(&c, &env, &FclConfig::default()).unwrap();
                prop_assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }
}
