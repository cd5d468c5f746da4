//! Finite-domain satisfiability for crisp constraints.
//!
//! Atoms only ever compare one parameter to one literal, so every variable can
//! be decided over a small set of representative values: the literals it is
//! compared against, a fresh value distinct from all of them, and for numeric
//! sorts one witness per open interval between literals. Search is a
//! backtracking enumeration with three-valued pruning.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::constraint::{Constraint, Number, Operator, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Real,
    /// Interned string literals.
    Str,
    Bool,
    /// `None` plus the values of the inner sort.
    MaybeNone(Box<Sort>),
}

impl Sort {
    fn accepts(&self, v: &Value) -> bool {
        match (self, v) {
            (Sort::MaybeNone(_), Value::None) => true,
            (Sort::MaybeNone(inner), v) => inner.accepts(v),
            (Sort::Int | Sort::Real, Value::Num(_)) => true,
            (Sort::Str, Value::Str(_)) => true,
            (Sort::Bool, Value::Bool(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedVar {
    pub name: String,
    pub sort: Sort,
}

impl TypedVar {
    pub fn new(name: impl Into<String>, sort: Sort) -> TypedVar {
        TypedVar {
            name: name.into(),
            sort,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatQuery {
    pub vars: Vec<TypedVar>,
    pub formula: Constraint,
}

pub type Model = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("parameter `{name}` is used with incompatible sorts ({first} vs {second})")]
    SortMismatch {
        name: String,
        first: String,
        second: String,
    },
    #[error("parameter `{0}` has no declared sort")]
    UnknownSort(String),
    #[error("usage predicates cannot be decided by the solver: {0}")]
    FuzzyPredicate(String),
}

impl SatQuery {
    /// Builds a query whose sorts are inferred from the literals each
    /// parameter is compared against.
    pub fn infer(formula: Constraint) -> Result<SatQuery, SatError> {
        let vars = infer_sorts(&formula)?;
        Ok(SatQuery { vars, formula })
    }
}

#[derive(Default)]
struct Kinds {
    str_: bool,
    int: bool,
    real: bool,
    bool_: bool,
    none: bool,
}

fn kind_name(v: &Value) -> &'static str {
    match v {
        Value::Str(_) => "string",
        Value::Num(_) => "number",
        Value::Bool(_) => "bool",
        Value::None => "None",
    }
}

pub fn infer_sorts(formula: &Constraint) -> Result<Vec<TypedVar>, SatError> {
    let mut kinds: BTreeMap<String, (Kinds, Option<&'static str>)> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut err = None;
    formula.visit_leaves(&mut |leaf| match leaf {
        Constraint::Atom(e) => {
            if !kinds.contains_key(&e.param) {
                order.push(e.param.clone());
            }
            let (k, first) = kinds.entry(e.param.clone()).or_default();
            let this = kind_name(&e.value);
            match &e.value {
                Value::None => k.none = true,
                v => {
                    if let Some(prev) = first {
                        if *prev != this && err.is_none() {
                            err = Some(SatError::SortMismatch {
                                name: e.param.clone(),
                                first: prev.to_string(),
                                second: this.to_string(),
                            });
                        }
                    } else {
                        *first = Some(this);
                    }
                    match v {
                        Value::Str(_) => k.str_ = true,
                        Value::Bool(_) => k.bool_ = true,
                        Value::Num(n) if n.is_integer() => k.int = true,
                        Value::Num(_) => k.real = true,
                        Value::None => unreachable!(),
                    }
                }
            }
        }
        Constraint::Pred(..) if err.is_none() => {
            err = Some(SatError::FuzzyPredicate(leaf.to_string()));
        }
        _ => {}
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(order
        .into_iter()
        .map(|name| {
            let (k, _) = &kinds[&name];
            let base = if k.real {
                Sort::Real
            } else if k.int {
                Sort::Int
            } else if k.bool_ {
                Sort::Bool
            } else {
                Sort::Str
            };
            let sort = if k.none { Sort::MaybeNone(Box::new(base)) } else { base };
            TypedVar { name, sort }
        })
        .collect())
}

/// Representative values of one variable.
fn domain(sort: &Sort, literals: &BTreeSet<Value>) -> Vec<Value> {
    match sort {
        Sort::MaybeNone(inner) => {
            let mut d = vec![Value::None];
            d.extend(domain(inner, literals));
            d
        }
        Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Sort::Str => {
            let lits: Vec<&String> = literals
                .iter()
                .filter_map(|v| match v {
                    Value::Str(s) => Some(s),
                    _ => None,
                })
                .collect();
            let mut fresh = String::from("<other>");
            while lits.iter().any(|s| **s == fresh) {
                fresh.push('\'');
            }
            let mut d: Vec<Value> = lits.into_iter().map(|s| Value::Str(s.clone())).collect();
            d.push(Value::Str(fresh));
            d
        }
        Sort::Int | Sort::Real => {
            let mut nums: Vec<f64> = literals
                .iter()
                .filter_map(|v| match v {
                    Value::Num(n) => Some(n.value()),
                    _ => None,
                })
                .collect();
            nums.sort_by(|a, b| a.partial_cmp(b).unwrap());
            nums.dedup();
            let mut points: Vec<f64> = Vec::new();
            if nums.is_empty() {
                points.push(0.0);
            } else if *sort == Sort::Int {
                for c in &nums {
                    points.extend([c.floor() - 1.0, c.floor(), c.ceil(), c.ceil() + 1.0]);
                }
            } else {
                points.push(nums[0] - 1.0);
                for w in nums.windows(2) {
                    points.push((w[0] + w[1]) / 2.0);
                }
                points.extend(nums.iter().copied());
                points.push(nums[nums.len() - 1] + 1.0);
            }
            points.sort_by(|a, b| a.partial_cmp(b).unwrap());
            points.dedup();
            points.into_iter().map(|p| Value::Num(Number::from_f64(p))).collect()
        }
    }
}

/// Kleene evaluation under a partial assignment.
fn eval_partial(c: &Constraint, model: &BTreeMap<&str, &Value>) -> Option<bool> {
    match c {
        Constraint::Atom(e) => model.get(e.param.as_str()).map(|v| e.holds(v)),
        Constraint::Const(b) => Some(*b),
        Constraint::Not(x) => eval_partial(x, model).map(|b| !b),
        Constraint::And(a, b) => match (eval_partial(a, model), eval_partial(b, model)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Constraint::Or(a, b) => match (eval_partial(a, model), eval_partial(b, model)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Constraint::Implies(a, b) => match (eval_partial(a, model), eval_partial(b, model)) {
            (Some(false), _) | (_, Some(true)) => Some(true),
            (Some(true), Some(false)) => Some(false),
            _ => None,
        },
        Constraint::Pred(..) => None,
    }
}

pub fn check_sat(q: &SatQuery) -> Result<SatResult, SatError> {
    let mut sorts: BTreeMap<&str, &Sort> = BTreeMap::new();
    for v in &q.vars {
        if let Some(prev) = sorts.insert(&v.name, &v.sort) {
            if prev != &v.sort {
                return Err(SatError::SortMismatch {
                    name: v.name.clone(),
                    first: format!("{prev:?}"),
                    second: format!("{:?}", v.sort),
                });
            }
        }
    }
    let mut literals: BTreeMap<&str, BTreeSet<Value>> = BTreeMap::new();
    let mut err = None;
    q.formula.visit_leaves(&mut |leaf| {
        if err.is_some() {
            return;
        }
        match leaf {
            Constraint::Atom(e) => match sorts.get(e.param.as_str()) {
                None => err = Some(SatError::UnknownSort(e.param.clone())),
                Some(sort) if !sort.accepts(&e.value) => {
                    err = Some(SatError::SortMismatch {
                        name: e.param.clone(),
                        first: format!("{sort:?}"),
                        second: kind_name(&e.value).to_string(),
                    })
                }
                Some(_) => {
                    literals.entry(e.param.as_str()).or_default().insert(e.value.clone());
                }
            },
            Constraint::Pred(..) => err = Some(SatError::FuzzyPredicate(leaf.to_string())),
            _ => {}
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    // Variables that the formula never mentions cannot affect the verdict but
    // still receive a witness value.
    let empty = BTreeSet::new();
    let domains: Vec<(&str, Vec<Value>)> = q
        .vars
        .iter()
        .map(|v| {
            let lits = literals.get(v.name.as_str()).unwrap_or(&empty);
            (v.name.as_str(), domain(&v.sort, lits))
        })
        .collect();
    let mut model: BTreeMap<&str, &Value> = BTreeMap::new();
    if search(&q.formula, &domains, 0, &mut model) {
        Ok(SatResult::Sat(
            model.into_iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        ))
    } else {
        Ok(SatResult::Unsat)
    }
}

fn search<'a>(
    f: &Constraint,
    domains: &'a [(&'a str, Vec<Value>)],
    idx: usize,
    model: &mut BTreeMap<&'a str, &'a Value>,
) -> bool {
    match eval_partial(f, model) {
        Some(false) => return false,
        Some(true) => {
            // fill the rest with any value
            for (name, dom) in &domains[idx..] {
                model.insert(name, &dom[0]);
            }
            return true;
        }
        None => {}
    }
    let Some((name, dom)) = domains.get(idx) else {
        return false;
    };
    for v in dom {
        model.insert(name, v);
        if search(f, domains, idx + 1, model) {
            return true;
        }
    }
    model.remove(name);
    false
}

/// Satisfiability of a crisp formula with inferred sorts.
pub fn is_satisfiable(formula: &Constraint) -> Result<bool, SatError> {
    Ok(check_sat(&SatQuery::infer(formula.clone())?)?.is_sat())
}

/// Validity: the negation is unsatisfiable.
pub fn is_valid(formula: &Constraint) -> Result<bool, SatError> {
    Ok(!is_satisfiable(&Constraint::not(formula.clone()).normalize())?)
}

/// Whether `a` logically implies `b`.
pub fn implies(a: &Constraint, b: &Constraint) -> Result<bool, SatError> {
    let q = Constraint::and(a.clone(), Constraint::not(b.clone()).normalize());
    Ok(!is_satisfiable(&q)?)
}

/// Every operator applied to a variable of the given sort, for generators.
pub fn applicable_operators(sort: &Sort) -> &'static [Operator] {
    match sort {
        Sort::Int | Sort::Real => &Operator::ALL,
        _ => &[Operator::Eq, Operator::Ne],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_constraint;

    fn sat(s: &str) -> bool {
        is_satisfiable(&parse_constraint(s).unwrap()).unwrap()
    }

    #[test]
    fn contradictory_equalities() {
        assert!(!sat("(x = 1) ^ (x = 2)"));
    }

    #[test]
    fn empty_interval() {
        assert!(!sat("(x < 3) ^ (x > 10)"));
        assert!(sat("(x > 3) ^ (x < 10)"));
    }

    #[test]
    fn integer_gap_is_unsat_but_real_gap_is_sat() {
        assert!(!sat("(x > 3) ^ (x < 4)"));
        assert!(sat("(x > 3) ^ (x < 3.5)"));
    }

    #[test]
    fn none_and_strings() {
        assert!(sat("(x != None) ^ (x != \"a\")"));
        assert!(!sat("(x = None) ^ (x = \"a\")"));
        assert!(sat("(x != \"a\") ^ (x != \"b\")"));
    }

    #[test]
    fn statsmodels_warning_path_with_witness() {
        let f = parse_constraint(
            r#"((trend != "n") ^ (seasonal != False)) ^ ((deterministic != None) ^ ((trend != "n") v (seasonal = True)))"#,
        )
        .unwrap();
        let q = SatQuery::infer(f.clone()).unwrap();
        match check_sat(&q).unwrap() {
            SatResult::Sat(model) => {
                assert_eq!(f.eval(&model), Some(true));
                assert_eq!(model["seasonal"], Value::Bool(true));
                assert_ne!(model["trend"], Value::str("n"));
                assert_ne!(model["deterministic"], Value::None);
            }
            SatResult::Unsat => panic!("expected sat"),
        }
    }

    #[test]
    fn sort_errors() {
        let f = parse_constraint("(x = 1) ^ (x = \"a\")").unwrap();
        assert!(matches!(SatQuery::infer(f), Err(SatError::SortMismatch { .. })));
        let q = SatQuery {
            vars: vec![TypedVar::new("x", Sort::Int), TypedVar::new("x", Sort::Bool)],
            formula: parse_constraint("x = 1").unwrap(),
        };
        assert!(matches!(check_sat(&q), Err(SatError::SortMismatch { .. })));
        let q = SatQuery {
            vars: vec![],
            formula: parse_constraint("x = 1").unwrap(),
        };
        assert_eq!(check_sat(&q), Err(SatError::UnknownSort("x".into())));
        let f = parse_constraint("ignore(x)").unwrap();
        assert!(matches!(SatQuery::infer(f), Err(SatError::FuzzyPredicate(_))));
    }

    #[test]
    fn implication_checks() {
        let a = parse_constraint("(a = 1) ^ (b = 2)").unwrap();
        let b = parse_constraint("(a = 1) v (b = 2)").unwrap();
        assert!(implies(&a, &b).unwrap());
        assert!(!implies(&b, &a).unwrap());
        assert!(is_valid(&parse_constraint("(x < 3) v (x >= 3)").unwrap()).unwrap());
    }
}
