//! Shared generators and oracles: random Python functions over `a`
//! (optional int), `s` (optional string), `f` (bool) and the local copy
//! `t = a`, a concrete interpreter for them, and typed formulas with an
//! exhaustive satisfiability oracle.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cdi_core::code_model::ast::{BoolOpKind, CmpOp, Expr, ReturnKind, Stmt, StmtKind, Target};
use cdi_core::code_model::FunctionModel;
use cdi_core::constraint::{Constraint, Expression, Operator, Value};
use proptest::prelude::*;

pub fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("a is None".to_string()),
        Just("a is not None".to_string()),
        (0i64..3).prop_map(|k| format!("a == {k}")),
        (0i64..3).prop_map(|k| format!("a != {k}")),
        (0i64..3).prop_map(|k| format!("(a is not None and a < {k})")),
        (0i64..3).prop_map(|k| format!("(a is not None and a >= {k})")),
        Just("t is None".to_string()),
        Just("t == 1".to_string()),
        Just("s is None".to_string()),
        Just("s == \"x\"".to_string()),
        Just("s != \"y\"".to_string()),
        Just("s in (\"x\", \"y\")".to_string()),
        Just("f".to_string()),
        Just("not f".to_string()),
        Just("f == True".to_string()),
    ]
}

pub fn cond() -> impl Strategy<Value = String> {
    atom().prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| format!("not ({c})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x} and {y})")),
            (inner.clone(), inner).prop_map(|(x, y)| format!("({x} or {y})")),
        ]
    })
}

fn simple() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("pass".to_string()),
        Just("raise ValueError(\"e\")".to_string()),
        Just("warnings.warn(\"w\")".to_string()),
        Just("return 1".to_string()),
        Just("a = 1".to_string()),
        Just("t = None".to_string()),
    ]
}

fn indent(lines: &[String]) -> Vec<String> {
    lines.iter().map(|l| format!("    {l}")).collect()
}

fn block(depth: u32) -> BoxedStrategy<Vec<String>> {
    let stmt: BoxedStrategy<Vec<String>> = if depth == 0 {
        simple().prop_map(|s| vec![s]).boxed()
    } else {
        prop_oneof![
            2 => simple().prop_map(|s| vec![s]),
            3 => (
                prop::collection::vec((cond(), block(depth - 1)), 1..3),
                prop::option::of(block(depth - 1)),
            )
                .prop_map(|(branches, orelse)| {
                    let mut out = Vec::new();
                    for (i, (c, body)) in branches.iter().enumerate() {
                        out.push(format!("{} {c}:", if i == 0 { "if" } else { "elif" }));
                        out.extend(indent(body));
                    }
                    if let Some(e) = orelse {
                        out.push("else:".to_string());
                        out.extend(indent(&e));
                    }
                    out
                }),
        ]
        .boxed()
    };
    prop::collection::vec(stmt, 1..4).prop_map(|v| v.concat()).boxed()
}

pub fn function() -> impl Strategy<Value = String> {
    block(2).prop_map(|body| {
        let mut src = String::from("def f(a, s, f):\n    t = a\n");
        for l in indent(&body) {
            src.push_str(&l);
            src.push('\n');
        }
        src
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Normal,
    Error,
}

/// Python-like evaluation of the generated subset.
pub fn eval(e: &Expr, env: &BTreeMap<String, Value>) -> Value {
    match e {
        Expr::Name(n) => env[n].clone(),
        Expr::Const(v) => v.clone(),
        Expr::Not(x) => Value::Bool(!truthy(&eval(x, env))),
        Expr::BoolOp { op, values } => {
            let mut last = Value::Bool(*op == BoolOpKind::And);
            for v in values {
                last = eval(v, env);
                let t = truthy(&last);
                if (*op == BoolOpKind::And && !t) || (*op == BoolOpKind::Or && t) {
                    return last;
                }
            }
            last
        }
        Expr::Compare { left, op, right } => {
            let l = eval(left, env);
            let b = match op {
                CmpOp::In | CmpOp::NotIn => {
                    let Expr::Tuple(items) = right.as_ref() else {
                        panic!("in over {right:?}")
                    };
                    let found = items.iter().any(|i| eval(i, env) == l);
                    found == (*op == CmpOp::In)
                }
                _ => {
                    let r = eval(right, env);
                    let op = match op {
                        CmpOp::Eq => Operator::Eq,
                        CmpOp::Ne => Operator::Ne,
                        CmpOp::Lt => Operator::Lt,
                        CmpOp::Gt => Operator::Gt,
                        CmpOp::Le => Operator::Le,
                        CmpOp::Ge => Operator::Ge,
                        _ => unreachable!(),
                    };
                    l.compare(op, &r)
                }
            };
            Value::Bool(b)
        }
        other => panic!("outside the generated subset: {other:?}"),
    }
}

pub fn truthy(v: &Value) -> bool {
    match v {
        Value::None => false,
        Value::Bool(b) => *b,
        Value::Num(n) => n.value() != 0.0,
        Value::Str(s) => !s.is_empty(),
    }
}

pub fn run(body: &[Stmt], env: &mut BTreeMap<String, Value>, trace: &mut BTreeSet<usize>) -> Option<Outcome> {
    for s in body {
        trace.insert(s.id);
        match &s.kind {
            StmtKind::Assign {
                target: Target::Name(n),
                value,
            } => {
                let v = eval(value, env);
                env.insert(n.clone(), v);
            }
            StmtKind::If { branches, orelse } => {
                let mut done = false;
                for b in branches {
                    if truthy(&eval(&b.cond, env)) {
                        if let Some(o) = run(&b.body, env, trace) {
                            return Some(o);
                        }
                        done = true;
                        break;
                    }
                }
                if !done {
                    if let Some(e) = orelse {
                        if let Some(o) = run(e, env, trace) {
                            return Some(o);
                        }
                    }
                }
            }
            StmtKind::Raise(_) | StmtKind::Warn(_) => return Some(Outcome::Error),
            StmtKind::Return {
                kind: ReturnKind::ErrorEnd,
                ..
            } => return Some(Outcome::Error),
            StmtKind::Return { .. } => return Some(Outcome::Normal),
            StmtKind::Pass => {}
            other => panic!("outside the generated subset: {other:?}"),
        }
    }
    None
}

pub fn interpret(m: &FunctionModel, assignment: &BTreeMap<String, Value>) -> (Outcome, BTreeSet<usize>) {
    let mut env = assignment.clone();
    let mut trace = BTreeSet::new();
    let o = run(&m.body, &mut env, &mut trace).unwrap_or(Outcome::Normal);
    (o, trace)
}

pub fn assignments() -> Vec<BTreeMap<String, Value>> {
    let a = [Value::None, Value::num(0), Value::num(1), Value::num(2)];
    let s = [Value::None, Value::str("x"), Value::str("y")];
    let f = [Value::Bool(true), Value::Bool(false)];
    let mut out = Vec::new();
    for va in &a {
        for vs in &s {
            for vf in &f {
                out.push(BTreeMap::from([
                    ("a".to_string(), va.clone()),
                    ("s".to_string(), vs.clone()),
                    ("f".to_string(), vf.clone()),
                ]));
            }
        }
    }
    out
}

pub fn op() -> impl Strategy<Value = Operator> {
    prop::sample::select(Operator::ALL.to_vec())
}

/// Atoms over three typed variables: `x` an optional integer, `y` a string,
/// `z` a boolean.
pub fn typed_atom() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        (op(), 0i64..4).prop_map(|(o, k)| Constraint::Atom(Expression::new("x", o, Value::num(k)))),
        any::<bool>().prop_map(|eq| Constraint::Atom(Expression::new(
            "x",
            if eq { Operator::Eq } else { Operator::Ne },
            Value::None
        ))),
        (any::<bool>(), prop::sample::select(vec!["p", "q"])).prop_map(|(eq, s)| {
            Constraint::Atom(Expression::new(
                "y",
                if eq { Operator::Eq } else { Operator::Ne },
                Value::str(s),
            ))
        }),
        (any::<bool>(), any::<bool>()).prop_map(|(eq, b)| {
            Constraint::Atom(Expression::new(
                "z",
                if eq { Operator::Eq } else { Operator::Ne },
                Value::Bool(b),
            ))
        }),
    ]
}

pub fn typed_formula() -> impl Strategy<Value = Constraint> {
    typed_atom().prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Constraint::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Constraint::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Constraint::or(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Constraint::implies(a, b)),
        ]
    })
}

pub fn domain_x() -> Vec<Value> {
    vec![Value::None, Value::num(0), Value::num(1), Value::num(2)]
}

pub fn domain_y() -> Vec<Value> {
    vec![Value::str("p"), Value::str("q"), Value::str("fresh")]
}

pub fn domain_z() -> Vec<Value> {
    vec![Value::Bool(true), Value::Bool(false)]
}

/// Restricts `x` to the four-element domain so exhaustive search is exact.
pub fn bounded(f: &Constraint) -> Constraint {
    let dom = Constraint::disjunction(
        domain_x()
            .into_iter()
            .map(|v| Constraint::Atom(Expression::new("x", Operator::Eq, v))),
    );
    Constraint::conjunction([
        f.clone(),
        dom,
        Constraint::Atom(Expression::new("x", Operator::Ne, Value::None)).or_tautology(),
        Constraint::Atom(Expression::new("y", Operator::Ne, Value::str("p"))).or_tautology(),
        Constraint::Atom(Expression::new("z", Operator::Eq, Value::Bool(true))).or_tautology(),
    ])
}

/// `c v !c`: mentions a variable without constraining it, so every query
/// carries all three sorts.
pub trait Tautology {
    fn or_tautology(self) -> Constraint;
}

impl Tautology for Constraint {
    fn or_tautology(self) -> Constraint {
        Constraint::or(self.clone(), Constraint::not(self))
    }
}

pub fn brute_force(f: &Constraint) -> bool {
    for x in domain_x() {
        for y in domain_y() {
            for z in domain_z() {
                let asg = BTreeMap::from([
                    ("x".to_string(), x.clone()),
                    ("y".to_string(), y.clone()),
                    ("z".to_string(), z),
                ]);
                if f.eval(&asg) == Some(true) {
                    return true;
                }
            }
        }
    }
    false
}
