//! Conditional slicing and the conditions under which a parameter is ignored.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;

use super::ast::*;
use super::paths::{explore, feasible, Lowerer};
use super::{is_used, normalize_function, FunctionModel, DEFAULT_MAX_PATHS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub model: FunctionModel,
    /// No guard of the function tests a parameter of the condition, so the
    /// condition prunes nothing.
    pub unconstrained: bool,
    /// Path enumeration hit its limit; the slice is the whole body.
    pub truncated: bool,
}

/// Statements executed by at least one assignment satisfying `cond`.
/// Branches that `cond` rules out are dropped and an `if` whose outcome is
/// fixed by `cond` is replaced by the taken branch.
pub fn slice_under_condition(m: &FunctionModel, cond: &Constraint) -> Slice {
    let m = if m.normalized { m.clone() } else { normalize_function(m) };
    let tested: BTreeSet<String> = explore(&m, &Constraint::Const(true), DEFAULT_MAX_PATHS)
        .paths
        .iter()
        .flat_map(|p| p.atoms.iter().map(|a| a.param.clone()))
        .collect();
    let unconstrained = cond.params().is_disjoint(&tested);
    let set = explore(&m, cond, DEFAULT_MAX_PATHS);
    if set.truncated {
        return Slice {
            model: m,
            unconstrained,
            truncated: true,
        };
    }
    let mut visited = BTreeSet::new();
    let mut taken: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for p in &set.paths {
        visited.extend(p.visited.iter().copied());
        for (id, b) in &p.taken {
            taken.entry(*id).or_default().insert(*b);
        }
    }
    let body = prune(&m.body, &visited, &taken);
    let mut model = m;
    model.body = body;
    if !matches!(
        model.body.last().map(|s| &s.kind),
        Some(StmtKind::Return {
            kind: ReturnKind::Final,
            ..
        })
    ) {
        model.body.push(Stmt {
            id: 0,
            line: 0,
            kind: StmtKind::Return {
                kind: ReturnKind::Final,
                value: None,
                payload: None,
            },
        });
    }
    Slice {
        model,
        unconstrained,
        truncated: false,
    }
}

fn prune(body: &[Stmt], visited: &BTreeSet<usize>, taken: &BTreeMap<usize, BTreeSet<usize>>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        if !visited.contains(&s.id) {
            continue;
        }
        match &s.kind {
            StmtKind::If { branches, orelse } => {
                let idx = taken.get(&s.id).cloned().unwrap_or_default();
                let n = branches.len();
                if idx.len() == 1 {
                    let i = *idx.iter().next().unwrap();
                    let inner: &[Stmt] = if i < n {
                        &branches[i].body
                    } else {
                        orelse.as_deref().unwrap_or(&[])
                    };
                    out.extend(prune(inner, visited, taken));
                    continue;
                }
                let kept: Vec<IfBranch> = branches
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| idx.contains(i))
                    .map(|(_, b)| IfBranch {
                        cond: b.cond.clone(),
                        body: prune(&b.body, visited, taken),
                    })
                    .collect();
                let else_body = if idx.contains(&n) {
                    orelse.as_ref().map(|e| prune(e, visited, taken))
                } else {
                    None
                };
                if kept.is_empty() {
                    out.extend(else_body.unwrap_or_default());
                } else {
                    out.push(Stmt {
                        id: s.id,
                        line: s.line,
                        kind: StmtKind::If {
                            branches: kept,
                            orelse: else_body,
                        },
                    });
                }
            }
            _ => out.push(s.clone()),
        }
    }
    out
}

/// Top-level branch conditions under which `param` is not used, in source
/// order. A parameter never used yields the single condition `True`.
pub fn ignored_conditions(param: &str, m: &FunctionModel) -> Vec<Constraint> {
    let m = if m.normalized { m.clone() } else { normalize_function(m) };
    if !is_used(param, &m, true) {
        return vec![Constraint::Const(true)];
    }
    guard_conditions(param, &m, false)
}

/// Top-level branch conditions under which `param` is used. A parameter used
/// outside every guard yields `[true]`.
pub fn used_conditions(param: &str, m: &FunctionModel) -> Vec<Constraint> {
    let m = if m.normalized { m.clone() } else { normalize_function(m) };
    if !is_used(param, &m, true) {
        return Vec::new();
    }
    let out = guard_conditions(param, &m, true);
    if out.is_empty() {
        vec![Constraint::Const(true)]
    } else {
        out
    }
}

fn guard_conditions(param: &str, m: &FunctionModel, used: bool) -> Vec<Constraint> {
    let m = m.clone();
    let low = Lowerer { m: &m };
    let mut env = BTreeMap::new();
    let mut out = Vec::new();
    for s in &m.body {
        match &s.kind {
            StmtKind::Assign {
                target: Target::Name(n),
                value,
            } => {
                let v = low.resolve(value, &env);
                env.insert(n.clone(), v);
            }
            StmtKind::If { branches, orelse } => {
                let mut conds: Vec<Constraint> = branches.iter().map(|b| low.condition(&b.cond, &env, true)).collect();
                if orelse.is_some() {
                    let negs = branches.iter().map(|b| low.condition(&b.cond, &env, false));
                    conds.push(Constraint::conjunction(negs));
                }
                for c in conds {
                    if !feasible(&c, &[]) {
                        continue;
                    }
                    let sl = slice_under_condition(&m, &c);
                    if is_used(param, &sl.model, true) == used && !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            _ => {}
        }
    }
    out
}
