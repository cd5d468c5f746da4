//! Static enumeration of feasible paths through a normalized function.
//!
//! Conditions are lowered into disjoint alternatives, each a conjunction of
//! atoms, by forking at every short-circuit operator. A path is extended by
//! one alternative at a time and dropped as soon as its atoms become
//! unsatisfiable.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::{Constraint, Expression, Operator, Value};
use crate::sat;

use super::ast::*;
use super::{normalize_function, FunctionModel, Truthiness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terminal {
    Normal,
    ErrorEnd,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Normal => "NORMAL",
            Terminal::ErrorEnd => "ERROR_END",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConstraint {
    pub atoms: Vec<Expression>,
    pub terminal: Terminal,
    /// Final value of every parameter, rendered as an expression.
    pub bindings: BTreeMap<String, String>,
    /// Ids of the statements executed along the path.
    pub visited: Vec<usize>,
    /// `(if statement id, branch index)`; the index equals the number of
    /// guarded branches when the else part (or fall-through) was taken.
    pub taken: Vec<(usize, usize)>,
}

impl PathConstraint {
    pub fn formula(&self) -> Constraint {
        Constraint::conjunction(self.atoms.iter().cloned().map(Constraint::Atom))
    }

    pub fn mentions(&self, param: &str) -> bool {
        self.atoms.iter().any(|a| a.param == param)
    }
}

impl fmt::Display for PathConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | ", self.terminal)?;
        if self.atoms.is_empty() {
            return f.write_str("(True)");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ^ ")?;
            }
            write!(f, "({a})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<PathConstraint>,
    /// Set when enumeration stopped at the path limit.
    pub truncated: bool,
}

/// One line per path: `terminal | atom ^ atom ^ ...`.
pub fn format_paths(set: &PathSet) -> String {
    let mut out = String::new();
    for p in &set.paths {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

pub fn enumerate_paths(m: &FunctionModel, max_paths: usize) -> PathSet {
    explore(m, &Constraint::Const(true), max_paths)
}

/// Enumerates the paths that are feasible together with `assume`.
pub(crate) fn explore(m: &FunctionModel, assume: &Constraint, max_paths: usize) -> PathSet {
    let owned;
    let m = if m.normalized {
        m
    } else {
        owned = normalize_function(m);
        &owned
    };
    let max_paths = max_paths.max(1);
    let mut out = PathSet::default();
    let mut stack = vec![State {
        frames: vec![(&m.body[..], 0)],
        atoms: Vec::new(),
        env: BTreeMap::new(),
        visited: Vec::new(),
        taken: Vec::new(),
    }];
    if !feasible(assume, &[]) {
        return out;
    }
    let low = Lowerer { m };
    while let Some(mut st) = stack.pop() {
        let Some(&(block, idx)) = st.frames.last() else {
            out.paths.push(finish(m, st, Terminal::Normal));
            if out.paths.len() >= max_paths && !stack.is_empty() {
                out.truncated = true;
                break;
            }
            continue;
        };
        if idx >= block.len() {
            st.frames.pop();
            stack.push(st);
            continue;
        }
        st.frames.last_mut().unwrap().1 += 1;
        let s = &block[idx];
        st.visited.push(s.id);
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = low.resolve(value, &st.env);
                bind(target, v, &mut st.env);
                stack.push(st);
            }
            StmtKind::AugAssign { target, .. } => {
                bind(target, Expr::Opaque("aug".into()), &mut st.env);
                stack.push(st);
            }
            StmtKind::Return { kind, .. } => {
                let t = match kind {
                    ReturnKind::ErrorEnd => Terminal::ErrorEnd,
                    _ => Terminal::Normal,
                };
                out.paths.push(finish(m, st, t));
                if out.paths.len() >= max_paths && !stack.is_empty() {
                    out.truncated = true;
                    break;
                }
            }
            StmtKind::Raise(_) | StmtKind::Warn(_) => {
                out.paths.push(finish(m, st, Terminal::ErrorEnd));
                if out.paths.len() >= max_paths && !stack.is_empty() {
                    out.truncated = true;
                    break;
                }
            }
            StmtKind::If { branches, orelse } => {
                let mut successors = Vec::new();
                let mut prefixes: Vec<Vec<Expression>> = vec![Vec::new()];
                for (i, b) in branches.iter().enumerate() {
                    let cond = low.resolve(&b.cond, &st.env);
                    let pos = low.lower(&cond, true);
                    let neg = low.lower(&cond, false);
                    for pfx in &prefixes {
                        for alt in &pos {
                            let atoms = extend(&st.atoms, pfx, alt);
                            if feasible(assume, &atoms) {
                                successors.push((i, atoms, &b.body[..]));
                            }
                        }
                    }
                    let mut next = Vec::new();
                    for pfx in &prefixes {
                        for alt in &neg {
                            let joined = extend(&[], pfx, alt);
                            if feasible(assume, &extend(&st.atoms, &joined, &[])) {
                                next.push(joined);
                            }
                        }
                    }
                    prefixes = next;
                }
                let else_body: &[Stmt] = orelse.as_deref().unwrap_or(&[]);
                for pfx in &prefixes {
                    successors.push((branches.len(), extend(&st.atoms, pfx, &[]), else_body));
                }
                for (i, atoms, body) in successors.into_iter().rev() {
                    let mut next = st.clone();
                    next.atoms = atoms;
                    next.taken.push((s.id, i));
                    next.frames.push((body, 0));
                    stack.push(next);
                }
            }
            StmtKind::Assert { .. } | StmtKind::Expr(_) | StmtKind::Pass => stack.push(st),
        }
    }
    out
}

#[derive(Clone)]
struct State<'a> {
    frames: Vec<(&'a [Stmt], usize)>,
    atoms: Vec<Expression>,
    env: BTreeMap<String, Expr>,
    visited: Vec<usize>,
    taken: Vec<(usize, usize)>,
}

fn finish(m: &FunctionModel, st: State<'_>, terminal: Terminal) -> PathConstraint {
    let bindings = m
        .params
        .iter()
        .map(|p| {
            let v = st.env.get(p).map(|e| e.to_string()).unwrap_or_else(|| p.clone());
            (p.clone(), v)
        })
        .collect();
    PathConstraint {
        atoms: st.atoms,
        terminal,
        bindings,
        visited: st.visited,
        taken: st.taken,
    }
}

fn bind(target: &Target, value: Expr, env: &mut BTreeMap<String, Expr>) {
    match target {
        Target::Name(n) => {
            env.insert(n.clone(), value);
        }
        Target::Tuple(ts) => {
            for t in ts {
                bind(t, Expr::Opaque("unpack".into()), env);
            }
        }
        _ => {}
    }
}

fn extend(base: &[Expression], a: &[Expression], b: &[Expression]) -> Vec<Expression> {
    let mut out = base.to_vec();
    for x in a.iter().chain(b) {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

pub(crate) fn feasible(assume: &Constraint, atoms: &[Expression]) -> bool {
    let f = Constraint::conjunction(std::iter::once(assume.clone()).chain(atoms.iter().cloned().map(Constraint::Atom)));
    // Sort conflicts (a name compared to both strings and numbers) cannot be
    // decided; keep such paths.
    sat::is_satisfiable(&f).unwrap_or(true)
}

pub(crate) struct Lowerer<'m> {
    pub m: &'m FunctionModel,
}

type Alts = Vec<Vec<Expression>>;

fn truthy(v: &Value) -> bool {
    match v {
        Value::Bool(b) => *b,
        Value::None => false,
        Value::Num(n) => n.value() != 0.0,
        Value::Str(s) => !s.is_empty(),
    }
}

fn cmp_operator(op: CmpOp) -> Option<Operator> {
    Some(match op {
        CmpOp::Eq => Operator::Eq,
        CmpOp::Ne => Operator::Ne,
        CmpOp::Lt => Operator::Lt,
        CmpOp::Gt => Operator::Gt,
        CmpOp::Le => Operator::Le,
        CmpOp::Ge => Operator::Ge,
        CmpOp::In | CmpOp::NotIn => return None,
    })
}

impl Lowerer<'_> {
    /// Substitutes local variables by their current symbolic values.
    pub fn resolve(&self, e: &Expr, env: &BTreeMap<String, Expr>) -> Expr {
        match e {
            Expr::Name(n) => env.get(n).cloned().unwrap_or_else(|| e.clone()),
            Expr::Symbol { name, .. } => Expr::Name(name.clone()),
            Expr::BoolOp { op, values } => Expr::BoolOp {
                op: *op,
                values: values.iter().map(|v| self.resolve(v, env)).collect(),
            },
            Expr::Not(x) => Expr::Not(Box::new(self.resolve(x, env))),
            Expr::Compare { left, op, right } => Expr::Compare {
                left: Box::new(self.resolve(left, env)),
                op: *op,
                right: Box::new(self.resolve(right, env)),
            },
            _ => e.clone(),
        }
    }

    fn name_truth(&self, p: &str, positive: bool) -> Alts {
        let (op, v) = match self.m.truthiness_of(p) {
            Truthiness::Bool => (Operator::Ne, Value::Bool(false)),
            Truthiness::NotNone => (Operator::Ne, Value::None),
        };
        let op = if positive { op } else { op.complement() };
        vec![vec![Expression::new(p, op, v)]]
    }

    fn constant(b: bool) -> Alts {
        if b {
            vec![Vec::new()]
        } else {
            Vec::new()
        }
    }

    /// Disjoint alternatives under which `e` evaluates to `positive`.
    pub fn lower(&self, e: &Expr, positive: bool) -> Alts {
        match e {
            Expr::Const(v) => Self::constant(truthy(v) == positive),
            Expr::Opaque(_) => Self::constant(positive),
            Expr::Name(p) | Expr::Symbol { name: p, .. } => self.name_truth(p, positive),
            Expr::Not(x) => self.lower(x, !positive),
            Expr::BoolOp { op, values } => {
                // `a and b` is true on pos(a)×pos(b), false on neg(a) ∪ pos(a)×neg(b)
                let conj = *op == BoolOpKind::And;
                let mut done: Alts = Vec::new();
                let mut pending: Alts = vec![Vec::new()];
                for v in values {
                    let cont = self.lower(v, conj);
                    let stop = self.lower(v, !conj);
                    for p in &pending {
                        for s in &stop {
                            done.push(extend(&[], p, s));
                        }
                    }
                    let mut next = Vec::new();
                    for p in &pending {
                        for c in &cont {
                            next.push(extend(&[], p, c));
                        }
                    }
                    pending = next;
                }
                // for `and`: pending is the true case; for `or`: pending is the false case
                let (trues, falses) = if conj { (pending, done) } else { (done, pending) };
                let chosen = if positive { trues } else { falses };
                chosen
                    .into_iter()
                    .filter(|alt| feasible(&Constraint::Const(true), alt))
                    .collect()
            }
            Expr::Compare { left, op, right } => {
                let Some(op) = cmp_operator(*op) else {
                    return vec![Vec::new()];
                };
                let op = if positive { op } else { op.complement() };
                match (&**left, &**right) {
                    (Expr::Name(p), Expr::Const(v)) => vec![vec![Expression::new(p, op, v.clone())]],
                    (Expr::Const(v), Expr::Name(p)) => vec![vec![Expression::new(p, op.mirrored(), v.clone())]],
                    (Expr::Const(a), Expr::Const(b)) => Self::constant(a.compare(op, b)),
                    (Expr::Name(p), Expr::Name(q)) if p == q => {
                        Self::constant(matches!(op, Operator::Eq | Operator::Le | Operator::Ge))
                    }
                    // Outcome depends on something the atom language cannot
                    // express; both outcomes stay possible.
                    _ => vec![Vec::new()],
                }
            }
            _ => vec![Vec::new()],
        }
    }

    /// The condition as a constraint: a disjunction of its alternatives.
    pub fn condition(&self, e: &Expr, env: &BTreeMap<String, Expr>, positive: bool) -> Constraint {
        let e = self.resolve(e, env);
        let alts = self.lower(&e, positive);
        Constraint::disjunction(
            alts.into_iter()
                .map(|alt| Constraint::conjunction(alt.into_iter().map(Constraint::Atom))),
        )
    }
}
