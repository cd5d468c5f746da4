//! Rewrites a parsed function into the analyzable core form.
//!
//! * member reads `self.x` become parameters `x`
//! * calls and other opaque computations become fresh `call_*` inputs
//! * `raise`, warnings and failed asserts become error returns
//! * a final return capturing all parameter bindings is appended
//! * statement-level conditional expressions become `if`/`else`

use std::collections::{BTreeMap, BTreeSet};

use crate::constraint::Value;

use super::ast::*;
use super::{FunctionModel, STRING_ID_BASE};

pub fn normalize_function(m: &FunctionModel) -> FunctionModel {
    if m.normalized {
        return m.clone();
    }
    let mut locals = BTreeSet::new();
    for s in &m.body {
        s.walk(&mut |s| {
            if let StmtKind::Assign { target, .. } | StmtKind::AugAssign { target, .. } = &s.kind {
                collect_target_names(target, &mut locals);
            }
        });
    }
    let mut n = Normalizer {
        originals: m.params.clone(),
        extra: Vec::new(),
        symbols: Vec::new(),
        counts: BTreeMap::new(),
        members: Vec::new(),
        locals,
        strings: m.string_table.clone(),
    };
    let mut body = n.block(&m.body);
    let params = n.all_params();
    let known: BTreeSet<&str> = params.iter().map(String::as_str).collect();
    fill_payloads(&mut body, None, &known);
    let payload = params
        .iter()
        .map(|p| format!("({p} = {{{p}}})"))
        .collect::<Vec<_>>()
        .join(" ^ ");
    body.push(Stmt {
        id: 0,
        line: 0,
        kind: StmtKind::Return {
            kind: ReturnKind::Final,
            value: None,
            payload: Some(payload),
        },
    });
    let mut out = FunctionModel {
        name: m.name.clone(),
        params,
        defaults: m.defaults.clone(),
        body,
        string_table: n.strings,
        is_method: m.is_method,
        members: n.members,
        normalized: true,
        truthiness: m.truthiness.clone(),
    };
    out.renumber();
    out
}

fn collect_target_names(t: &Target, out: &mut BTreeSet<String>) {
    match t {
        Target::Name(n) => {
            out.insert(n.clone());
        }
        Target::Tuple(ts) => ts.iter().for_each(|t| collect_target_names(t, out)),
        _ => {}
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Cond,
    Value,
}

struct Normalizer {
    originals: Vec<String>,
    /// Member attributes and free names, by first appearance.
    extra: Vec<String>,
    symbols: Vec<String>,
    counts: BTreeMap<String, usize>,
    members: Vec<String>,
    locals: BTreeSet<String>,
    strings: BTreeMap<String, u64>,
}

fn is_self(e: &Expr) -> bool {
    matches!(e, Expr::Name(n) if n == "self" || n == "cls")
}

fn binop_name(op: &str) -> &'static str {
    match op {
        "+" => "add",
        "-" => "sub",
        "*" => "mul",
        "/" => "div",
        "//" => "floordiv",
        "%" => "mod",
        "@" => "matmul",
        "**" => "pow",
        "|" => "or",
        "&" => "and",
        "^" => "xor",
        "<<" => "lshift",
        ">>" => "rshift",
        _ => "op",
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

impl Normalizer {
    fn all_params(&self) -> Vec<String> {
        let mut out = self.originals.clone();
        out.extend(self.extra.iter().cloned());
        out.extend(self.symbols.iter().cloned());
        out
    }

    fn is_known(&self, n: &str) -> bool {
        self.originals.iter().any(|p| p == n)
            || self.extra.iter().any(|p| p == n)
            || self.symbols.iter().any(|p| p == n)
    }

    fn member(&mut self, attr: &str) -> Expr {
        if !self.is_known(attr) {
            self.extra.push(attr.to_string());
        }
        if !self.members.iter().any(|m| m == attr) {
            self.members.push(attr.to_string());
        }
        Expr::Name(attr.to_string())
    }

    fn name(&mut self, n: &str) -> Expr {
        if !self.locals.contains(n) && !self.is_known(n) {
            self.extra.push(n.to_string());
        }
        Expr::Name(n.to_string())
    }

    fn intern(&mut self, s: &str) {
        let next = STRING_ID_BASE + self.strings.len() as u64;
        self.strings.entry(s.to_string()).or_insert(next);
    }

    fn fresh_symbol(&mut self, base: &str, args: Vec<Expr>) -> Expr {
        let base = format!("call_{}", sanitize(base));
        let k = self.counts.entry(base.clone()).or_insert(0);
        *k += 1;
        let mut name = if *k == 1 { base.clone() } else { format!("{base}_{k}") };
        while self.originals.contains(&name) || self.extra.contains(&name) || self.locals.contains(&name) {
            *k += 1;
            name = format!("{base}_{k}");
        }
        self.symbols.push(name.clone());
        Expr::Symbol { name, args }
    }

    /// Names read by `e` after member rewriting, deduplicated. Used for the
    /// operands of opaque computations, which only matter for data flow.
    fn operand_names(&mut self, e: &Expr, out: &mut Vec<Expr>) {
        match e {
            Expr::Attribute { value, attr } if is_self(value) => {
                let m = self.member(attr);
                if !out.contains(&m) {
                    out.push(m);
                }
            }
            Expr::Name(n) if n == "self" || n == "cls" => {}
            Expr::Name(n) => {
                let m = Expr::Name(n.clone());
                if !out.contains(&m) {
                    out.push(m);
                }
            }
            Expr::Const(_) | Expr::Opaque(_) => {}
            Expr::Attribute { value, .. } => self.operand_names(value, out),
            Expr::Call { func, args } => {
                match &**func {
                    Expr::Name(_) => {}
                    Expr::Attribute { value, .. } => self.operand_names(value, out),
                    other => self.operand_names(other, out),
                }
                for a in args {
                    self.operand_names(a, out);
                }
            }
            Expr::Subscript { value, index } => {
                self.operand_names(value, out);
                index.iter().for_each(|a| self.operand_names(a, out));
            }
            Expr::BoolOp { values, .. } => values.iter().for_each(|a| self.operand_names(a, out)),
            Expr::Not(e) | Expr::Unary { operand: e, .. } => self.operand_names(e, out),
            Expr::Compare { left, right, .. } | Expr::BinOp { left, right, .. } => {
                self.operand_names(left, out);
                self.operand_names(right, out);
            }
            Expr::Ternary { cond, then, orelse } => {
                self.operand_names(cond, out);
                self.operand_names(then, out);
                self.operand_names(orelse, out);
            }
            Expr::Tuple(v) | Expr::List(v) | Expr::Set(v) => v.iter().for_each(|a| self.operand_names(a, out)),
            Expr::Dict(kv) => kv.iter().for_each(|(k, v)| {
                self.operand_names(k, out);
                self.operand_names(v, out);
            }),
            Expr::Symbol { args, .. } => args.iter().for_each(|a| self.operand_names(a, out)),
        }
    }

    fn opaque(&mut self, base: &str, parts: &[&Expr]) -> Expr {
        let mut args = Vec::new();
        for p in parts {
            self.operand_names(p, &mut args);
        }
        self.fresh_symbol(base, args)
    }

    fn expr(&mut self, e: &Expr, ctx: Ctx) -> Expr {
        match e {
            Expr::Name(n) if n == "self" || n == "cls" => Expr::Opaque(n.clone()),
            Expr::Name(n) => self.name(n),
            Expr::Const(v) => {
                if let Value::Str(s) = v {
                    self.intern(s);
                }
                e.clone()
            }
            Expr::Opaque(_) | Expr::Symbol { .. } => e.clone(),
            Expr::Attribute { value, attr } if is_self(value) => self.member(attr),
            Expr::Attribute { .. } => {
                let base = e.dotted().unwrap_or_else(|| "attr".into());
                self.opaque(&base, &[e])
            }
            Expr::Call { func, .. } => {
                let dotted = func.dotted().unwrap_or_else(|| "expr".into());
                let base = dotted
                    .strip_prefix("self.")
                    .or_else(|| dotted.strip_prefix("cls."))
                    .unwrap_or(&dotted)
                    .to_string();
                self.opaque(&base, &[e])
            }
            Expr::Subscript { .. } => self.opaque("getitem", &[e]),
            Expr::BinOp { op, left, right } => self.opaque(binop_name(op), &[left, right]),
            Expr::Unary { op, operand } => {
                let base = match op.as_str() {
                    "-" => "neg",
                    "~" => "invert",
                    _ => "pos",
                };
                self.opaque(base, &[operand])
            }
            Expr::Tuple(_) => self.opaque("tuple", &[e]),
            Expr::List(_) => self.opaque("list", &[e]),
            Expr::Set(_) => self.opaque("set", &[e]),
            Expr::Dict(_) => self.opaque("dict", &[e]),
            Expr::BoolOp { op, values } => Expr::BoolOp {
                op: *op,
                values: values.iter().map(|v| self.expr(v, ctx)).collect(),
            },
            Expr::Not(inner) => Expr::Not(Box::new(self.expr(inner, ctx))),
            Expr::Compare { left, op, right } => self.compare(left, *op, right, ctx),
            Expr::Ternary { cond, then, orelse } => {
                if ctx == Ctx::Cond {
                    let c = self.expr(cond, Ctx::Cond);
                    let a = self.expr(then, Ctx::Cond);
                    let b = self.expr(orelse, Ctx::Cond);
                    Expr::BoolOp {
                        op: BoolOpKind::Or,
                        values: vec![
                            Expr::BoolOp {
                                op: BoolOpKind::And,
                                values: vec![c.clone(), a],
                            },
                            Expr::BoolOp {
                                op: BoolOpKind::And,
                                values: vec![Expr::Not(Box::new(c)), b],
                            },
                        ],
                    }
                } else {
                    self.opaque("ifexp", &[e])
                }
            }
        }
    }

    fn compare(&mut self, left: &Expr, op: CmpOp, right: &Expr, ctx: Ctx) -> Expr {
        if matches!(op, CmpOp::In | CmpOp::NotIn) {
            let items = match right {
                Expr::Tuple(v) | Expr::List(v) | Expr::Set(v) if v.iter().all(|x| matches!(x, Expr::Const(_))) => {
                    Some(v)
                }
                _ => None,
            };
            if let Some(items) = items {
                let l = self.expr(left, ctx);
                let (cmp, join) = if op == CmpOp::In {
                    (CmpOp::Eq, BoolOpKind::Or)
                } else {
                    (CmpOp::Ne, BoolOpKind::And)
                };
                let values: Vec<Expr> = items
                    .iter()
                    .map(|it| Expr::Compare {
                        left: Box::new(l.clone()),
                        op: cmp,
                        right: Box::new(self.expr(it, ctx)),
                    })
                    .collect();
                return match values.len() {
                    // `x in ()` is always false
                    0 => Expr::Const(Value::Bool(op == CmpOp::NotIn)),
                    1 => values.into_iter().next().unwrap(),
                    _ => Expr::BoolOp { op: join, values },
                };
            }
            let sym = self.opaque("contains", &[left, right]);
            return if op == CmpOp::In { sym } else { Expr::Not(Box::new(sym)) };
        }
        Expr::Compare {
            left: Box::new(self.expr(left, ctx)),
            op,
            right: Box::new(self.expr(right, ctx)),
        }
    }

    fn block(&mut self, body: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in body {
            self.stmt(s, &mut out);
        }
        out
    }

    fn error_return(&self, line: usize) -> Stmt {
        Stmt {
            id: 0,
            line,
            kind: StmtKind::Return {
                kind: ReturnKind::ErrorEnd,
                value: None,
                payload: None,
            },
        }
    }

    fn assign(&mut self, line: usize, target: &Target, value: &Expr, out: &mut Vec<Stmt>) {
        let mk = |kind| Stmt { id: 0, line, kind };
        if let Expr::Ternary { cond, then, orelse } = value {
            let cond = self.expr(cond, Ctx::Cond);
            let mut a = Vec::new();
            self.assign(line, target, then, &mut a);
            let mut b = Vec::new();
            self.assign(line, target, orelse, &mut b);
            out.push(mk(StmtKind::If {
                branches: vec![IfBranch { cond, body: a }],
                orelse: Some(b),
            }));
            return;
        }
        match target {
            Target::Name(n) => {
                let value = self.expr(value, Ctx::Value);
                out.push(mk(StmtKind::Assign {
                    target: Target::Name(n.clone()),
                    value,
                }));
            }
            Target::Attribute { value: obj, attr } if is_self(obj) => {
                self.member(attr);
                let value = self.expr(value, Ctx::Value);
                out.push(mk(StmtKind::Assign {
                    target: Target::Name(attr.clone()),
                    value,
                }));
            }
            Target::Attribute { value: obj, .. } => {
                let sym = self.opaque("setattr", &[obj, value]);
                out.push(mk(StmtKind::Expr(sym)));
            }
            Target::Subscript { value: obj, index } => {
                let mut parts: Vec<&Expr> = vec![obj];
                parts.extend(index.iter());
                parts.push(value);
                let sym = self.opaque("setitem", &parts);
                out.push(mk(StmtKind::Expr(sym)));
            }
            Target::Tuple(ts) => {
                let mut written = BTreeSet::new();
                collect_target_names(target, &mut written);
                let reads_target = value.reads().iter().any(|r| written.contains(r));
                match value {
                    Expr::Tuple(vs) | Expr::List(vs) if vs.len() == ts.len() && !reads_target => {
                        for (t, v) in ts.iter().zip(vs) {
                            self.assign(line, t, v, out);
                        }
                    }
                    _ => {
                        for t in ts {
                            let sym = self.opaque("unpack", &[value]);
                            self.assign_value(line, t, sym, out);
                        }
                    }
                }
            }
        }
    }

    /// Assigns an already-normalized value.
    fn assign_value(&mut self, line: usize, target: &Target, value: Expr, out: &mut Vec<Stmt>) {
        let mk = |kind| Stmt { id: 0, line, kind };
        match target {
            Target::Name(n) => out.push(mk(StmtKind::Assign {
                target: Target::Name(n.clone()),
                value,
            })),
            Target::Attribute { value: obj, attr } if is_self(obj) => {
                self.member(attr);
                out.push(mk(StmtKind::Assign {
                    target: Target::Name(attr.clone()),
                    value,
                }))
            }
            Target::Tuple(ts) => {
                for t in ts {
                    let sym = self.opaque("unpack", &[&value]);
                    self.assign_value(line, t, sym, out);
                }
            }
            _ => {
                let sym = self.opaque("setitem", &[&value]);
                out.push(mk(StmtKind::Expr(sym)));
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Stmt>) {
        let line = s.line;
        let mk = |kind| Stmt { id: 0, line, kind };
        match &s.kind {
            StmtKind::Assign { target, value } => self.assign(line, target, value, out),
            StmtKind::AugAssign { target, op, value } => {
                let current = match target {
                    Target::Name(n) => Expr::Name(n.clone()),
                    Target::Attribute { value, attr } => Expr::Attribute {
                        value: Box::new(value.clone()),
                        attr: attr.clone(),
                    },
                    Target::Subscript { value, index } => Expr::Subscript {
                        value: Box::new(value.clone()),
                        index: index.clone(),
                    },
                    Target::Tuple(_) => Expr::Opaque("tuple".into()),
                };
                let combined = Expr::BinOp {
                    op: op.clone(),
                    left: Box::new(current),
                    right: Box::new(value.clone()),
                };
                self.assign(line, target, &combined, out);
            }
            StmtKind::If { branches, orelse } => {
                let branches = branches
                    .iter()
                    .map(|b| IfBranch {
                        cond: self.expr(&b.cond, Ctx::Cond),
                        body: self.block(&b.body),
                    })
                    .collect();
                let orelse = orelse.as_ref().map(|b| self.block(b));
                out.push(mk(StmtKind::If { branches, orelse }));
            }
            StmtKind::Return { kind, value, payload } => {
                if let Some(Expr::Ternary { cond, then, orelse }) = value {
                    let cond = self.expr(cond, Ctx::Cond);
                    let ret = |v: &Expr| Stmt {
                        id: 0,
                        line,
                        kind: StmtKind::Return {
                            kind: *kind,
                            value: Some(v.clone()),
                            payload: payload.clone(),
                        },
                    };
                    let a = self.block(&[ret(then)]);
                    let b = self.block(&[ret(orelse)]);
                    out.push(mk(StmtKind::If {
                        branches: vec![IfBranch { cond, body: a }],
                        orelse: Some(b),
                    }));
                    return;
                }
                let value = value.as_ref().map(|v| self.expr(v, Ctx::Value));
                out.push(mk(StmtKind::Return {
                    kind: *kind,
                    value,
                    payload: payload.clone(),
                }));
            }
            StmtKind::Raise(_) | StmtKind::Warn(_) => out.push(self.error_return(line)),
            StmtKind::Assert { test, .. } => {
                let cond = self.expr(&Expr::Not(Box::new(test.clone())), Ctx::Cond);
                out.push(mk(StmtKind::If {
                    branches: vec![IfBranch {
                        cond,
                        body: vec![self.error_return(line)],
                    }],
                    orelse: None,
                }));
            }
            StmtKind::Expr(e) => match e {
                Expr::Const(_) | Expr::Opaque(_) | Expr::Name(_) => {}
                _ => {
                    let e = self.expr(e, Ctx::Value);
                    out.push(mk(StmtKind::Expr(e)));
                }
            },
            StmtKind::Pass => out.push(mk(StmtKind::Pass)),
        }
    }
}

/// Labels each error return with the parameters of its innermost guard.
fn fill_payloads(body: &mut [Stmt], guard: Option<&[String]>, params: &BTreeSet<&str>) {
    for s in body {
        match &mut s.kind {
            StmtKind::Return {
                kind: ReturnKind::ErrorEnd,
                payload,
                ..
            } => {
                let names = guard.unwrap_or(&[]);
                let mut text: String = names.iter().map(|n| format!("({n})_")).collect();
                text.push_str("ERROR_END");
                *payload = Some(text);
            }
            StmtKind::If { branches, orelse } => {
                let mut all = Vec::new();
                for b in branches.iter_mut() {
                    let names = guard_names(&b.cond, params);
                    for n in &names {
                        if !all.contains(n) {
                            all.push(n.clone());
                        }
                    }
                    fill_payloads(&mut b.body, Some(&names), params);
                }
                if let Some(e) = orelse {
                    fill_payloads(e, Some(&all), params);
                }
            }
            _ => {}
        }
    }
}

fn guard_names(cond: &Expr, params: &BTreeSet<&str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in cond.reads() {
        if params.contains(n.as_str()) && !out.contains(&n) {
            out.push(n);
        }
    }
    out
}
