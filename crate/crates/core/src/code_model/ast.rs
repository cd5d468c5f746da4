use serde::{Deserialize, Serialize};

use crate::constraint::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolOpKind {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    In,
    NotIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Name(String),
    Const(Value),
    /// Literal whose value is irrelevant to path conditions (f-strings, bytes,
    /// `...`); treated as an opaque truthy object.
    Opaque(String),
    Attribute {
        value: Box<Expr>,
        attr: String,
    },
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
    },
    Subscript {
        value: Box<Expr>,
        index: Vec<Expr>,
    },
    BoolOp {
        op: BoolOpKind,
        values: Vec<Expr>,
    },
    Not(Box<Expr>),
    Compare {
        left: Box<Expr>,
        op: CmpOp,
        right: Box<Expr>,
    },
    BinOp {
        op: String,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: String,
        operand: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        orelse: Box<Expr>,
    },
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Set(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    /// Fresh symbolic input standing for an opaque computation; `args` keeps
    /// the operands so that their uses stay visible to data-flow analysis.
    Symbol {
        name: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn name(n: impl Into<String>) -> Expr {
        Expr::Name(n.into())
    }

    /// Every variable read by this expression, in evaluation order.
    pub fn reads(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_reads(&mut out);
        out
    }

    fn collect_reads(&self, out: &mut Vec<String>) {
        match self {
            Expr::Name(n) => out.push(n.clone()),
            Expr::Const(_) | Expr::Opaque(_) => {}
            Expr::Attribute { value, .. } => value.collect_reads(out),
            Expr::Call { func, args } => {
                func.collect_reads(out);
                args.iter().for_each(|a| a.collect_reads(out));
            }
            Expr::Subscript { value, index } => {
                value.collect_reads(out);
                index.iter().for_each(|a| a.collect_reads(out));
            }
            Expr::BoolOp { values, .. } => values.iter().for_each(|a| a.collect_reads(out)),
            Expr::Not(e) => e.collect_reads(out),
            Expr::Compare { left, right, .. } | Expr::BinOp { left, right, .. } => {
                left.collect_reads(out);
                right.collect_reads(out);
            }
            Expr::Unary { operand, .. } => operand.collect_reads(out),
            Expr::Ternary { cond, then, orelse } => {
                cond.collect_reads(out);
                then.collect_reads(out);
                orelse.collect_reads(out);
            }
            Expr::Tuple(v) | Expr::List(v) | Expr::Set(v) => v.iter().for_each(|a| a.collect_reads(out)),
            Expr::Dict(kv) => kv.iter().for_each(|(k, v)| {
                k.collect_reads(out);
                v.collect_reads(out);
            }),
            Expr::Symbol { name, args } => {
                out.push(name.clone());
                args.iter().for_each(|a| a.collect_reads(out));
            }
        }
    }

    /// Dotted rendering of a callee or attribute chain (`np.asarray`).
    pub fn dotted(&self) -> Option<String> {
        match self {
            Expr::Name(n) => Some(n.clone()),
            Expr::Attribute { value, attr } => Some(format!("{}.{attr}", value.dotted()?)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Name(String),
    Attribute { value: Expr, attr: String },
    Subscript { value: Expr, index: Vec<Expr> },
    Tuple(Vec<Target>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReturnKind {
    /// An explicit `return` in the source.
    Normal,
    /// A rewritten `raise` or warning.
    ErrorEnd,
    /// The synthetic return appended to capture final bindings.
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfBranch {
    pub cond: Expr,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StmtKind {
    Assign {
        target: Target,
        value: Expr,
    },
    AugAssign {
        target: Target,
        op: String,
        value: Expr,
    },
    If {
        branches: Vec<IfBranch>,
        orelse: Option<Vec<Stmt>>,
    },
    Return {
        kind: ReturnKind,
        value: Option<Expr>,
        payload: Option<String>,
    },
    Raise(Option<Expr>),
    Warn(Vec<Expr>),
    Assert {
        test: Expr,
        msg: Option<Expr>,
    },
    Expr(Expr),
    Pass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    /// Unique within a function; assigned in source pre-order.
    pub id: usize,
    pub line: usize,
    pub kind: StmtKind,
}

impl Stmt {
    /// Visits this statement and every nested one in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        if let StmtKind::If { branches, orelse } = &self.kind {
            for b in branches {
                b.body.iter().for_each(|s| s.walk(f));
            }
            if let Some(body) = orelse {
                body.iter().for_each(|s| s.walk(f));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Gt => ">",
        CmpOp::Le => "<=",
        CmpOp::Ge => ">=",
        CmpOp::In => "in",
        CmpOp::NotIn => "not in",
    }
}

fn join(f: &mut std::fmt::Formatter<'_>, items: &[Expr], sep: &str) -> std::fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::Name(n) => f.write_str(n),
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Opaque(t) => write!(f, "<{t}>"),
            Expr::Attribute { value, attr } => write!(f, "{value}.{attr}"),
            Expr::Call { func, args } => {
                write!(f, "{func}(")?;
                join(f, args, ", ")?;
                f.write_str(")")
            }
            Expr::Subscript { value, index } => {
                write!(f, "{value}[")?;
                join(f, index, ", ")?;
                f.write_str("]")
            }
            Expr::BoolOp { op, values } => {
                f.write_str("(")?;
                join(f, values, if *op == BoolOpKind::And { " and " } else { " or " })?;
                f.write_str(")")
            }
            Expr::Not(e) => write!(f, "(not {e})"),
            Expr::Compare { left, op, right } => write!(f, "({left} {} {right})", cmp_symbol(*op)),
            Expr::BinOp { op, left, right } => write!(f, "({left} {op} {right})"),
            Expr::Unary { op, operand } => write!(f, "({op}{operand})"),
            Expr::Ternary { cond, then, orelse } => write!(f, "({then} if {cond} else {orelse})"),
            Expr::Tuple(v) => {
                f.write_str("(")?;
                join(f, v, ", ")?;
                f.write_str(")")
            }
            Expr::List(v) => {
                f.write_str("[")?;
                join(f, v, ", ")?;
                f.write_str("]")
            }
            Expr::Set(v) => {
                f.write_str("{")?;
                join(f, v, ", ")?;
                f.write_str("}")
            }
            Expr::Dict(kv) => {
                f.write_str("{")?;
                for (i, (k, v)) in kv.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
            Expr::Symbol { name, .. } => f.write_str(name),
        }
    }
}
