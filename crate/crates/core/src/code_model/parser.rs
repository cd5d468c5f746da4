//! Recursive-descent parser for the supported function subset.

use crate::constraint::{Number, Value};

use super::ast::*;
use super::lexer::{tokenize, TokKind, Token};
use super::{FunctionModel, ModelError};

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ModelError>;

/// Removes the common leading indentation so that methods can be parsed on
/// their own.
pub(crate) fn dedent(src: &str) -> String {
    let indent = src
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    src.lines()
        .map(|l| {
            if l.len() >= indent {
                &l[indent..]
            } else {
                l.trim_start()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_function(source: &str) -> Result<FunctionModel, ModelError> {
    let src = dedent(source);
    let toks = tokenize(&src)?;
    let mut p = Parser { toks, pos: 0 };
    p.skip_newlines();
    while p.is_op("@") {
        p.skip_line();
        p.skip_newlines();
    }
    let f = p.funcdef()?;
    p.skip_newlines();
    if !p.at_end() {
        return Err(p.syntax("expected a single function definition"));
    }
    Ok(f)
}

impl Parser {
    fn peek(&self) -> &TokKind {
        &self.toks[self.pos.min(self.toks.len() - 1)].kind
    }

    fn peek_at(&self, k: usize) -> &TokKind {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].kind
    }

    fn line(&self) -> usize {
        self.toks[self.pos.min(self.toks.len() - 1)].line
    }

    fn bump(&mut self) -> TokKind {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_end(&self) -> bool {
        matches!(self.peek(), TokKind::End)
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), TokKind::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), TokKind::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{op}`")))
        }
    }

    fn syntax(&self, message: &str) -> ModelError {
        ModelError::Syntax {
            line: self.line(),
            message: message.to_string(),
        }
    }

    fn unsupported(&self, construct: &str) -> ModelError {
        ModelError::UnsupportedSyntax {
            line: self.line(),
            construct: construct.to_string(),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.bump() {
            TokKind::Name(n) if !is_keyword(&n) => Ok(n),
            _ => Err(self.syntax("expected identifier")),
        }
    }

    pub(crate) fn skip_newlines(&mut self) {
        while matches!(self.peek(), TokKind::Newline) {
            self.bump();
        }
    }

    /// Skips to the end of the current logical line.
    pub(crate) fn skip_line(&mut self) {
        while !matches!(self.peek(), TokKind::Newline | TokKind::End) {
            self.bump();
        }
        self.bump();
    }

    fn funcdef(&mut self) -> PResult<FunctionModel> {
        if self.is_kw("async") {
            return Err(self.unsupported("async def"));
        }
        if !self.eat_kw("def") {
            return Err(ModelError::NoFunction);
        }
        let name = self.ident()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        let mut is_method = false;
        while !self.is_op(")") {
            if self.eat_op("*") || self.eat_op("**") {
                if matches!(self.peek(), TokKind::Name(_)) {
                    self.ident()?;
                    if self.eat_op(":") {
                        self.test()?;
                    }
                }
            } else if self.eat_op("/") {
            } else {
                let pname = self.ident()?;
                if self.eat_op(":") {
                    self.test()?;
                }
                let default = if self.eat_op("=") { Some(self.test()?) } else { None };
                if params.is_empty() && !is_method && (pname == "self" || pname == "cls") {
                    is_method = true;
                } else {
                    params.push(Param { name: pname, default });
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.test()?;
        }
        self.expect_op(":")?;
        let body = self.block()?;
        let mut m = FunctionModel::from_parts(name, params, body);
        m.is_method = is_method;
        Ok(m)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if !matches!(self.peek(), TokKind::Newline) {
            return self.simple_stmts();
        }
        self.skip_newlines();
        if !matches!(self.peek(), TokKind::Indent) {
            return Err(self.syntax("expected an indented block"));
        }
        self.bump();
        let mut body = Vec::new();
        let mut first = true;
        loop {
            self.skip_newlines();
            match self.peek() {
                TokKind::Dedent => {
                    self.bump();
                    break;
                }
                TokKind::End => break,
                _ => {}
            }
            // docstring
            if first && matches!(self.peek(), TokKind::Str { .. }) && matches!(self.peek_at(1), TokKind::Newline) {
                self.bump();
                self.bump();
                first = false;
                continue;
            }
            first = false;
            body.extend(self.statement()?);
        }
        Ok(body)
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        let line = self.line();
        let kw = match self.peek() {
            TokKind::Name(n) => n.clone(),
            _ => String::new(),
        };
        match kw.as_str() {
            "if" => {
                self.bump();
                let mut branches = Vec::new();
                let cond = self.namedexpr()?;
                self.expect_op(":")?;
                branches.push(IfBranch {
                    cond,
                    body: self.block()?,
                });
                let mut orelse = None;
                loop {
                    self.skip_newlines();
                    if self.eat_kw("elif") {
                        let cond = self.namedexpr()?;
                        self.expect_op(":")?;
                        branches.push(IfBranch {
                            cond,
                            body: self.block()?,
                        });
                    } else if self.eat_kw("else") {
                        self.expect_op(":")?;
                        orelse = Some(self.block()?);
                        break;
                    } else {
                        break;
                    }
                }
                Ok(vec![mk(line, StmtKind::If { branches, orelse })])
            }
            "for" | "while" | "try" | "with" | "class" | "def" | "async" | "match" if self.is_compound_kw(&kw) => {
                Err(self.unsupported(&kw))
            }
            _ => {
                if self.is_op("@") {
                    return Err(self.unsupported("nested definition"));
                }
                self.simple_stmts()
            }
        }
    }

    fn is_compound_kw(&self, kw: &str) -> bool {
        // `match` is a soft keyword; only treat it as a statement when followed by an expression and `:`
        if kw == "match" {
            return !matches!(
                self.peek_at(1),
                TokKind::Op("=" | "." | "(" | "[" | ",") | TokKind::Newline
            );
        }
        true
    }

    fn simple_stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            out.extend(self.small_stmt()?);
            if self.eat_op(";") {
                if matches!(self.peek(), TokKind::Newline | TokKind::End) {
                    break;
                }
                continue;
            }
            break;
        }
        match self.peek() {
            TokKind::Newline => {
                self.bump();
            }
            TokKind::End | TokKind::Dedent => {}
            _ => return Err(self.syntax("expected end of statement")),
        }
        Ok(out)
    }

    fn small_stmt(&mut self) -> PResult<Vec<Stmt>> {
        let line = self.line();
        let kw = match self.peek() {
            TokKind::Name(n) => n.clone(),
            _ => String::new(),
        };
        let kind = match kw.as_str() {
            "pass" => {
                self.bump();
                StmtKind::Pass
            }
            "return" => {
                self.bump();
                let value = if self.at_stmt_end() {
                    None
                } else {
                    Some(self.exprlist()?)
                };
                StmtKind::Return {
                    kind: ReturnKind::Normal,
                    value,
                    payload: None,
                }
            }
            "raise" => {
                self.bump();
                let exc = if self.at_stmt_end() { None } else { Some(self.test()?) };
                if self.eat_kw("from") {
                    self.test()?;
                }
                StmtKind::Raise(exc)
            }
            "assert" => {
                self.bump();
                let test = self.test()?;
                let msg = if self.eat_op(",") { Some(self.test()?) } else { None };
                StmtKind::Assert { test, msg }
            }
            "import" | "from" | "global" | "nonlocal" => {
                while !self.at_stmt_end() {
                    self.bump();
                }
                return Ok(vec![]);
            }
            "break" | "continue" | "yield" | "await" | "del" | "lambda" => {
                return Err(self.unsupported(&kw));
            }
            _ => return self.expr_stmt(line),
        };
        Ok(vec![mk(line, kind)])
    }

    fn at_stmt_end(&self) -> bool {
        matches!(
            self.peek(),
            TokKind::Newline | TokKind::End | TokKind::Dedent | TokKind::Op(";")
        )
    }

    fn expr_stmt(&mut self, line: usize) -> PResult<Vec<Stmt>> {
        let first = self.exprlist()?;
        if self.eat_op(":") {
            // annotated assignment
            self.test()?;
            if self.eat_op("=") {
                let value = self.exprlist()?;
                let target = to_target(first).ok_or_else(|| self.syntax("invalid assignment target"))?;
                return Ok(vec![mk(line, StmtKind::Assign { target, value })]);
            }
            return Ok(vec![]);
        }
        if let TokKind::Op(op) = self.peek() {
            let op = *op;
            if op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "!=" | "<=" | ">=") {
                self.bump();
                let value = self.exprlist()?;
                let target = to_target(first).ok_or_else(|| self.syntax("invalid assignment target"))?;
                return Ok(vec![mk(
                    line,
                    StmtKind::AugAssign {
                        target,
                        op: op.trim_end_matches('=').to_string(),
                        value,
                    },
                )]);
            }
        }
        if self.is_op("=") {
            let mut targets = vec![first];
            let mut value;
            loop {
                self.expect_op("=")?;
                value = self.exprlist()?;
                if self.is_op("=") {
                    targets.push(value);
                } else {
                    break;
                }
            }
            let mut out = Vec::new();
            for t in targets {
                let target = to_target(t).ok_or_else(|| self.syntax("invalid assignment target"))?;
                out.push(mk(
                    line,
                    StmtKind::Assign {
                        target,
                        value: value.clone(),
                    },
                ));
            }
            return Ok(out);
        }
        if let Expr::Call { func, args } = &first {
            if let Some(d) = func.dotted() {
                if d == "warn" || d.ends_with(".warn") {
                    return Ok(vec![mk(line, StmtKind::Warn(args.clone()))]);
                }
            }
        }
        Ok(vec![mk(line, StmtKind::Expr(first))])
    }

    fn exprlist(&mut self) -> PResult<Expr> {
        let first = self.star_or_test()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_stmt_end() || self.is_op("=") || self.is_op(")") {
                break;
            }
            items.push(self.star_or_test()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn star_or_test(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            return self.bitor();
        }
        self.test()
    }

    fn namedexpr(&mut self) -> PResult<Expr> {
        let e = self.test()?;
        if self.is_op(":=") {
            return Err(self.unsupported("assignment expression"));
        }
        Ok(e)
    }

    pub(crate) fn test(&mut self) -> PResult<Expr> {
        if self.is_kw("lambda") {
            return Err(self.unsupported("lambda"));
        }
        let e = self.or_test()?;
        if self.eat_kw("if") {
            let cond = self.or_test()?;
            if !self.eat_kw("else") {
                return Err(self.syntax("expected `else` in conditional expression"));
            }
            let orelse = self.test()?;
            return Ok(Expr::Ternary {
                cond: Box::new(cond),
                then: Box::new(e),
                orelse: Box::new(orelse),
            });
        }
        Ok(e)
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let first = self.and_test()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        Ok(Expr::BoolOp {
            op: BoolOpKind::Or,
            values,
        })
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let first = self.not_test()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        Ok(Expr::BoolOp {
            op: BoolOpKind::And,
            values,
        })
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_test()?)));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            TokKind::Op("==") => CmpOp::Eq,
            TokKind::Op("!=") => CmpOp::Ne,
            TokKind::Op("<") => CmpOp::Lt,
            TokKind::Op(">") => CmpOp::Gt,
            TokKind::Op("<=") => CmpOp::Le,
            TokKind::Op(">=") => CmpOp::Ge,
            TokKind::Name(n) if n == "in" => CmpOp::In,
            TokKind::Name(n) if n == "not" && matches!(self.peek_at(1), TokKind::Name(m) if m == "in") => {
                self.bump();
                CmpOp::NotIn
            }
            TokKind::Name(n) if n == "is" => {
                self.bump();
                if self.eat_kw("not") {
                    return Some(CmpOp::Ne);
                }
                return Some(CmpOp::Eq);
            }
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let first = self.bitor()?;
        let mut parts = Vec::new();
        let mut left = first.clone();
        while let Some(op) = self.comp_op() {
            let right = self.bitor()?;
            parts.push(Expr::Compare {
                left: Box::new(left),
                op,
                right: Box::new(right.clone()),
            });
            left = right;
        }
        Ok(match parts.len() {
            0 => first,
            1 => parts.pop().unwrap(),
            _ => Expr::BoolOp {
                op: BoolOpKind::And,
                values: parts,
            },
        })
    }

    fn binary(&mut self, ops: &[&'static str], next: fn(&mut Parser) -> PResult<Expr>) -> PResult<Expr> {
        let mut left = next(self)?;
        loop {
            let Some(op) = ops.iter().find(|o| self.is_op(o)) else {
                return Ok(left);
            };
            self.bump();
            let right = next(self)?;
            left = Expr::BinOp {
                op: op.to_string(),
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary(&["|"], Parser::bitxor)
    }
    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary(&["^"], Parser::bitand)
    }
    fn bitand(&mut self) -> PResult<Expr> {
        self.binary(&["&"], Parser::shift)
    }
    fn shift(&mut self) -> PResult<Expr> {
        self.binary(&["<<", ">>"], Parser::arith)
    }
    fn arith(&mut self) -> PResult<Expr> {
        self.binary(&["+", "-"], Parser::term)
    }
    fn term(&mut self) -> PResult<Expr> {
        self.binary(&["*", "/", "//", "%", "@"], Parser::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        for op in ["-", "+", "~"] {
            if self.eat_op(op) {
                let operand = self.factor()?;
                if let (Expr::Const(Value::Num(n)), "-") = (&operand, op) {
                    let text = match n.text().strip_prefix('-') {
                        Some(rest) => rest.to_string(),
                        None => format!("-{}", n.text()),
                    };
                    if let Some(n) = Number::parse(&text) {
                        return Ok(Expr::Const(Value::Num(n)));
                    }
                }
                if let (Expr::Const(Value::Num(_)), "+") = (&operand, op) {
                    return Ok(operand);
                }
                return Ok(Expr::Unary {
                    op: op.to_string(),
                    operand: Box::new(operand),
                });
            }
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        if self.is_kw("await") {
            return Err(self.unsupported("await"));
        }
        let base = self.atom_expr()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::BinOp {
                op: "**".into(),
                left: Box::new(base),
                right: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let attr = match self.bump() {
                    TokKind::Name(n) => n,
                    _ => return Err(self.syntax("expected attribute name")),
                };
                e = Expr::Attribute {
                    value: Box::new(e),
                    attr,
                };
            } else if self.eat_op("(") {
                let args = self.call_args()?;
                e = Expr::Call {
                    func: Box::new(e),
                    args,
                };
            } else if self.eat_op("[") {
                let mut index = Vec::new();
                while !self.is_op("]") {
                    index.push(self.subscript()?);
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                e = Expr::Subscript {
                    value: Box::new(e),
                    index,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn subscript(&mut self) -> PResult<Expr> {
        let mut parts = Vec::new();
        let mut is_slice = false;
        loop {
            if self.is_op(":") {
                is_slice = true;
                self.bump();
                continue;
            }
            if self.is_op("]") || self.is_op(",") {
                break;
            }
            parts.push(self.test()?);
            if !self.is_op(":") {
                break;
            }
        }
        if is_slice || parts.is_empty() {
            return Ok(Expr::Call {
                func: Box::new(Expr::name("slice")),
                args: parts,
            });
        }
        Ok(parts.pop().unwrap())
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        while !self.is_op(")") {
            if self.eat_op("*") || self.eat_op("**") {
                args.push(self.test()?);
            } else if matches!(self.peek(), TokKind::Name(_)) && matches!(self.peek_at(1), TokKind::Op("=")) {
                self.bump();
                self.bump();
                args.push(self.test()?);
            } else {
                args.push(self.test()?);
                if self.is_kw("for") || self.is_kw("async") {
                    return Err(self.unsupported("generator expression"));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let line = self.line();
        match self.bump() {
            TokKind::Name(n) => match n.as_str() {
                "True" => Ok(Expr::Const(Value::Bool(true))),
                "False" => Ok(Expr::Const(Value::Bool(false))),
                "None" => Ok(Expr::Const(Value::None)),
                "lambda" | "yield" | "await" => Err(ModelError::UnsupportedSyntax { line, construct: n }),
                _ if is_keyword(&n) => Err(ModelError::Syntax {
                    line,
                    message: format!("unexpected keyword `{n}`"),
                }),
                _ => Ok(Expr::Name(n)),
            },
            TokKind::Number(text) => {
                let clean = text.replace('_', "");
                Ok(match Number::parse(&clean) {
                    Some(n) if !clean.starts_with("0x") && !clean.ends_with(['j', 'J']) => Expr::Const(Value::Num(n)),
                    _ => Expr::Opaque(text),
                })
            }
            TokKind::Str { value, prefix } => {
                let mut opaque = prefix.contains('f') || prefix.contains('b');
                let mut value = value;
                while let TokKind::Str { value: v, prefix: p } = self.peek().clone() {
                    opaque |= p.contains('f') || p.contains('b');
                    value.push_str(&v);
                    self.bump();
                }
                if opaque {
                    Ok(Expr::Opaque(value))
                } else {
                    Ok(Expr::Const(Value::Str(value)))
                }
            }
            TokKind::Op("...") => Ok(Expr::Opaque("...".into())),
            TokKind::Op("(") => {
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(vec![]));
                }
                let first = self.star_or_test()?;
                if self.is_kw("for") {
                    return Err(self.unsupported("generator expression"));
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op(")") {
                        break;
                    }
                    items.push(self.star_or_test()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            TokKind::Op("[") => {
                let items = self.collection("]", "list comprehension")?;
                Ok(Expr::List(items))
            }
            TokKind::Op("{") => {
                let mut entries = Vec::new();
                let mut items = Vec::new();
                while !self.is_op("}") {
                    if self.eat_op("**") {
                        let v = self.bitor()?;
                        entries.push((Expr::Opaque("**".into()), v));
                    } else {
                        let k = self.star_or_test()?;
                        if self.eat_op(":") {
                            let v = self.test()?;
                            entries.push((k, v));
                        } else {
                            items.push(k);
                        }
                    }
                    if self.is_kw("for") {
                        return Err(self.unsupported("comprehension"));
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                if items.is_empty() {
                    Ok(Expr::Dict(entries))
                } else {
                    Ok(Expr::Set(items))
                }
            }
            TokKind::Op(op) => Err(ModelError::Syntax {
                line,
                message: format!("unexpected `{op}`"),
            }),
            _ => Err(ModelError::Syntax {
                line,
                message: "unexpected end of line".into(),
            }),
        }
    }

    fn collection(&mut self, close: &str, what: &str) -> PResult<Vec<Expr>> {
        let mut items = Vec::new();
        while !self.is_op(close) {
            items.push(self.star_or_test()?);
            if self.is_kw("for") {
                return Err(self.unsupported(what));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(close)?;
        Ok(items)
    }
}

fn mk(line: usize, kind: StmtKind) -> Stmt {
    Stmt { id: 0, line, kind }
}

fn to_target(e: Expr) -> Option<Target> {
    Some(match e {
        Expr::Name(n) => Target::Name(n),
        Expr::Attribute { value, attr } => Target::Attribute { value: *value, attr },
        Expr::Subscript { value, index } => Target::Subscript { value: *value, index },
        Expr::Tuple(items) | Expr::List(items) => {
            Target::Tuple(items.into_iter().map(to_target).collect::<Option<Vec<_>>>()?)
        }
        _ => return None,
    })
}

pub(crate) fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "False"
            | "None"
            | "True"
            | "and"
            | "as"
            | "assert"
            | "async"
            | "await"
            | "break"
            | "class"
            | "continue"
            | "def"
            | "del"
            | "elif"
            | "else"
            | "except"
            | "finally"
            | "for"
            | "from"
            | "global"
            | "if"
            | "import"
            | "in"
            | "is"
            | "lambda"
            | "nonlocal"
            | "not"
            | "or"
            | "pass"
            | "raise"
            | "return"
            | "try"
            | "while"
            | "with"
            | "yield"
    )
}
