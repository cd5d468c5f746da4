//! The multi-parameter constraint language.
//!
//! A constraint is a boolean combination of atomic comparisons `param op value`
//! plus two usage predicates (`ignore(x)` and `specified(x)`) that describe
//! whether a parameter has any effect. The concrete syntax is:
//!
//! ```text
//! constraint := implies
//! implies    := or [ "->" implies ]
//! or         := and { " v " and }
//! and        := unary { "^" unary }
//! unary      := "!" unary | primary
//! primary    := "(" constraint ")" | pred "(" ident ")" | ident op value | "True" | "False"
//! op         := "<" | ">" | "<=" | ">=" | "=" | "==" | "!="
//! value      := string | number | "True" | "False" | "None"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison operator of an atomic expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::Lt,
        Operator::Gt,
        Operator::Le,
        Operator::Ge,
        Operator::Eq,
        Operator::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Lt => "<",
            Operator::Gt => ">",
            Operator::Le => "<=",
            Operator::Ge => ">=",
            Operator::Eq => "=",
            Operator::Ne => "!=",
        }
    }

    /// The operator whose truth value is always the opposite.
    pub fn complement(self) -> Operator {
        match self {
            Operator::Lt => Operator::Ge,
            Operator::Ge => Operator::Lt,
            Operator::Gt => Operator::Le,
            Operator::Le => Operator::Gt,
            Operator::Eq => Operator::Ne,
            Operator::Ne => Operator::Eq,
        }
    }

    /// The operator obtained by swapping the operands (`a < b` is `b > a`).
    pub fn mirrored(self) -> Operator {
        match self {
            Operator::Lt => Operator::Gt,
            Operator::Gt => Operator::Lt,
            Operator::Le => Operator::Ge,
            Operator::Ge => Operator::Le,
            Operator::Eq => Operator::Eq,
            Operator::Ne => Operator::Ne,
        }
    }

    pub fn embedding(self) -> OperatorEmbedding {
        operator_embedding(self)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Five-bit characteristic vector of an operator: comparison, equation,
/// greater-than, less-than, negativity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OperatorEmbedding {
    pub comparison: u8,
    pub equation: u8,
    pub greater: u8,
    pub less: u8,
    pub negativity: u8,
}

impl OperatorEmbedding {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.comparison as f64,
            self.equation as f64,
            self.greater as f64,
            self.less as f64,
            self.negativity as f64,
        ]
    }
}

pub fn operator_embedding(op: Operator) -> OperatorEmbedding {
    let v = |comparison, equation, greater, less, negativity| OperatorEmbedding {
        comparison,
        equation,
        greater,
        less,
        negativity,
    };
    match op {
        Operator::Lt => v(1, 0, 0, 1, 0),
        Operator::Gt => v(1, 0, 1, 0, 0),
        Operator::Le => v(1, 1, 0, 1, 0),
        Operator::Ge => v(1, 1, 1, 0, 0),
        Operator::Eq => v(0, 1, 0, 0, 0),
        Operator::Ne => v(0, 1, 0, 0, 1),
    }
}

/// A decimal literal. Equality and printing go through the surface text so
/// that `10` and `10.0` stay distinguishable; ordering uses the numeric value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Number(String);

impl Number {
    pub fn parse(text: &str) -> Option<Number> {
        let cleaned: String = text.chars().filter(|c| *c != '_').collect();
        let v: f64 = cleaned.parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        Some(Number(cleaned))
    }

    pub fn from_f64(v: f64) -> Number {
        if v.fract() == 0.0 && v.abs() < 1e15 {
            Number(format!("{}", v as i64))
        } else {
            Number(format!("{v}"))
        }
    }

    pub fn from_i64(v: i64) -> Number {
        Number(v.to_string())
    }

    pub fn value(&self) -> f64 {
        self.0.parse().unwrap_or(f64::NAN)
    }

    pub fn is_integer(&self) -> bool {
        self.value().fract() == 0.0
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

/// Literal on the right-hand side of an atomic expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Str(String),
    Num(Number),
    Bool(bool),
    None,
}

impl Value {
    pub fn num(v: i64) -> Value {
        Value::Num(Number::from_i64(v))
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    /// Text used when values are compared by edit distance.
    pub fn similarity_text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Num(n) => n.text().to_string(),
            Value::Bool(true) => "True".into(),
            Value::Bool(false) => "False".into(),
            Value::None => "None".into(),
        }
    }

    /// Equality as seen by the evaluator: numbers compare numerically, values
    /// of different kinds are never equal.
    pub fn semantic_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.value() == b.value(),
            (a, b) => a == b,
        }
    }

    /// Truth value of `self op other`. Ordering is only defined between numbers;
    /// on any other pair the ordering operators evaluate to false.
    pub fn compare(&self, op: Operator, other: &Value) -> bool {
        match op {
            Operator::Eq => self.semantic_eq(other),
            Operator::Ne => !self.semantic_eq(other),
            _ => match (self, other) {
                (Value::Num(a), Value::Num(b)) => {
                    let (a, b) = (a.value(), b.value());
                    match op {
                        Operator::Lt => a < b,
                        Operator::Gt => a > b,
                        Operator::Le => a <= b,
                        Operator::Ge => a >= b,
                        _ => unreachable!(),
                    }
                }
                _ => false,
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Num(n) => f.write_str(n.text()),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::None => f.write_str("None"),
        }
    }
}

/// Atomic comparison `param op value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Expression {
    pub param: String,
    pub op: Operator,
    pub value: Value,
}

impl Expression {
    pub fn new(param: impl Into<String>, op: Operator, value: Value) -> Expression {
        Expression {
            param: param.into(),
            op,
            value,
        }
    }

    pub fn negated(&self) -> Expression {
        Expression {
            param: self.param.clone(),
            op: self.op.complement(),
            value: self.value.clone(),
        }
    }

    pub fn holds(&self, assigned: &Value) -> bool {
        assigned.compare(self.op, &self.value)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.param, self.op, self.value)
    }
}

/// Kind of a usage predicate. Each documentation fuzzy word falls in exactly
/// one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredKind {
    /// The parameter has no effect (ignore, no effect, unused, override).
    Ignored,
    /// The parameter has an effect (specify, have an effect, exist, significant).
    Specified,
}

impl PredKind {
    pub fn flipped(self) -> PredKind {
        match self {
            PredKind::Ignored => PredKind::Specified,
            PredKind::Specified => PredKind::Ignored,
        }
    }

    pub fn canonical_word(self) -> &'static str {
        match self {
            PredKind::Ignored => "ignore",
            PredKind::Specified => "specified",
        }
    }

    /// Maps a predicate spelling (with `_` or spaces between words) to its kind.
    pub fn from_word(word: &str) -> Option<PredKind> {
        let w = word.to_ascii_lowercase().replace([' ', '-'], "_");
        let kind = match w.as_str() {
            "ignore" | "ignored" | "ignores" | "no_effect" | "has_no_effect" | "have_no_effect" | "unused"
            | "not_used" | "override" | "overrides" | "overridden" => PredKind::Ignored,
            "specify" | "specified" | "specifies" | "have_an_effect" | "has_an_effect" | "has_effect"
            | "have_effect" | "exist" | "exists" | "significant" | "used" => PredKind::Specified,
            _ => return None,
        };
        Some(kind)
    }
}

/// The eight documentation fuzzy words, non-existence first.
pub const FUZZY_WORDS: [(&str, PredKind); 8] = [
    ("ignore", PredKind::Ignored),
    ("no effect", PredKind::Ignored),
    ("unused", PredKind::Ignored),
    ("override", PredKind::Ignored),
    ("specify", PredKind::Specified),
    ("have an effect", PredKind::Specified),
    ("exist", PredKind::Specified),
    ("significant", PredKind::Specified),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    Atom(Expression),
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
    Implies(Box<Constraint>, Box<Constraint>),
    Pred(PredKind, String),
    /// Constant truth value; produced by condition lowering and slicing.
    Const(bool),
}

impl Constraint {
    pub fn atom(param: impl Into<String>, op: Operator, value: Value) -> Constraint {
        Constraint::Atom(Expression::new(param, op, value))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Constraint) -> Constraint {
        Constraint::Not(Box::new(c))
    }

    pub fn and(a: Constraint, b: Constraint) -> Constraint {
        Constraint::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Constraint, b: Constraint) -> Constraint {
        Constraint::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Constraint, b: Constraint) -> Constraint {
        Constraint::Implies(Box::new(a), Box::new(b))
    }

    /// Left-folded conjunction; the empty conjunction is `True`.
    pub fn conjunction<I: IntoIterator<Item = Constraint>>(items: I) -> Constraint {
        items
            .into_iter()
            .reduce(Constraint::and)
            .unwrap_or(Constraint::Const(true))
    }

    /// Left-folded disjunction; the empty disjunction is `False`.
    pub fn disjunction<I: IntoIterator<Item = Constraint>>(items: I) -> Constraint {
        items
            .into_iter()
            .reduce(Constraint::or)
            .unwrap_or(Constraint::Const(false))
    }

    /// Parameters mentioned anywhere in the tree, including predicate targets.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Constraint::Atom(e) => {
                out.insert(e.param.clone());
            }
            Constraint::Pred(_, p) => {
                out.insert(p.clone());
            }
            Constraint::Not(c) => c.collect_params(out),
            Constraint::And(a, b) | Constraint::Or(a, b) | Constraint::Implies(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Constraint::Const(_) => {}
        }
    }

    /// Atomic expressions in left-to-right order.
    pub fn atoms(&self) -> Vec<&Expression> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |c| {
            if let Constraint::Atom(e) = c {
                out.push(e);
            }
        });
        out
    }

    pub fn visit_leaves<'a>(&'a self, f: &mut dyn FnMut(&'a Constraint)) {
        match self {
            Constraint::Not(c) => c.visit_leaves(f),
            Constraint::And(a, b) | Constraint::Or(a, b) | Constraint::Implies(a, b) => {
                a.visit_leaves(f);
                b.visit_leaves(f);
            }
            leaf => f(leaf),
        }
    }

    pub fn has_predicates(&self) -> bool {
        let mut found = false;
        self.visit_leaves(&mut |c| {
            if matches!(c, Constraint::Pred(..)) {
                found = true;
            }
        });
        found
    }

    /// Rebuilds the tree with every atomic expression passed through `f`.
    pub fn map_atoms(&self, f: &mut dyn FnMut(&Expression) -> Expression) -> Constraint {
        match self {
            Constraint::Atom(e) => Constraint::Atom(f(e)),
            Constraint::Not(c) => Constraint::not(c.map_atoms(f)),
            Constraint::And(a, b) => Constraint::and(a.map_atoms(f), b.map_atoms(f)),
            Constraint::Or(a, b) => Constraint::or(a.map_atoms(f), b.map_atoms(f)),
            Constraint::Implies(a, b) => Constraint::implies(a.map_atoms(f), b.map_atoms(f)),
            leaf => leaf.clone(),
        }
    }

    /// Crisp evaluation under a full assignment. Returns `None` when a
    /// parameter is unassigned or the tree holds a usage predicate.
    pub fn eval(&self, assignment: &BTreeMap<String, Value>) -> Option<bool> {
        Some(match self {
            Constraint::Atom(e) => e.holds(assignment.get(&e.param)?),
            Constraint::Not(c) => !c.eval(assignment)?,
            Constraint::And(a, b) => a.eval(assignment)? && b.eval(assignment)?,
            Constraint::Or(a, b) => a.eval(assignment)? || b.eval(assignment)?,
            Constraint::Implies(a, b) => !a.eval(assignment)? || b.eval(assignment)?,
            Constraint::Const(v) => *v,
            Constraint::Pred(..) => return None,
        })
    }

    /// Negation-normal form without implications.
    pub fn normalize(&self) -> Constraint {
        normalize(self)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Atom(e) => write!(f, "({e})"),
            Constraint::Not(c) => write!(f, "(!{c})"),
            Constraint::And(a, b) => write!(f, "({a} ^ {b})"),
            Constraint::Or(a, b) => write!(f, "({a} v {b})"),
            Constraint::Implies(a, b) => write!(f, "({a} -> {b})"),
            Constraint::Pred(k, p) => write!(f, "({}({p}))", k.canonical_word()),
            Constraint::Const(true) => f.write_str("(True)"),
            Constraint::Const(false) => f.write_str("(False)"),
        }
    }
}

/// Canonical fully-parenthesized text.
pub fn print_constraint(c: &Constraint) -> String {
    c.to_string()
}

pub fn normalize(c: &Constraint) -> Constraint {
    nnf(c, false)
}

fn nnf(c: &Constraint, negate: bool) -> Constraint {
    match c {
        Constraint::Atom(e) => {
            if negate {
                Constraint::Atom(e.negated())
            } else {
                Constraint::Atom(e.clone())
            }
        }
        Constraint::Pred(k, p) => Constraint::Pred(if negate { k.flipped() } else { *k }, p.clone()),
        Constraint::Const(v) => Constraint::Const(*v != negate),
        Constraint::Not(inner) => nnf(inner, !negate),
        Constraint::And(a, b) => {
            let (a, b) = (nnf(a, negate), nnf(b, negate));
            if negate {
                Constraint::or(a, b)
            } else {
                Constraint::and(a, b)
            }
        }
        Constraint::Or(a, b) => {
            let (a, b) = (nnf(a, negate), nnf(b, negate));
            if negate {
                Constraint::and(a, b)
            } else {
                Constraint::or(a, b)
            }
        }
        Constraint::Implies(a, b) => {
            // a -> b  ==  !a v b ;  !(a -> b)  ==  a ^ !b
            if negate {
                Constraint::and(nnf(a, false), nnf(b, true))
            } else {
                Constraint::or(nnf(a, true), nnf(b, false))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" | "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unknown operator `{op}` at byte {offset}")]
    UnknownOperator { offset: usize, op: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownOperator { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Arrow,
    And,
    Or,
    Not,
    Op(Operator),
    BadOp(String),
    Ident(String),
    Str(String),
    Num(Number),
    End,
}

/// Words the parser reads as connectives and so cannot name a parameter.
pub const RESERVED_WORDS: [&str; 6] = ["and", "or", "not", "AND", "OR", "NOT"];

/// Whether `name` prints and re-parses as a parameter name. Printing is
/// only guaranteed to round-trip for constraints whose names all pass.
pub fn is_param_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char) && !RESERVED_WORDS.contains(&name)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let at = |i: usize| chars.get(i).map(|(_, c)| *c);
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let next = at(i + 1);
        match c {
            '(' => {
                toks.push((off, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((off, Tok::RParen));
                i += 1;
            }
            '^' | '∧' | '&' => {
                i += if c == '&' && next == Some('&') { 2 } else { 1 };
                toks.push((off, Tok::And));
            }
            '∨' => {
                toks.push((off, Tok::Or));
                i += 1;
            }
            '|' => {
                i += if next == Some('|') { 2 } else { 1 };
                toks.push((off, Tok::Or));
            }
            '¬' | '~' => {
                toks.push((off, Tok::Not));
                i += 1;
            }
            '→' | '⇒' => {
                toks.push((off, Tok::Arrow));
                i += 1;
            }
            '≠' => {
                toks.push((off, Tok::Op(Operator::Ne)));
                i += 1;
            }
            '≤' => {
                toks.push((off, Tok::Op(Operator::Le)));
                i += 1;
            }
            '≥' => {
                toks.push((off, Tok::Op(Operator::Ge)));
                i += 1;
            }
            '-' if next == Some('>') => {
                toks.push((off, Tok::Arrow));
                i += 2;
            }
            '=' if next == Some('>') => {
                toks.push((off, Tok::Arrow));
                i += 2;
            }
            '!' | '<' | '>' | '=' => {
                let mut j = i;
                let mut op = String::new();
                while let Some(ch) = at(j) {
                    if matches!(ch, '!' | '<' | '>' | '=') {
                        op.push(ch);
                        j += 1;
                    } else {
                        break;
                    }
                }
                let tok = match op.as_str() {
                    "!" => Tok::Not,
                    "<" => Tok::Op(Operator::Lt),
                    ">" => Tok::Op(Operator::Gt),
                    "<=" => Tok::Op(Operator::Le),
                    ">=" => Tok::Op(Operator::Ge),
                    "=" | "==" => Tok::Op(Operator::Eq),
                    "!=" => Tok::Op(Operator::Ne),
                    // `!!x` is a double negation, not an operator
                    s if s.chars().all(|c| c == '!') => {
                        for k in 0..s.len() {
                            toks.push((off + k, Tok::Not));
                        }
                        i = j;
                        continue;
                    }
                    _ => Tok::BadOp(op.clone()),
                };
                toks.push((off, tok));
                i = j;
            }
            '"' | '\'' => {
                let quote = c;
                let mut j = i + 1;
                let mut s = String::new();
                loop {
                    match at(j) {
                        None => {
                            return Err(ParseError::Syntax {
                                offset: src.len(),
                                expected: vec![format!("closing {quote}")],
                            })
                        }
                        Some('\\') => {
                            match at(j + 1) {
                                Some('n') => s.push('\n'),
                                Some(e) => s.push(e),
                                None => {}
                            }
                            j += 2;
                        }
                        Some(ch) if ch == quote => {
                            j += 1;
                            break;
                        }
                        Some(ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                toks.push((off, Tok::Str(s)));
                i = j;
            }
            c if c.is_ascii_digit()
                || (c == '.' && next.is_some_and(|n| n.is_ascii_digit()))
                || (c == '-' && next.is_some_and(|n| n.is_ascii_digit() || n == '.')) =>
            {
                let mut j = i + 1;
                while let Some(ch) = at(j) {
                    let prev = chars[j - 1].1;
                    if ch.is_ascii_digit()
                        || ch == '.'
                        || ch == '_'
                        || ch == 'e'
                        || ch == 'E'
                        || ((ch == '-' || ch == '+') && (prev == 'e' || prev == 'E'))
                    {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map(|(o, _)| *o).unwrap_or(src.len());
                let text = &src[off..end];
                let num = Number::parse(text).ok_or_else(|| ParseError::Syntax {
                    offset: off,
                    expected: vec!["number".into()],
                })?;
                toks.push((off, Tok::Num(num)));
                i = j;
            }
            c if is_ident_start(c) => {
                let mut j = i + 1;
                while at(j).is_some_and(is_ident_char) {
                    j += 1;
                }
                let end = chars.get(j).map(|(o, _)| *o).unwrap_or(src.len());
                let word = &src[off..end];
                // `v` is disjunction only as a free-standing infix word
                let spaced_before = i == 0 || chars[i - 1].1.is_whitespace() || chars[i - 1].1 == ')';
                let spaced_after = at(j).is_none_or(|ch| ch.is_whitespace() || ch == '(');
                let tok = match word {
                    "v" if spaced_before && spaced_after && !toks.is_empty() => Tok::Or,
                    "and" | "AND" => Tok::And,
                    "or" | "OR" => Tok::Or,
                    "not" | "NOT" => Tok::Not,
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push((off, tok));
                i = j;
            }
            other => {
                return Err(ParseError::UnknownOperator {
                    offset: off,
                    op: other.to_string(),
                })
            }
        }
    }
    toks.push((src.len(), Tok::End));
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        if let Tok::BadOp(op) = self.peek() {
            return ParseError::UnknownOperator {
                offset: self.offset(),
                op: op.clone(),
            };
        }
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn implies(&mut self) -> Result<Constraint, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Constraint::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Constraint, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Constraint::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Constraint, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Constraint::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Constraint, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(Constraint::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Constraint, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    if let Some(kind) = PredKind::from_word(&name) {
                        self.bump();
                        self.bump();
                        let param = match self.bump() {
                            Tok::Ident(p) => p,
                            _ => {
                                self.pos -= 1;
                                return Err(self.error(&["parameter name"]));
                            }
                        };
                        self.expect(Tok::RParen, "`)`")?;
                        return Ok(Constraint::Pred(kind, param));
                    }
                }
                match self.peek_at(1) {
                    Tok::Op(_) | Tok::BadOp(_) => {}
                    _ => {
                        if name == "True" || name == "False" {
                            self.bump();
                            return Ok(Constraint::Const(name == "True"));
                        }
                    }
                }
                self.bump();
                let op = match self.peek().clone() {
                    Tok::Op(op) => {
                        self.bump();
                        op
                    }
                    _ => return Err(self.error(&["comparison operator"])),
                };
                let value = self.value()?;
                Ok(Constraint::atom(name, op, value))
            }
            _ => Err(self.error(&["`(`", "`!`", "parameter name"])),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let v = match self.peek().clone() {
            Tok::Str(s) => Value::Str(s),
            Tok::Num(n) => Value::Num(n),
            Tok::Ident(w) => match w.as_str() {
                "True" | "true" => Value::Bool(true),
                "False" | "false" => Value::Bool(false),
                "None" | "null" => Value::None,
                _ => Value::Str(w),
            },
            _ => return Err(self.error(&["string", "number", "bool", "None"])),
        };
        self.bump();
        Ok(v)
    }
}

pub fn parse_constraint(text: &str) -> Result<Constraint, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let c = p.implies()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["`->`", "`v`", "`^`", "end of input"]));
    }
    Ok(c)
}

impl std::str::FromStr for Constraint {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_constraint(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Constraint {
        parse_constraint(s).unwrap()
    }

    #[test]
    fn parses_implication_with_ignore() {
        let c = p(r#"(affinity = "nearest_neighbors") -> (ignore(gamma))"#);
        assert_eq!(
            c,
            Constraint::implies(
                Constraint::atom("affinity", Operator::Eq, Value::str("nearest_neighbors")),
                Constraint::Pred(PredKind::Ignored, "gamma".into())
            )
        );
    }

    #[test]
    fn predicate_words_and_v_can_name_parameters() {
        for name in ["ignore", "specify", "v", "none", "true"] {
            let c = Constraint::and(
                Constraint::atom(name, Operator::Lt, Value::num(1)),
                Constraint::Pred(PredKind::Ignored, name.into()),
            );
            assert!(is_param_name(name));
            assert_eq!(parse_constraint(&c.to_string()).unwrap(), c, "{name}");
        }
        assert!(!is_param_name("or") && !is_param_name("NOT") && !is_param_name("1x") && !is_param_name(""));
    }

    #[test]
    fn parses_single_atom() {
        assert_eq!(p("x = 1"), Constraint::atom("x", Operator::Eq, Value::num(1)));
    }

    #[test]
    fn parses_conjunction_of_negated_values() {
        let c = p(r#"(trend != "n") ^ (seasonal != False)"#);
        assert_eq!(
            c,
            Constraint::and(
                Constraint::atom("trend", Operator::Ne, Value::str("n")),
                Constraint::atom("seasonal", Operator::Ne, Value::Bool(false)),
            )
        );
    }

    #[test]
    fn precedence_and_binds_tighter_than_or_tighter_than_implies() {
        let c = p("a = 1 v b = 2 ^ c = 3 -> d = 4");
        let expected = Constraint::implies(
            Constraint::or(
                Constraint::atom("a", Operator::Eq, Value::num(1)),
                Constraint::and(
                    Constraint::atom("b", Operator::Eq, Value::num(2)),
                    Constraint::atom("c", Operator::Eq, Value::num(3)),
                ),
            ),
            Constraint::atom("d", Operator::Eq, Value::num(4)),
        );
        assert_eq!(c, expected);
    }

    #[test]
    fn v_is_an_identifier_when_not_infix() {
        let c = p("v = 1 v (vv = 'x')");
        assert_eq!(
            c,
            Constraint::or(
                Constraint::atom("v", Operator::Eq, Value::num(1)),
                Constraint::atom("vv", Operator::Eq, Value::str("x")),
            )
        );
    }

    #[test]
    fn double_equals_is_alias() {
        assert_eq!(p("x == 'a'"), p("x = \"a\""));
        assert_eq!(p("x == 'a'").to_string(), "(x = \"a\")");
    }

    #[test]
    fn synonyms_fold_into_two_kinds() {
        assert_eq!(p("no_effect(x)"), Constraint::Pred(PredKind::Ignored, "x".into()));
        assert_eq!(p("override(x)"), Constraint::Pred(PredKind::Ignored, "x".into()));
        assert_eq!(p("specified(x)"), Constraint::Pred(PredKind::Specified, "x".into()));
        assert_eq!(p("significant(x)"), Constraint::Pred(PredKind::Specified, "x".into()));
        for (word, kind) in FUZZY_WORDS {
            assert_eq!(PredKind::from_word(word), Some(kind), "{word}");
        }
    }

    #[test]
    fn prints_canonical_forms() {
        assert_eq!(
            Constraint::atom("x", Operator::Eq, Value::num(1)).to_string(),
            "(x = 1)"
        );
        assert_eq!(
            Constraint::Pred(PredKind::Ignored, "gamma".into()).to_string(),
            "(ignore(gamma))"
        );
        assert_eq!(
            Constraint::and(
                Constraint::atom("a", Operator::Eq, Value::num(1)),
                Constraint::atom("b", Operator::Eq, Value::num(2))
            )
            .to_string(),
            "((a = 1) ^ (b = 2))"
        );
    }

    #[test]
    fn syntax_error_reports_offset() {
        let err = parse_constraint("garbage ===").unwrap_err();
        assert!(matches!(err, ParseError::UnknownOperator { offset: 8, .. }), "{err:?}");
        let err = parse_constraint("(x = 1").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 6, .. }), "{err:?}");
        let err = parse_constraint("x = ").unwrap_err();
        assert_eq!(err.offset(), 4);
        assert!(parse_constraint("").is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(p("!(x < 3)").normalize(), p("x >= 3"));
        assert_eq!(p("!((a = 1) ^ (b = 2))").normalize(), p("(a != 1) v (b != 2)"));
        assert_eq!(p("(a = 1) -> (b = 2)").normalize(), p("(a != 1) v (b = 2)"));
        assert_eq!(p("!ignore(x)").normalize(), p("specified(x)"));
        assert_eq!(p("!((a = 1) -> ignore(x))").normalize(), p("(a = 1) ^ specified(x)"));
    }

    #[test]
    fn embeddings() {
        assert_eq!(operator_embedding(Operator::Lt).as_array(), [1., 0., 0., 1., 0.]);
        assert_eq!(operator_embedding(Operator::Le).as_array(), [1., 1., 0., 1., 0.]);
        assert_eq!(operator_embedding(Operator::Gt).as_array(), [1., 0., 1., 0., 0.]);
        assert_eq!(operator_embedding(Operator::Eq).as_array(), [0., 1., 0., 0., 0.]);
        assert_eq!(operator_embedding(Operator::Ne).as_array(), [0., 1., 0., 0., 1.]);
        assert_eq!(operator_embedding(Operator::Ge).as_array(), [1., 1., 1., 0., 0.]);
        let distinct: BTreeSet<_> = Operator::ALL
            .iter()
            .map(|o| operator_embedding(*o).as_array().map(|x| x as u8))
            .collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn string_escapes_round_trip() {
        let c = Constraint::atom("s", Operator::Eq, Value::str("a\"b\\c"));
        assert_eq!(p(&c.to_string()), c);
    }
}
