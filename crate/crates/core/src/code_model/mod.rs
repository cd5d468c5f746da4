//! Function models: parsing, normalization, path enumeration, def-use chains
//! and conditional slicing.

pub mod ast;
pub mod dataflow;
pub mod lexer;
pub mod normalize;
pub mod outline;
pub mod parser;
pub mod paths;
pub mod slice;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{Expr, ReturnKind, Stmt, StmtKind};
pub use dataflow::{build_du_chains, is_used, DefSite, DuChain, UseKind, UseSite};
pub use lexer::LexError;
pub use normalize::normalize_function;
pub use outline::{outline_module, ClassItem, FunctionItem, ModuleOutline};
pub use parser::parse_function;
pub use paths::{enumerate_paths, format_paths, PathConstraint, PathSet, Terminal};
pub use slice::{ignored_conditions, slice_under_condition, used_conditions, Slice};

/// Interned string ids start here so they never collide with numeric
/// literals in analyzed code.
pub const STRING_ID_BASE: u64 = 1_000_000;

pub const DEFAULT_MAX_PATHS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("line {line}: unsupported syntax: {construct}")]
    UnsupportedSyntax { line: usize, construct: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no function definition found")]
    NoFunction,
}

/// How a bare parameter used as a condition is lowered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Truthiness {
    /// `if p:` means `p != False`.
    #[default]
    Bool,
    /// `if p:` means `p != None`.
    NotNone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionModel {
    pub name: String,
    pub params: Vec<String>,
    pub defaults: BTreeMap<String, Expr>,
    pub body: Vec<Stmt>,
    pub string_table: BTreeMap<String, u64>,
    pub is_method: bool,
    /// Member attributes turned into parameters; writes to them escape.
    #[serde(default)]
    pub members: Vec<String>,
    pub normalized: bool,
    /// Per-parameter truthiness, usually derived from documented types.
    pub truthiness: BTreeMap<String, Truthiness>,
}

impl FunctionModel {
    pub(crate) fn from_parts(name: String, params: Vec<ast::Param>, body: Vec<Stmt>) -> FunctionModel {
        let mut defaults = BTreeMap::new();
        let mut names = Vec::new();
        for p in params {
            if let Some(d) = p.default {
                defaults.insert(p.name.clone(), d);
            }
            names.push(p.name);
        }
        let mut m = FunctionModel {
            name,
            params: names,
            defaults,
            body,
            string_table: BTreeMap::new(),
            is_method: false,
            members: Vec::new(),
            normalized: false,
            truthiness: BTreeMap::new(),
        };
        m.renumber();
        m
    }

    /// Parses and normalizes in one step.
    pub fn from_source(source: &str) -> Result<FunctionModel, ModelError> {
        Ok(normalize_function(&parse_function(source)?))
    }

    pub fn truthiness_of(&self, param: &str) -> Truthiness {
        self.truthiness.get(param).copied().unwrap_or_default()
    }

    pub fn string_id(&self, s: &str) -> Option<u64> {
        self.string_table.get(s).copied()
    }

    /// Assigns statement ids in pre-order starting at 1.
    pub(crate) fn renumber(&mut self) {
        fn go(body: &mut [Stmt], next: &mut usize) {
            for s in body {
                s.id = *next;
                *next += 1;
                if let StmtKind::If { branches, orelse } = &mut s.kind {
                    for b in branches {
                        go(&mut b.body, next);
                    }
                    if let Some(e) = orelse {
                        go(e, next);
                    }
                }
            }
        }
        let mut next = 1;
        go(&mut self.body, &mut next);
    }

    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for s in &self.body {
            s.walk(&mut |s| out.push(s));
        }
        out
    }

    /// Number of source statements, excluding the synthetic final return.
    pub fn statement_count(&self) -> usize {
        self.statements()
            .iter()
            .filter(|s| {
                !matches!(
                    s.kind,
                    StmtKind::Return {
                        kind: ReturnKind::Final,
                        ..
                    }
                )
            })
            .count()
    }
}
