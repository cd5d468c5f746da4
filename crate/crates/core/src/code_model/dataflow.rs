//! Reaching definitions and def-use chains over the structured body.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::{normalize_function, FunctionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DefSite {
    /// Function entry; every parameter is defined here.
    Entry,
    Stmt(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UseKind {
    /// Read on the right-hand side of an assignment; the value flows on.
    Copy,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UseSite {
    pub stmt: usize,
    pub kind: UseKind,
    /// Variable receiving the value, for copy uses.
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DuChain {
    pub chains: BTreeMap<String, Vec<(DefSite, Vec<UseSite>)>>,
}

impl DuChain {
    pub fn uses(&self, var: &str, def: DefSite) -> &[UseSite] {
        self.chains
            .get(var)
            .and_then(|v| v.iter().find(|(d, _)| *d == def))
            .map(|(_, u)| u.as_slice())
            .unwrap_or(&[])
    }
}

type Reaching = BTreeMap<String, BTreeSet<DefSite>>;

struct Builder {
    chains: BTreeMap<(String, DefSite), BTreeSet<UseSite>>,
}

impl Builder {
    fn define(&mut self, var: &str, site: DefSite) {
        self.chains.entry((var.to_string(), site)).or_default();
    }

    fn read(&mut self, e: &Expr, state: &Reaching, stmt: usize, target: Option<&str>) {
        for v in e.reads() {
            let defs = state
                .get(&v)
                .cloned()
                .unwrap_or_else(|| BTreeSet::from([DefSite::Entry]));
            for d in defs {
                self.chains.entry((v.clone(), d)).or_default().insert(UseSite {
                    stmt,
                    kind: if target.is_some() {
                        UseKind::Copy
                    } else {
                        UseKind::Other
                    },
                    target: target.map(str::to_string),
                });
            }
        }
    }

    /// Returns the outgoing state, or `None` when every path returns.
    fn block(&mut self, body: &[Stmt], mut state: Reaching) -> Option<Reaching> {
        for s in body {
            match &s.kind {
                StmtKind::Assign { target, value } => {
                    let mut names = BTreeSet::new();
                    target_names(target, &mut names);
                    if names.len() == 1 {
                        let t = names.iter().next().unwrap().clone();
                        self.read(value, &state, s.id, Some(&t));
                    } else {
                        self.read(value, &state, s.id, None);
                    }
                    for n in names {
                        self.define(&n, DefSite::Stmt(s.id));
                        state.insert(n, BTreeSet::from([DefSite::Stmt(s.id)]));
                    }
                }
                StmtKind::AugAssign { target, value, .. } => {
                    self.read(value, &state, s.id, None);
                    let mut names = BTreeSet::new();
                    target_names(target, &mut names);
                    for n in names {
                        self.read(&Expr::Name(n.clone()), &state, s.id, None);
                        self.define(&n, DefSite::Stmt(s.id));
                        state.insert(n, BTreeSet::from([DefSite::Stmt(s.id)]));
                    }
                }
                StmtKind::If { branches, orelse } => {
                    let mut merged: Option<Reaching> = None;
                    for b in branches {
                        self.read(&b.cond, &state, s.id, None);
                        if let Some(out) = self.block(&b.body, state.clone()) {
                            merge(&mut merged, out);
                        }
                    }
                    match orelse {
                        Some(e) => {
                            if let Some(out) = self.block(e, state.clone()) {
                                merge(&mut merged, out);
                            }
                        }
                        None => merge(&mut merged, state.clone()),
                    }
                    state = merged?;
                }
                StmtKind::Return { kind, value, .. } => {
                    if *kind != ReturnKind::Final {
                        if let Some(v) = value {
                            self.read(v, &state, s.id, None);
                        }
                    }
                    return None;
                }
                StmtKind::Raise(_) | StmtKind::Warn(_) => return None,
                StmtKind::Assert { test, .. } => self.read(test, &state, s.id, None),
                StmtKind::Expr(e) => self.read(e, &state, s.id, None),
                StmtKind::Pass => {}
            }
        }
        Some(state)
    }
}

fn merge(acc: &mut Option<Reaching>, other: Reaching) {
    match acc {
        None => *acc = Some(other),
        Some(a) => {
            for (k, v) in other {
                a.entry(k).or_default().extend(v);
            }
        }
    }
}

fn target_names(t: &Target, out: &mut BTreeSet<String>) {
    match t {
        Target::Name(n) => {
            out.insert(n.clone());
        }
        Target::Tuple(ts) => ts.iter().for_each(|t| target_names(t, out)),
        _ => {}
    }
}

pub fn build_du_chains(m: &FunctionModel) -> DuChain {
    let owned;
    let m = if m.normalized {
        m
    } else {
        owned = normalize_function(m);
        &owned
    };
    let mut b = Builder {
        chains: BTreeMap::new(),
    };
    let mut state = Reaching::new();
    for p in &m.params {
        b.define(p, DefSite::Entry);
        state.insert(p.clone(), BTreeSet::from([DefSite::Entry]));
    }
    b.block(&m.body, state);
    let mut chains: BTreeMap<String, Vec<(DefSite, Vec<UseSite>)>> = BTreeMap::new();
    for ((var, site), uses) in b.chains {
        chains.entry(var).or_default().push((site, uses.into_iter().collect()));
    }
    DuChain { chains }
}

/// Whether `param` is read anywhere in `m` apart from the synthetic final
/// return. With `transitive`, a copy into another variable only counts when
/// that variable is itself used.
pub fn is_used(param: &str, m: &FunctionModel, transitive: bool) -> bool {
    let owned;
    let m = if m.normalized {
        m
    } else {
        owned = normalize_function(m);
        &owned
    };
    let du = build_du_chains(m);
    let uses = du.uses(param, DefSite::Entry);
    if !transitive {
        return !uses.is_empty();
    }
    let mut seen = BTreeSet::new();
    uses.iter().any(|u| live(&du, &m.members, u, &mut seen))
}

fn live(du: &DuChain, members: &[String], u: &UseSite, seen: &mut BTreeSet<(String, usize)>) -> bool {
    match (&u.kind, &u.target) {
        (UseKind::Other, _) | (UseKind::Copy, None) => true,
        // stores into member attributes outlive the call
        (UseKind::Copy, Some(t)) if members.contains(t) => true,
        (UseKind::Copy, Some(t)) => {
            if !seen.insert((t.clone(), u.stmt)) {
                return false;
            }
            du.uses(t, DefSite::Stmt(u.stmt))
                .iter()
                .any(|v| live(du, members, v, seen))
        }
    }
}
