//! Verdicts: crisp and fuzzy path checks and usage-predicate checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code_model::{
    enumerate_paths, ignored_conditions, is_used, normalize_function, slice_under_condition, used_conditions,
    FunctionModel, PathConstraint, Terminal, DEFAULT_MAX_PATHS,
};
use crate::constraint::{Constraint, Expression, Operator, PredKind, Value};
use crate::fcl::{self, FclConfig, Membership, PathScore};
use crate::sat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Consistent,
    Inconsistent,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Incorrectness,
    Incompleteness,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Consistent => "consistent",
            Status::Inconsistent => "inconsistent",
            Status::Unresolved => "unresolved",
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Incorrectness => "incorrectness",
            Kind::Incompleteness => "incompleteness",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    /// A path on which the constraint disagrees with the code.
    Path {
        index: usize,
        path: String,
    },
    /// Per-path membership score.
    Score(PathScore),
    /// A branch condition the constraint fails to cover.
    Uncovered {
        condition: String,
    },
    /// The parameter is used (or unused) contrary to the predicate.
    Usage {
        param: String,
        condition: String,
        used: bool,
    },
    Note {
        message: String,
    },
}

impl Evidence {
    /// Whether this item records a violation rather than a score or note.
    pub fn is_violation(&self) -> bool {
        matches!(
            self,
            Evidence::Path { .. } | Evidence::Uncovered { .. } | Evidence::Usage { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub kind: Option<Kind>,
    pub membership: Option<Membership>,
    pub evidence: Vec<Evidence>,
    pub constraint: Constraint,
    pub function: String,
}

impl Verdict {
    fn unresolved(c: &Constraint, message: impl Into<String>) -> Verdict {
        Verdict {
            status: Status::Unresolved,
            kind: None,
            membership: None,
            evidence: vec![Evidence::Note {
                message: message.into(),
            }],
            constraint: c.clone(),
            function: String::new(),
        }
    }

    pub fn with_function(mut self, name: impl Into<String>) -> Verdict {
        self.function = name.into();
        self
    }

    pub fn mu(&self) -> Option<f64> {
        self.membership.as_ref().map(|m| m.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub fcl: FclConfig,
    pub fuzzy_enabled: bool,
    pub relevance_filter: bool,
    pub max_paths: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            fcl: FclConfig::default(),
            fuzzy_enabled: true,
            relevance_filter: true,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

impl CheckConfig {
    /// Crisp-only configuration.
    pub fn vanilla() -> CheckConfig {
        CheckConfig {
            fuzzy_enabled: false,
            ..CheckConfig::default()
        }
    }
}

fn relevant<'a>(c: &Constraint, paths: &'a [PathConstraint], filter: bool) -> Vec<(usize, &'a PathConstraint)> {
    let params = c.params();
    paths
        .iter()
        .enumerate()
        .filter(|(_, p)| !filter || params.iter().any(|x| p.mentions(x)))
        .collect()
}

/// Whether the constraint agrees with one path: jointly satisfiable with a
/// normal path, unsatisfiable with an error path.
fn agrees(c: &Constraint, p: &PathConstraint) -> Result<bool, sat::SatError> {
    let joint = sat::is_satisfiable(&Constraint::and(c.clone(), p.formula()))?;
    Ok(match p.terminal {
        Terminal::Normal => joint,
        Terminal::ErrorEnd => !joint,
    })
}

fn crisp_on(c: &Constraint, rel: &[(usize, &PathConstraint)]) -> Verdict {
    let mut per_path = Vec::with_capacity(rel.len());
    let mut evidence = Vec::new();
    for (i, p) in rel {
        let ok = match agrees(c, p) {
            Ok(ok) => ok,
            Err(e) => return Verdict::unresolved(c, e.to_string()),
        };
        if !ok {
            evidence.push(Evidence::Path {
                index: *i,
                path: p.to_string(),
            });
        }
        per_path.push(PathScore {
            path: *i,
            rho: 1.0,
            holds: ok,
            score: if ok { 1.0 } else { 0.0 },
        });
    }
    let value = per_path.iter().map(|s| s.score).sum::<f64>() / per_path.len() as f64;
    let consistent = evidence.is_empty();
    Verdict {
        status: if consistent {
            Status::Consistent
        } else {
            Status::Inconsistent
        },
        kind: (!consistent).then_some(Kind::Incorrectness),
        membership: Some(Membership { value, per_path }),
        evidence,
        constraint: c.clone(),
        function: String::new(),
    }
}

/// Crisp check over relevant paths. The membership recorded on the verdict
/// is the fraction of relevant paths that agree.
pub fn check_crisp(c: &Constraint, paths: &[PathConstraint], relevance_filter: bool) -> Verdict {
    if c.has_predicates() {
        return Verdict::unresolved(c, "usage predicates need the function model");
    }
    let rel = relevant(c, paths, relevance_filter);
    if rel.is_empty() {
        return Verdict::unresolved(c, "no relevant paths");
    }
    crisp_on(c, &rel)
}

/// Boolean comparisons spelled as `= True` or `!= False` are the same leaf.
fn canonical(e: &Expression) -> Expression {
    match (e.op, &e.value) {
        (Operator::Ne, Value::Bool(b)) => Expression::new(e.param.clone(), Operator::Eq, Value::Bool(!b)),
        _ => e.clone(),
    }
}

/// Every atom of `c`, or its negation, appears verbatim on some path.
pub fn leaves_match_verbatim(c: &Constraint, rel: &[(usize, &PathConstraint)]) -> bool {
    let n = c.normalize();
    n.atoms().iter().all(|a| {
        let (pos, neg) = (canonical(a), canonical(&a.negated()));
        rel.iter()
            .any(|(_, p)| p.atoms.iter().map(canonical).any(|b| b == pos || b == neg))
    })
}

pub fn check_fuzzy(c: &Constraint, paths: &[PathConstraint], cfg: &CheckConfig) -> Verdict {
    if c.has_predicates() {
        return Verdict::unresolved(c, "usage predicates need the function model");
    }
    let rel = relevant(c, paths, cfg.relevance_filter);
    if rel.is_empty() {
        return Verdict::unresolved(c, "no relevant paths");
    }
    if leaves_match_verbatim(c, &rel) {
        return crisp_on(c, &rel);
    }
    // paths without atoms carry nothing to compare against
    let scored: Vec<_> = rel.iter().copied().filter(|(_, p)| !p.atoms.is_empty()).collect();
    let mu = match fcl::membership(c, &scored, &cfg.fcl) {
        Ok(mu) => mu,
        Err(e) => return Verdict::unresolved(c, e.to_string()),
    };
    let consistent = mu.value >= cfg.fcl.tau;
    let evidence = mu.per_path.iter().cloned().map(Evidence::Score).collect();
    Verdict {
        status: if consistent {
            Status::Consistent
        } else {
            Status::Inconsistent
        },
        kind: (!consistent).then_some(Kind::Incorrectness),
        membership: Some(mu),
        evidence,
        constraint: c.clone(),
        function: String::new(),
    }
}

/// Splits `A -> P(x)`, `!A v P(x)` or a bare `P(x)` into the antecedent and
/// the predicate.
pub fn split_usage(c: &Constraint) -> Option<(Constraint, PredKind, String)> {
    let crisp = |a: &Constraint| (!a.has_predicates()).then(|| a.clone());
    match c {
        Constraint::Pred(k, x) => Some((Constraint::Const(true), *k, x.clone())),
        Constraint::Implies(a, b) => match b.as_ref() {
            Constraint::Pred(k, x) => Some((crisp(a)?, *k, x.clone())),
            _ => None,
        },
        Constraint::Or(l, r) => {
            let (neg_a, k, x) = match (l.as_ref(), r.as_ref()) {
                (a, Constraint::Pred(k, x)) | (Constraint::Pred(k, x), a) => (a, *k, x.clone()),
                _ => return None,
            };
            Some((crisp(&Constraint::not(neg_a.clone()))?.normalize(), k, x))
        }
        Constraint::Not(inner) => match inner.as_ref() {
            Constraint::Pred(k, x) => Some((Constraint::Const(true), k.flipped(), x.clone())),
            _ => None,
        },
        _ => None,
    }
}

pub fn check_usage_predicate(c: &Constraint, m: &FunctionModel) -> Verdict {
    let Some((a, kind, x)) = split_usage(c) else {
        return Verdict::unresolved(c, "unsupported usage-predicate form");
    };
    let m = if m.normalized { m.clone() } else { normalize_function(m) };
    if !m.params.contains(&x) {
        return Verdict::unresolved(c, format!("unknown parameter {x}"));
    }
    let want_used = kind == PredKind::Specified;
    let verdict = |status, kind, evidence| Verdict {
        status,
        kind,
        membership: Some(Membership {
            value: if status == Status::Consistent { 1.0 } else { 0.0 },
            per_path: Vec::new(),
        }),
        evidence,
        constraint: c.clone(),
        function: m.name.clone(),
    };

    let sl = slice_under_condition(&m, &a);
    let used = is_used(&x, &sl.model, true);
    if used != want_used {
        return verdict(
            Status::Inconsistent,
            Some(Kind::Incorrectness),
            vec![Evidence::Usage {
                param: x.clone(),
                condition: a.to_string(),
                used,
            }],
        );
    }

    let conds = if want_used {
        used_conditions(&x, &m)
    } else {
        ignored_conditions(&x, &m)
    };
    let not_a = Constraint::not(a.clone());
    let mut uncovered = Vec::new();
    for b in conds {
        match sat::is_satisfiable(&Constraint::and(b.clone(), not_a.clone())) {
            Ok(true) => uncovered.push(Evidence::Uncovered {
                condition: b.to_string(),
            }),
            Ok(false) => {}
            Err(e) => return Verdict::unresolved(c, e.to_string()),
        }
    }
    if uncovered.is_empty() {
        verdict(Status::Consistent, None, Vec::new())
    } else {
        verdict(Status::Inconsistent, Some(Kind::Incompleteness), uncovered)
    }
}

/// Dispatches on the constraint shape: usage predicates go to the slicing
/// check, everything else to the path checks.
pub fn check(c: &Constraint, m: &FunctionModel, cfg: &CheckConfig) -> Verdict {
    let v = if c.has_predicates() {
        check_usage_predicate(c, m)
    } else {
        let set = enumerate_paths(m, cfg.max_paths);
        let mut v = if cfg.fuzzy_enabled {
            check_fuzzy(c, &set.paths, cfg)
        } else {
            check_crisp(c, &set.paths, cfg.relevance_filter)
        };
        if set.truncated {
            v.evidence.push(Evidence::Note {
                message: format!("path enumeration truncated at {}", cfg.max_paths),
            });
        }
        v
    };
    v.with_function(m.name.clone())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub by_status: BTreeMap<Status, usize>,
    pub by_kind: BTreeMap<Kind, usize>,
    /// Verdicts with the lowest membership first; unresolved ones last.
    pub ranked: Vec<Verdict>,
}

pub fn classify(verdicts: &[Verdict]) -> Summary {
    let mut s = Summary {
        total: verdicts.len(),
        ..Summary::default()
    };
    for v in verdicts {
        *s.by_status.entry(v.status).or_default() += 1;
        if let Some(k) = v.kind {
            *s.by_kind.entry(k).or_default() += 1;
        }
    }
    s.ranked = verdicts.to_vec();
    s.ranked.sort_by(|a, b| {
        a.mu()
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.mu().unwrap_or(f64::INFINITY))
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_constraint;

    const FIG1: &str = r#"
def fit(self, deterministic=None):
    if deterministic is not None and (self.trend != "n" or self.seasonal):
        warnings.warn("trend and seasonal are ignored")
"#;

    const FIG5: &str = r#"
def fit(self, sample_weight):
    if sample_weight is not None and self.strategy == "uniform":
        raise ValueError("Warning Info")
    if sample_weight is not None:
        sample_weight = _check_sample_weight(sample_weight, X)
"#;

    const FIG6: &str = r#"
def lars_path(X, y, Xy=None, Gram=None):
    if X is None and Gram is not None:
        raise ValueError("X cannot be None if Gram is not None")
    return X
"#;

    fn c(text: &str) -> Constraint {
        parse_constraint(text).unwrap()
    }

    fn paths(src: &str) -> Vec<PathConstraint> {
        enumerate_paths(&FunctionModel::from_source(src).unwrap(), 256).paths
    }

    #[test]
    fn fig1_buggy_doc_is_incorrect() {
        let ps = paths(FIG1);
        let v = check_crisp(
            &c(r#"(deterministic != None) -> !((trend != "n") ^ (seasonal != False))"#),
            &ps,
            true,
        );
        assert_eq!(v.status, Status::Inconsistent);
        assert_eq!(v.kind, Some(Kind::Incorrectness));
        let Evidence::Path { index, .. } = &v.evidence[0] else {
            panic!()
        };
        let p = &ps[*index];
        assert_eq!(p.terminal, Terminal::ErrorEnd);
        let corrected = check_crisp(
            &c(r#"(deterministic != None) -> ((trend = "n") ^ (seasonal = False))"#),
            &ps,
            true,
        );
        assert_eq!(corrected.status, Status::Consistent);
    }

    #[test]
    fn fig6_doc_and_correction() {
        let ps = paths(FIG6);
        let buggy = check_crisp(&c("(X = None) -> (Gram != None)"), &ps, true);
        assert_eq!(buggy.status, Status::Inconsistent);
        let fixed = check_crisp(&c("(X = None) -> (Gram = None)"), &ps, true);
        assert_eq!(fixed.status, Status::Consistent);
    }

    #[test]
    fn flipping_error_paths_flips_fig6() {
        let mut ps = paths(FIG6);
        let cc = c("(X = None) -> (Gram = None)");
        assert_eq!(check_crisp(&cc, &ps, true).status, Status::Consistent);
        for p in &mut ps {
            p.terminal = Terminal::Normal;
        }
        assert_eq!(check_crisp(&cc, &ps, true).status, Status::Inconsistent);
    }

    #[test]
    fn no_relevant_paths_is_unresolved() {
        let ps = paths(FIG6);
        assert_eq!(check_crisp(&c("zzz = 1"), &ps, true).status, Status::Unresolved);
        assert_eq!(
            check_fuzzy(&c("zzz = 1"), &ps, &CheckConfig::default()).status,
            Status::Unresolved
        );
    }

    #[test]
    fn fig5_typo_fuzzy_versus_vanilla() {
        let ps = paths(FIG5);
        let typo = c(r#"(sample_weight = None) v (stratgy != "uniform")"#);
        let fuzzy = check_fuzzy(&typo, &ps, &CheckConfig::default());
        assert_eq!(fuzzy.status, Status::Consistent);
        assert!(fuzzy.mu().unwrap() > 0.5);
        assert_eq!(check_crisp(&typo, &ps, true).status, Status::Inconsistent);
        let exact = c(r#"(sample_weight = None) v (strategy != "uniform")"#);
        let v = check_fuzzy(&exact, &ps, &CheckConfig::default());
        assert_eq!(v.status, Status::Consistent);
        assert_eq!(v.mu(), Some(1.0));
    }

    #[test]
    fn reversed_operator_is_flagged() {
        let ps = paths("def f(x):\n    if x <= 0:\n        raise ValueError\n    return x\n");
        let cfg = CheckConfig::default();
        assert_eq!(check_fuzzy(&c("x > 0"), &ps, &cfg).status, Status::Consistent);
        let v = check_fuzzy(&c("x < 0"), &ps, &cfg);
        assert_eq!(v.status, Status::Inconsistent);
        assert!(v.mu().unwrap() < cfg.fcl.tau);
    }

    #[test]
    fn bool_spellings_take_the_crisp_route() {
        let ps = paths("def f(flag, rate):\n    if flag and rate <= 0:\n        raise ValueError\n    return rate\n");
        let rel: Vec<_> = ps.iter().enumerate().collect();
        assert!(leaves_match_verbatim(&c("(flag = True) -> (rate > 0)"), &rel));
        let v = check_fuzzy(&c("(flag = True) -> (rate > 0)"), &ps, &CheckConfig::default());
        assert_eq!(v.status, Status::Consistent);
        assert_eq!(v.mu(), Some(1.0));
    }

    const FIG2: &str = r#"
def fit(self, X, y=None):
    if self.affinity == "nearest_neighbors":
        connectivity = kneighbors_graph(X, n_neighbors=self.n_neighbors, include_self=True, n_jobs=self.n_jobs)
        self.affinity_matrix_ = 0.5 * (connectivity + connectivity.T)
    elif self.affinity == "precomputed_nearest_neighbors":
        estimator = NearestNeighbors(n_neighbors=self.n_neighbors, n_jobs=self.n_jobs, metric="precomputed").fit(X)
        connectivity = estimator.kneighbors_graph(X=X, mode="connectivity")
        self.affinity_matrix_ = 0.5 * (connectivity + connectivity.T)
    elif self.affinity == "precomputed":
        self.affinity_matrix_ = X
    else:
        params = self.kernel_params
        if params is None:
            params = {}
        if not callable(self.affinity):
            params["gamma"] = self.gamma
            params["degree"] = self.degree
            params["coef0"] = self.coef0
        self.affinity_matrix_ = pairwise_kernels(X, metric=self.affinity, filter_params=True, **params)
    return self
"#;

    #[test]
    fn fig2_gamma_doc_is_incomplete() {
        let m = FunctionModel::from_source(FIG2).unwrap();
        let v = check_usage_predicate(&c(r#"(affinity = "nearest_neighbors") -> ignore(gamma)"#), &m);
        assert_eq!(v.status, Status::Inconsistent);
        assert_eq!(v.kind, Some(Kind::Incompleteness));
        assert_eq!(v.evidence.len(), 2);
        let full = c(
            r#"((affinity = "nearest_neighbors") v (affinity = "precomputed_nearest_neighbors") v (affinity = "precomputed")) -> ignore(gamma)"#,
        );
        assert_eq!(check_usage_predicate(&full, &m).status, Status::Consistent);
    }

    #[test]
    fn ignore_claim_contradicted_by_use() {
        let m =
            FunctionModel::from_source("def f(a, x):\n    if a == 1:\n        g(x)\n    else:\n        h()\n").unwrap();
        let v = check_usage_predicate(&c("(a = 1) -> ignore(x)"), &m);
        assert_eq!(v.kind, Some(Kind::Incorrectness));
        assert!(is_used("x", &slice_under_condition(&m, &c("a = 1")).model, true));
        assert_eq!(
            check_usage_predicate(&c("(a != 1) -> ignore(x)"), &m).status,
            Status::Consistent
        );
        assert_eq!(
            check_usage_predicate(&c("(a = 1) -> specified(x)"), &m).status,
            Status::Consistent
        );
        assert_eq!(
            check_usage_predicate(&c("(a = 1) -> ignore(nope)"), &m).status,
            Status::Unresolved
        );
    }

    #[test]
    fn classify_orders_by_membership() {
        let mk = |mu: f64, status| Verdict {
            status,
            kind: None,
            membership: Some(Membership {
                value: mu,
                per_path: vec![],
            }),
            evidence: vec![],
            constraint: Constraint::Const(true),
            function: String::new(),
        };
        let s = classify(&[
            mk(0.9, Status::Consistent),
            mk(0.2, Status::Inconsistent),
            mk(0.4, Status::Inconsistent),
        ]);
        let order: Vec<_> = s.ranked.iter().map(|v| v.mu().unwrap()).collect();
        assert_eq!(order, vec![0.2, 0.4, 0.9]);
        assert_eq!(s.by_status[&Status::Inconsistent], 2);
        assert_eq!(classify(&[]).total, 0);
    }
}
