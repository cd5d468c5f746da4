//! The scan → extract → check stages and corpus mutation.

use std::path::{Component, Path};

use anyhow::Context;
use cdi_core::checker::{check, CheckConfig, Evidence, Kind, Status};
use cdi_core::code_model::{enumerate_paths, FunctionModel};
use cdi_core::corpus::{mutate_corpus_with, CorpusRecord, Label, ManifestEntry, MutationPattern};
use cdi_core::docstrings::{
    filter_candidates, scan_tree, CandidatePair, DocUnit, OwnerKind, ScanResult, SourceFunction,
};
use cdi_core::extraction::{extract_constraints, render_unit, LlmClient};
use cdi_core::Constraint;
use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Whether a function body is inside the analysable subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SourceStatus {
    Supported,
    Unresolved { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub qualname: String,
    pub line_start: usize,
    pub line_end: usize,
    #[serde(flatten)]
    pub source: SourceStatus,
}

/// A documentation unit with at least one candidate parameter pair, and
/// the functions its constraints apply to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub unit: DocUnit,
    pub candidates: Vec<CandidatePair>,
    pub functions: Vec<FunctionEntry>,
}

pub struct Scan {
    pub result: ScanResult,
    pub entries: Vec<ScanEntry>,
}

fn source_status(f: &SourceFunction) -> SourceStatus {
    match FunctionModel::from_source(&f.source) {
        Ok(_) => SourceStatus::Supported,
        Err(e) => SourceStatus::Unresolved { reason: e.to_string() },
    }
}

/// Scans `tree` and keeps the pairable units.
pub fn run_scan(tree: &Path) -> anyhow::Result<Scan> {
    let result = scan_tree(tree).with_context(|| format!("scanning {}", tree.display()))?;
    for d in &result.diagnostics {
        warn!("{}: {}", d.file.display(), d.message);
    }
    let mut entries = Vec::new();
    for unit in &result.units {
        let candidates = filter_candidates(unit);
        if candidates.is_empty() {
            continue;
        }
        let functions = result
            .functions_for(unit)
            .into_iter()
            .map(|f| FunctionEntry {
                qualname: f.qualname.clone(),
                line_start: f.line_start,
                line_end: f.line_end,
                source: source_status(f),
            })
            .collect();
        entries.push(ScanEntry {
            unit: unit.clone(),
            candidates,
            functions,
        });
    }
    Ok(Scan { result, entries })
}

/// Path text with `/` separators on every platform.
pub fn portable_path(p: &Path) -> String {
    p.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            Component::ParentDir => Some("..".into()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn branches_on(f: &SourceFunction, c: &Constraint, max_paths: usize) -> bool {
    let Ok(m) = FunctionModel::from_source(&f.source) else {
        return false;
    };
    let params = c.params();
    enumerate_paths(&m, max_paths)
        .paths
        .iter()
        .any(|p| params.iter().any(|x| p.mentions(x)))
}

/// Functions a constraint is checked against. A function or method unit
/// documents itself; a class-level constraint goes to the methods that
/// branch on one of its parameters, or to every method when none does.
pub fn targets<'a>(scan: &'a ScanResult, unit: &DocUnit, c: &Constraint, max_paths: usize) -> Vec<&'a SourceFunction> {
    let all = scan.functions_for(unit);
    if unit.owner_kind != OwnerKind::Class {
        return all;
    }
    let branching: Vec<_> = all.iter().copied().filter(|f| branches_on(f, c, max_paths)).collect();
    if branching.is_empty() {
        all
    } else {
        branching
    }
}

#[derive(Debug, Default)]
pub struct Extraction {
    pub records: Vec<CorpusRecord>,
    /// Requests that failed; their chunks produced nothing.
    pub failures: usize,
    pub rejects: usize,
}

/// Extracts constraints from every pairable unit and pairs each with its
/// target functions. Requests are issued one at a time in scan order.
pub fn run_extract(tree: &Path, scan: &Scan, client: &mut dyn LlmClient, max_paths: usize) -> Extraction {
    let repo = tree
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "tree".into());
    let mut out = Extraction::default();
    for entry in &scan.entries {
        let unit = &entry.unit;
        let res = extract_constraints(unit, client);
        for f in &res.failures {
            warn!("{}: chunk {}: {}", unit.owner_name, f.chunk, f.error);
        }
        for r in &res.rejects {
            debug!("{}: rejected {:?}: {}", unit.owner_name, r.line, r.error);
        }
        out.failures += res.failures.len();
        out.rejects += res.rejects.len();
        for e in &res.constraints {
            let doc_text = if e.source_sentence.is_empty() {
                render_unit(unit)
            } else {
                e.source_sentence.clone()
            };
            for f in targets(&scan.result, unit, &e.constraint, max_paths) {
                out.records.push(CorpusRecord {
                    repo: repo.clone(),
                    sha: "worktree".into(),
                    file_path: portable_path(&f.file),
                    owner: f.qualname.clone(),
                    doc_text: doc_text.clone(),
                    constraint_text: e.constraint.to_string(),
                    code_source: f.source.clone(),
                    label: Label::Unknown,
                    mismatch_note: None,
                    mutation: None,
                });
            }
        }
    }
    out
}

/// One verdict in a report, with the record it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub record_id: String,
    pub file: String,
    pub owner: String,
    pub doc_sentence: String,
    pub constraint: String,
    pub status: Status,
    pub kind: Option<Kind>,
    pub membership: Option<f64>,
    pub evidence: Vec<Evidence>,
}

fn unresolved(rec: &CorpusRecord, message: String) -> Finding {
    Finding {
        record_id: rec.id(),
        file: rec.file_path.clone(),
        owner: rec.owner.clone(),
        doc_sentence: rec.doc_text.clone(),
        constraint: rec.constraint_text.clone(),
        status: Status::Unresolved,
        kind: None,
        membership: None,
        evidence: vec![Evidence::Note { message }],
    }
}

pub fn check_one(rec: &CorpusRecord, cfg: &CheckConfig) -> Finding {
    if rec.constraint_text.trim().is_empty() {
        return unresolved(rec, "no documented constraint".into());
    }
    let c = match rec.constraint() {
        Ok(c) => c,
        Err(e) => return unresolved(rec, format!("constraint does not parse: {e}")),
    };
    let m = match FunctionModel::from_source(&rec.code_source) {
        Ok(m) => m,
        Err(e) => return unresolved(rec, format!("unsupported source: {e}")),
    };
    let v = check(&c, &m, cfg);
    Finding {
        record_id: rec.id(),
        file: rec.file_path.clone(),
        owner: rec.owner.clone(),
        doc_sentence: rec.doc_text.clone(),
        constraint: rec.constraint_text.clone(),
        status: v.status,
        kind: v.kind,
        membership: v.mu(),
        evidence: v.evidence,
    }
}

/// Checks every record on a pool of `jobs` workers (0: one per core).
/// Findings come back in record order.
pub fn run_check(records: &[CorpusRecord], cfg: &CheckConfig, jobs: usize) -> anyhow::Result<Vec<Finding>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| records.par_iter().map(|r| check_one(r, cfg)).collect()))
}

pub fn run_mutate(
    records: &[CorpusRecord],
    patterns: &[MutationPattern],
    per_record: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> (Vec<CorpusRecord>, Vec<ManifestEntry>) {
    let (mutants, manifest) = mutate_corpus_with(records, patterns, per_record, seed, cfg);
    if mutants.is_empty() && !records.is_empty() {
        warn!("no pattern applied to any record; the output is empty");
    }
    (mutants, manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdi_core::parse_constraint;

    const MODULE: &str = r#"
class Model:
    """Model.

    Parameters
    ----------
    solver : str
        Solver name.
    alpha : float
        Penalty. Must be non-negative with the lbfgs solver.
    """

    def __init__(self, solver="lbfgs", alpha=1.0):
        self.solver = solver
        self.alpha = alpha

    def fit(self, X):
        if self.solver == "lbfgs" and self.alpha < 0:
            raise ValueError("alpha")
        return self
"#;

    #[test]
    fn class_constraints_go_to_branching_methods() {
        let mut scan = ScanResult::default();
        cdi_core::docstrings::scan_source(MODULE, Path::new("m.py"), &mut scan);
        let unit = &scan.units[0];
        let c = parse_constraint("(solver = \"lbfgs\") -> (alpha >= 0)").unwrap();
        let t: Vec<_> = targets(&scan, unit, &c, 64)
            .iter()
            .map(|f| f.qualname.clone())
            .collect();
        assert_eq!(t, vec!["Model.fit"]);
        let none = parse_constraint("zzz = 1").unwrap();
        assert_eq!(targets(&scan, unit, &none, 64).len(), 2);
    }

    #[test]
    fn unsupported_source_is_unresolved() {
        let rec = CorpusRecord {
            repo: "r".into(),
            sha: "s".into(),
            file_path: "f.py".into(),
            owner: "f".into(),
            doc_text: "d".into(),
            constraint_text: "(a = 1) -> (b = 2)".into(),
            code_source: "def f(a, b):\n    for x in a:\n        pass\n".into(),
            label: Label::Unknown,
            mismatch_note: None,
            mutation: None,
        };
        let f = check_one(&rec, &CheckConfig::default());
        assert_eq!(f.status, Status::Unresolved);
        assert!(matches!(&f.evidence[0], Evidence::Note { message } if message.contains("unsupported")));
    }

    #[test]
    fn paths_use_forward_slashes() {
        let p: std::path::PathBuf = ["a", "b", "c.py"].iter().collect();
        assert_eq!(portable_path(&p), "a/b/c.py");
    }
}
