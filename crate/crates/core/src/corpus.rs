//! Corpus records, mutation patterns and mutant validation.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checker::{check, CheckConfig, Status};
use crate::code_model::FunctionModel;
use crate::constraint::{parse_constraint, Constraint, Expression, Number, Operator, ParseError, Value};
use crate::sat::{self, SatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Consistent,
    Inconsistent,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationPattern {
    ParamNameChange,
    ValueChange,
    LogicChange,
    RemoveParameter,
    AddConstraint,
    RemoveConstraint,
    MissingDocumentation,
    ModifyDescription,
}

impl MutationPattern {
    pub const ALL: [MutationPattern; 8] = [
        MutationPattern::ParamNameChange,
        MutationPattern::ValueChange,
        MutationPattern::LogicChange,
        MutationPattern::RemoveParameter,
        MutationPattern::AddConstraint,
        MutationPattern::RemoveConstraint,
        MutationPattern::MissingDocumentation,
        MutationPattern::ModifyDescription,
    ];
}

impl std::str::FromStr for MutationPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationPattern::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown mutation pattern {s:?}"))
    }
}

impl fmt::Display for MutationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Provenance of a mutant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationInfo {
    pub parent: String,
    pub pattern: MutationPattern,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub repo: String,
    pub sha: String,
    pub file_path: String,
    pub owner: String,
    pub doc_text: String,
    pub constraint_text: String,
    pub code_source: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<MutationInfo>,
}

impl CorpusRecord {
    /// Stable identifier built from the source location and constraint.
    pub fn id(&self) -> String {
        let h = format!("{:x}", Sha256::digest(self.constraint_text.as_bytes()));
        let base = format!(
            "{}@{}:{}::{}#{}",
            self.repo,
            self.sha,
            self.file_path,
            self.owner,
            &h[..8]
        );
        match &self.mutation {
            Some(m) => format!("{base}~{}:{}", m.pattern, m.seed),
            None => base,
        }
    }

    pub fn constraint(&self) -> Result<Constraint, ParseError> {
        parse_constraint(&self.constraint_text)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{pattern} does not apply: {reason}")]
    InapplicablePattern { pattern: MutationPattern, reason: String },
    #[error(transparent)]
    Constraint(#[from] ParseError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("usage predicates are validated by the checker")]
    Predicates,
}

pub fn read_records(path: &Path) -> Result<Vec<CorpusRecord>, CorpusError> {
    read_jsonl(path)
}

pub fn write_records(records: &[CorpusRecord], path: &Path) -> Result<(), CorpusError> {
    write_jsonl(records, path)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut w, it).map_err(io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub record_id: String,
    pub pattern: MutationPattern,
    pub seed: u64,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    read_jsonl(path)
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<(), CorpusError> {
    write_jsonl(entries, path)
}

// ---- tree helpers -------------------------------------------------------

fn preorder(c: &Constraint) -> Vec<&Constraint> {
    let mut out = vec![c];
    match c {
        Constraint::Not(x) => out.extend(preorder(x)),
        Constraint::And(a, b) | Constraint::Or(a, b) | Constraint::Implies(a, b) => {
            out.extend(preorder(a));
            out.extend(preorder(b));
        }
        _ => {}
    }
    out
}

fn size(c: &Constraint) -> usize {
    preorder(c).len()
}

/// Replaces the node at pre-order index `idx`.
fn replace_at(c: &Constraint, idx: usize, f: &mut dyn FnMut(&Constraint) -> Constraint) -> Constraint {
    fn go(c: &Constraint, idx: usize, pos: &mut usize, f: &mut dyn FnMut(&Constraint) -> Constraint) -> Constraint {
        let here = *pos;
        *pos += 1;
        if here == idx {
            *pos += size(c) - 1;
            return f(c);
        }
        match c {
            Constraint::Not(x) => Constraint::Not(Box::new(go(x, idx, pos, f))),
            Constraint::And(a, b) => {
                let a = go(a, idx, pos, f);
                Constraint::And(Box::new(a), Box::new(go(b, idx, pos, f)))
            }
            Constraint::Or(a, b) => {
                let a = go(a, idx, pos, f);
                Constraint::Or(Box::new(a), Box::new(go(b, idx, pos, f)))
            }
            Constraint::Implies(a, b) => {
                let a = go(a, idx, pos, f);
                Constraint::Implies(Box::new(a), Box::new(go(b, idx, pos, f)))
            }
            other => other.clone(),
        }
    }
    let mut pos = 0;
    go(c, idx, &mut pos, f)
}

/// Deletes the node at `idx`; a binary node left with one child collapses
/// into it. `None` when nothing remains.
fn remove_at(c: &Constraint, idx: usize) -> Option<Constraint> {
    fn go(c: &Constraint, idx: usize, pos: &mut usize) -> Option<Constraint> {
        let here = *pos;
        *pos += 1;
        if here == idx {
            *pos += size(c) - 1;
            return None;
        }
        let bin =
            |a: Option<Constraint>, b: Option<Constraint>, mk: fn(Constraint, Constraint) -> Constraint| match (a, b) {
                (Some(a), Some(b)) => Some(mk(a, b)),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            };
        match c {
            Constraint::Not(x) => go(x, idx, pos).map(Constraint::not),
            Constraint::And(a, b) => {
                let a = go(a, idx, pos);
                bin(a, go(b, idx, pos), Constraint::and)
            }
            Constraint::Or(a, b) => {
                let a = go(a, idx, pos);
                bin(a, go(b, idx, pos), Constraint::or)
            }
            Constraint::Implies(a, b) => {
                let a = go(a, idx, pos);
                bin(a, go(b, idx, pos), Constraint::implies)
            }
            other => Some(other.clone()),
        }
    }
    let mut pos = 0;
    go(c, idx, &mut pos)
}

fn indices(c: &Constraint, pred: impl Fn(&Constraint) -> bool) -> Vec<usize> {
    preorder(c)
        .into_iter()
        .enumerate()
        .filter(|(_, n)| pred(n))
        .map(|(i, _)| i)
        .collect()
}

fn is_leaf(c: &Constraint) -> bool {
    matches!(c, Constraint::Atom(_) | Constraint::Pred(..))
}

fn one_edit(name: &str, rng: &mut ChaCha8Rng) -> String {
    const ALPHA: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let chars: Vec<char> = name.chars().collect();
    loop {
        let mut v = chars.clone();
        match rng.gen_range(0..3) {
            0 if v.len() > 1 => {
                v.remove(rng.gen_range(0..v.len()));
            }
            1 if !v.is_empty() => {
                let i = rng.gen_range(0..v.len());
                v[i] = ALPHA[rng.gen_range(0..ALPHA.len())] as char;
            }
            _ => {
                let i = rng.gen_range(0..=v.len());
                v.insert(i, ALPHA[rng.gen_range(0..ALPHA.len())] as char);
            }
        }
        let s: String = v.into_iter().collect();
        if s != name {
            return s;
        }
    }
}

fn code_params(source: &str) -> Vec<String> {
    FunctionModel::from_source(source)
        .map(|m| m.params.into_iter().filter(|p| !p.starts_with("call_")).collect())
        .unwrap_or_default()
}

fn bump(v: &Value, rng: &mut ChaCha8Rng, taken: &[&Value]) -> Option<Value> {
    match v {
        Value::Num(n) if n.is_integer() => Some(Value::Num(Number::from_i64(n.value() as i64 + 1))),
        Value::Num(n) => Some(Value::Num(Number::from_f64(n.value() + 1.0))),
        Value::Str(s) => {
            let mut fresh = format!("{s}_{}", rng.gen_range(0..100));
            while taken.iter().any(|t| matches!(t, Value::Str(x) if *x == fresh)) {
                fresh.push('x');
            }
            Some(Value::Str(fresh))
        }
        Value::Bool(b) => Some(Value::Bool(!b)),
        Value::None => None,
    }
}

fn describe_change(doc: &str, rng: &mut ChaCha8Rng) -> String {
    let sents = crate::docstrings::sentences(doc);
    if sents.len() >= 2 && rng.gen_bool(0.5) {
        let mut s = sents.clone();
        let i = rng.gen_range(0..s.len());
        s.remove(i);
        return s.join(" ");
    }
    const SWAPS: [(&str, &str); 6] = [
        ("must", "should"),
        ("only", "mainly"),
        ("ignored", "not considered"),
        ("required", "expected"),
        ("when", "if"),
        ("is", "becomes"),
    ];
    for (a, b) in SWAPS {
        if crate::docstrings::contains_word(doc, a) {
            return replace_word(doc, a, b);
        }
    }
    format!("Note that {}", doc.trim())
}

fn replace_word(text: &str, word: &str, with: &str) -> String {
    let re = regex::Regex::new(&format!(r"\b{}\b", regex::escape(word))).unwrap();
    re.replace(text, with).into_owned()
}

/// Applies one pattern. The result depends only on the record, pattern and
/// seed; labels are left to [`label_mutant`].
pub fn mutate(record: &CorpusRecord, pattern: MutationPattern, seed: u64) -> Result<CorpusRecord, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((pattern as u64) << 56));
    let inapplicable = |reason: &str| CorpusError::InapplicablePattern {
        pattern,
        reason: reason.to_string(),
    };
    let mut out = record.clone();
    out.mutation = Some(MutationInfo {
        parent: record.id(),
        pattern,
        seed,
    });
    match pattern {
        MutationPattern::MissingDocumentation => {
            if record.constraint_text.trim().is_empty() {
                return Err(inapplicable("no documented constraint"));
            }
            out.constraint_text = String::new();
            out.label = Label::Unknown;
            return Ok(out);
        }
        MutationPattern::ModifyDescription => {
            if record.doc_text.trim().is_empty() {
                return Err(inapplicable("empty description"));
            }
            out.doc_text = describe_change(&record.doc_text, &mut rng);
            return Ok(out);
        }
        _ => {}
    }
    let c = record.constraint()?;
    let nodes = preorder(&c);
    let mutant = match pattern {
        MutationPattern::ParamNameChange => {
            let leaves = indices(&c, is_leaf);
            let &i = leaves.choose(&mut rng).ok_or_else(|| inapplicable("no leaves"))?;
            let old = match nodes[i] {
                Constraint::Atom(e) => e.param.clone(),
                Constraint::Pred(_, x) => x.clone(),
                _ => unreachable!(),
            };
            let mut scope: Vec<String> = c.params().into_iter().chain(code_params(&record.code_source)).collect();
            scope.sort();
            scope.dedup();
            scope.retain(|p| *p != old);
            let new = if !scope.is_empty() && rng.gen_bool(0.5) {
                scope.choose(&mut rng).unwrap().clone()
            } else {
                one_edit(&old, &mut rng)
            };
            replace_at(&c, i, &mut |n| match n {
                Constraint::Atom(e) => Constraint::Atom(Expression::new(new.clone(), e.op, e.value.clone())),
                Constraint::Pred(k, _) => Constraint::Pred(*k, new.clone()),
                _ => unreachable!(),
            })
        }
        MutationPattern::ValueChange => {
            let sites = indices(&c, |n| matches!(n, Constraint::Atom(e) if e.value != Value::None));
            let &i = sites
                .choose(&mut rng)
                .ok_or_else(|| inapplicable("no atom with a non-None value"))?;
            let taken: Vec<&Value> = c.atoms().iter().map(|e| &e.value).collect();
            let Constraint::Atom(e) = nodes[i] else { unreachable!() };
            let v = bump(&e.value, &mut rng, &taken).ok_or_else(|| inapplicable("value cannot change"))?;
            let e = Expression::new(e.param.clone(), e.op, v);
            replace_at(&c, i, &mut |_| Constraint::Atom(e.clone()))
        }
        MutationPattern::LogicChange => {
            if is_leaf(&c) {
                return Err(inapplicable("a single comparison has no logic to change"));
            }
            let sites = indices(&c, |n| {
                matches!(n, Constraint::Atom(_) | Constraint::And(..) | Constraint::Or(..))
            });
            let &i = sites
                .choose(&mut rng)
                .ok_or_else(|| inapplicable("no operator or connective"))?;
            replace_at(&c, i, &mut |n| match n {
                Constraint::Atom(e) => Constraint::Atom(e.negated()),
                Constraint::And(a, b) => Constraint::Or(a.clone(), b.clone()),
                Constraint::Or(a, b) => Constraint::And(a.clone(), b.clone()),
                _ => unreachable!(),
            })
        }
        MutationPattern::RemoveParameter => {
            let leaves = indices(&c, is_leaf);
            if leaves.len() < 2 {
                return Err(inapplicable("a single leaf cannot be removed"));
            }
            let &i = leaves.choose(&mut rng).unwrap();
            remove_at(&c, i).ok_or_else(|| inapplicable("nothing left"))?
        }
        MutationPattern::AddConstraint => {
            let mut scope: Vec<String> = c.params().into_iter().chain(code_params(&record.code_source)).collect();
            scope.sort();
            scope.dedup();
            let p = scope
                .choose(&mut rng)
                .ok_or_else(|| inapplicable("no parameters in scope"))?
                .clone();
            let same: Vec<&Expression> = c.atoms().into_iter().filter(|e| e.param == p).collect();
            let atom = match same.choose(&mut rng) {
                Some(e) => match &e.value {
                    Value::Num(n) => {
                        let op = *[Operator::Lt, Operator::Gt, Operator::Le, Operator::Ge]
                            .choose(&mut rng)
                            .unwrap();
                        let delta = rng.gen_range(-3i64..=3);
                        Expression::new(p, op, Value::Num(Number::from_f64(n.value() + delta as f64)))
                    }
                    Value::Str(s) => {
                        let op = if rng.gen_bool(0.5) { Operator::Eq } else { Operator::Ne };
                        Expression::new(p, op, Value::Str(s.clone()))
                    }
                    Value::Bool(_) => Expression::new(p, Operator::Eq, Value::Bool(rng.gen_bool(0.5))),
                    Value::None => {
                        let op = if rng.gen_bool(0.5) { Operator::Eq } else { Operator::Ne };
                        Expression::new(p, op, Value::None)
                    }
                },
                None => Expression::new(p, Operator::Ne, Value::None),
            };
            Constraint::and(c.clone(), Constraint::Atom(atom))
        }
        MutationPattern::RemoveConstraint => {
            let ands = indices(&c, |n| matches!(n, Constraint::And(..)));
            let &i = ands.choose(&mut rng).ok_or_else(|| inapplicable("no conjunction"))?;
            let left = rng.gen_bool(0.5);
            replace_at(&c, i, &mut |n| match n {
                Constraint::And(a, b) => {
                    if left {
                        (**b).clone()
                    } else {
                        (**a).clone()
                    }
                }
                _ => unreachable!(),
            })
        }
        MutationPattern::MissingDocumentation | MutationPattern::ModifyDescription => unreachable!(),
    };
    if mutant == c {
        return Err(inapplicable("mutation left the constraint unchanged"));
    }
    out.constraint_text = mutant.to_string();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutantRelation {
    Equivalent,
    /// The original implies the mutant but not conversely.
    Weaker,
    /// The mutant implies the original but not conversely.
    Stronger,
    /// Neither implies the other.
    Violates,
}

pub fn validate_mutant(original: &Constraint, mutant: &Constraint) -> Result<MutantRelation, CorpusError> {
    if original.has_predicates() || mutant.has_predicates() {
        return Err(CorpusError::Predicates);
    }
    let o_to_m = !sat::is_satisfiable(&Constraint::and(original.clone(), Constraint::not(mutant.clone())))?;
    let m_to_o = !sat::is_satisfiable(&Constraint::and(mutant.clone(), Constraint::not(original.clone())))?;
    Ok(match (o_to_m, m_to_o) {
        (true, true) => MutantRelation::Equivalent,
        (true, false) => MutantRelation::Weaker,
        (false, true) => MutantRelation::Stronger,
        (false, false) => MutantRelation::Violates,
    })
}

/// Checker verdict for a record's constraint against its code.
pub fn check_record(record: &CorpusRecord, cfg: &CheckConfig) -> Label {
    if record.constraint_text.trim().is_empty() {
        return Label::Unknown;
    }
    let (Ok(c), Ok(m)) = (record.constraint(), FunctionModel::from_source(&record.code_source)) else {
        return Label::Unknown;
    };
    match check(&c, &m, cfg).status {
        Status::Consistent => Label::Consistent,
        Status::Inconsistent => Label::Inconsistent,
        Status::Unresolved => Label::Unknown,
    }
}

/// Label of a mutant: the parent's label when the constraints are
/// equivalent, the checker's verdict otherwise.
pub fn label_mutant(parent: &CorpusRecord, mutant: &CorpusRecord, cfg: &CheckConfig) -> Label {
    if mutant.constraint_text.trim().is_empty() {
        return Label::Unknown;
    }
    if mutant.constraint_text == parent.constraint_text {
        return parent.label;
    }
    if let (Ok(o), Ok(m)) = (parent.constraint(), mutant.constraint()) {
        if let Ok(MutantRelation::Equivalent) = validate_mutant(&o, &m) {
            return parent.label;
        }
    }
    check_record(mutant, cfg)
}

pub const MUTATIONS_PER_RECORD: usize = 2;

/// Applies `per_record` distinct applicable patterns to each record and
/// labels the mutants.
pub fn mutate_corpus(
    records: &[CorpusRecord],
    per_record: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> (Vec<CorpusRecord>, Vec<ManifestEntry>) {
    mutate_corpus_with(records, &MutationPattern::ALL, per_record, seed, cfg)
}

/// As [`mutate_corpus`], drawing only from `patterns`. Records where no
/// pattern applies contribute nothing.
pub fn mutate_corpus_with(
    records: &[CorpusRecord],
    patterns: &[MutationPattern],
    per_record: usize,
    seed: u64,
    cfg: &CheckConfig,
) -> (Vec<CorpusRecord>, Vec<ManifestEntry>) {
    let mut mutants = Vec::new();
    let mut manifest = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut order = MutationPattern::ALL.to_vec();
        order.shuffle(&mut rng);
        let mut done = 0;
        for p in order {
            if done == per_record {
                break;
            }
            let s: u64 = rng.gen();
            if !patterns.contains(&p) {
                continue;
            }
            if let Ok(mut m) = mutate(rec, p, s) {
                m.label = label_mutant(rec, &m, cfg);
                manifest.push(ManifestEntry {
                    record_id: rec.id(),
                    pattern: p,
                    seed: s,
                });
                mutants.push(m);
                done += 1;
            }
        }
    }
    (mutants, manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(constraint: &str) -> CorpusRecord {
        CorpusRecord {
            repo: "statsmodels".into(),
            sha: "abc123".into(),
            file_path: "tsa/exponential_smoothing/ets.py".into(),
            owner: "ETSModel.fit".into(),
            doc_text: "If deterministic is not None, trend must be \"n\" and seasonal must be False.".into(),
            constraint_text: constraint.into(),
            code_source: "def fit(self, deterministic=None):\n    if deterministic is not None and (self.trend != \"n\" or self.seasonal):\n        warnings.warn(\"x\")\n".into(),
            label: Label::Consistent,
            mismatch_note: None,
            mutation: None,
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let recs = vec![rec("a = 1"), rec("b = 2"), rec("c = 3")];
        write_records(&recs, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(read_records(&p).unwrap(), recs);
        write_records(&read_records(&p).unwrap(), &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), bytes);

        let lines: Vec<String> = std::str::from_utf8(&bytes).unwrap().lines().map(String::from).collect();
        std::fs::write(&p, format!("{}\n{{not json\n{}\n", lines[0], lines[2])).unwrap();
        assert!(matches!(read_records(&p), Err(CorpusError::Parse { line: 2, .. })));
        std::fs::write(&p, "").unwrap();
        assert!(read_records(&p).unwrap().is_empty());
    }

    #[test]
    fn logic_change_can_turn_and_into_or() {
        let r = rec("(trend != \"n\") ^ (seasonal != False)");
        let want = parse_constraint("(trend != \"n\") v (seasonal != False)").unwrap();
        let outs: Vec<Constraint> = (0..32)
            .map(|s| {
                mutate(&r, MutationPattern::LogicChange, s)
                    .unwrap()
                    .constraint()
                    .unwrap()
            })
            .collect();
        assert!(outs.contains(&want));
        let o = r.constraint().unwrap();
        for m in &outs {
            assert_ne!(validate_mutant(&o, m).unwrap(), MutantRelation::Equivalent);
        }
    }

    #[test]
    fn single_atom_cases() {
        let r = rec("x < 3");
        assert!(matches!(
            mutate(&r, MutationPattern::RemoveParameter, 1),
            Err(CorpusError::InapplicablePattern { .. })
        ));
        assert!(mutate(&r, MutationPattern::RemoveConstraint, 1).is_err());
        assert!(matches!(
            mutate(&r, MutationPattern::LogicChange, 1),
            Err(CorpusError::InapplicablePattern { .. })
        ));
        let m = mutate(&r, MutationPattern::ValueChange, 7).unwrap();
        assert_eq!(m.constraint_text, "(x < 4)");
    }

    #[test]
    fn other_patterns() {
        let r = rec("(deterministic != None) -> ((trend = \"n\") ^ (seasonal = False))");
        let m = mutate(&r, MutationPattern::MissingDocumentation, 0).unwrap();
        assert_eq!((m.constraint_text.as_str(), m.label), ("", Label::Unknown));
        let m = mutate(&r, MutationPattern::ModifyDescription, 0).unwrap();
        assert_eq!(m.constraint_text, r.constraint_text);
        assert_ne!(m.doc_text, r.doc_text);
        let m = mutate(&r, MutationPattern::RemoveConstraint, 0).unwrap();
        assert_eq!(m.constraint().unwrap().atoms().len(), 2);
        let m = mutate(&r, MutationPattern::RemoveParameter, 3).unwrap();
        assert_eq!(m.constraint().unwrap().atoms().len(), 2);
        let m = mutate(&r, MutationPattern::AddConstraint, 5).unwrap();
        assert_eq!(m.constraint().unwrap().atoms().len(), 4);
        let m = mutate(&r, MutationPattern::ParamNameChange, 9).unwrap();
        assert_ne!(m.constraint().unwrap().params(), r.constraint().unwrap().params());
        assert_eq!(m.mutation.as_ref().unwrap().seed, 9);
    }

    #[test]
    fn mutation_is_deterministic() {
        let r = rec("(a = 1) ^ ((b = \"x\") v (c > 2))");
        for p in MutationPattern::ALL {
            for s in 0..8 {
                let a = mutate(&r, p, s).map(|m| m.constraint_text + &m.doc_text).ok();
                let b = mutate(&r, p, s).map(|m| m.constraint_text + &m.doc_text).ok();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn mutant_relations() {
        let c = |s: &str| parse_constraint(s).unwrap();
        assert_eq!(
            validate_mutant(&c("(a = 1) ^ (b = 2)"), &c("(a = 1) v (b = 2)")).unwrap(),
            MutantRelation::Weaker
        );
        assert_eq!(
            validate_mutant(&c("a = 1"), &c("a = 1")).unwrap(),
            MutantRelation::Equivalent
        );
        assert_eq!(
            validate_mutant(&c("x < 3"), &c("x < 4")).unwrap(),
            MutantRelation::Weaker
        );
        assert_eq!(
            validate_mutant(&c("x < 4"), &c("x < 3")).unwrap(),
            MutantRelation::Stronger
        );
        assert_eq!(
            validate_mutant(&c("x = 1"), &c("x = 2")).unwrap(),
            MutantRelation::Violates
        );
        assert!(validate_mutant(&c("ignore(x)"), &c("x = 1")).is_err());
    }

    #[test]
    fn labels_follow_equivalence_then_checker() {
        let cfg = CheckConfig::default();
        let parent = rec("(deterministic != None) -> ((trend = \"n\") ^ (seasonal = False))");
        assert_eq!(check_record(&parent, &cfg), Label::Consistent);
        let mut same = parent.clone();
        same.constraint_text = "(deterministic = None) v ((trend = \"n\") ^ (seasonal = False))".into();
        assert_eq!(label_mutant(&parent, &same, &cfg), Label::Consistent);
        let mut buggy = parent.clone();
        buggy.constraint_text = "(deterministic != None) -> ((trend = \"n\") v (seasonal = False))".into();
        assert_eq!(label_mutant(&parent, &buggy, &cfg), Label::Inconsistent);
    }

    #[test]
    fn corpus_mutation_writes_manifest() {
        let recs = vec![rec("(a = 1) ^ (b = 2)"), rec("x < 3")];
        let (muts, manifest) = mutate_corpus(&recs, 2, 42, &CheckConfig::default());
        assert_eq!(muts.len(), 4);
        assert_eq!(manifest.len(), 4);
        assert_eq!(manifest[0].record_id, recs[0].id());
        let (again, _) = mutate_corpus(&recs, 2, 42, &CheckConfig::default());
        assert_eq!(muts, again);
        let (logic, _) = mutate_corpus_with(&recs, &[MutationPattern::LogicChange], 2, 42, &CheckConfig::default());
        assert!(logic
            .iter()
            .all(|m| m.mutation.as_ref().unwrap().pattern == MutationPattern::LogicChange));
        assert_eq!(
            "logicchange".parse::<MutationPattern>(),
            Ok(MutationPattern::LogicChange)
        );
    }
}
