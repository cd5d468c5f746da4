//! Docstring extraction and NumPy/Google parameter-section parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::code_model::{outline_module, FunctionItem, Truthiness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Section {
    Parameters,
    Attributes,
    Args,
    /// Returns, Yields and Raises; parsed but never paired.
    Returns,
}

impl Section {
    fn from_header(h: &str) -> Option<Section> {
        match h.trim().to_ascii_lowercase().as_str() {
            "parameters" | "params" | "other parameters" | "keyword arguments" | "keyword args" => {
                Some(Section::Parameters)
            }
            "attributes" => Some(Section::Attributes),
            "args" | "arguments" | "kwargs" => Some(Section::Args),
            "returns" | "return" | "yields" | "yield" | "raises" | "warns" => Some(Section::Returns),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDoc {
    pub name: String,
    pub type_text: String,
    pub default_text: Option<String>,
    pub description: String,
    pub section: Section,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocStyle {
    NumPy,
    Google,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OwnerKind {
    Class,
    Function,
    Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: PathBuf,
    pub line_start: usize,
    pub line_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocUnit {
    pub owner_kind: OwnerKind,
    pub owner_name: String,
    pub style: DocStyle,
    pub params: Vec<ParamDoc>,
    pub source_span: SourceSpan,
}

impl DocUnit {
    pub fn param(&self, name: &str) -> Option<&ParamDoc> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Truthiness suggested by documented types: optional objects test
    /// against `None`, booleans against `False`.
    pub fn truthiness_hints(&self) -> BTreeMap<String, Truthiness> {
        let mut out = BTreeMap::new();
        for p in &self.params {
            let t = p.type_text.to_ascii_lowercase();
            if t.contains("bool") {
                out.insert(p.name.clone(), Truthiness::Bool);
            } else if t.contains("optional") || t.contains("none") {
                out.insert(p.name.clone(), Truthiness::NotNone);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub param_a: String,
    pub param_b: String,
    pub evidence: String,
}

/// A function or method found while scanning, with its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFunction {
    pub qualname: String,
    pub class: Option<String>,
    pub file: PathBuf,
    pub line_start: usize,
    pub line_end: usize,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub units: Vec<DocUnit>,
    pub functions: Vec<SourceFunction>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ScanResult {
    /// Functions a unit's constraints should be checked against: the function
    /// itself, or every method of a class.
    pub fn functions_for(&self, unit: &DocUnit) -> Vec<&SourceFunction> {
        self.functions
            .iter()
            .filter(|f| f.file == unit.source_span.file)
            .filter(|f| match unit.owner_kind {
                OwnerKind::Class => f.class.as_deref() == Some(unit.owner_name.as_str()),
                _ => f.qualname == unit.owner_name,
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum DocError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Removes the common indentation of all lines after the first, trims the
/// first line and drops blank lines at both ends.
pub fn clean_docstring(doc: &str) -> String {
    let doc = doc.replace('\t', "        ");
    let lines: Vec<&str> = doc.lines().collect();
    if lines.is_empty() {
        return String::new();
    }
    let indent = lines[1..]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut out: Vec<String> = vec![lines[0].trim().to_string()];
    for l in &lines[1..] {
        out.push(if l.len() >= indent {
            l[indent..].trim_end().to_string()
        } else {
            l.trim().to_string()
        });
    }
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    while out.first().is_some_and(|l| l.is_empty()) {
        out.remove(0);
    }
    out.join("\n")
}

fn indent_of(l: &str) -> usize {
    l.len() - l.trim_start().len()
}

fn is_dash_rule(l: &str) -> bool {
    let t = l.trim();
    !t.is_empty() && t.chars().all(|c| c == '-')
}

fn default_re() -> Regex {
    Regex::new(r"(?i)\bdefault(?:s)?(?:\s+is)?\s*[=:]?\s*(.+)$").unwrap()
}

/// Splits the type text of an entry into type and default.
fn split_default(type_text: &str) -> (String, Option<String>) {
    let re = default_re();
    let t = type_text.trim();
    match re.captures(t) {
        Some(caps) => {
            let d = caps[1].trim().trim_end_matches([')', '.']).trim().to_string();
            (t.to_string(), (!d.is_empty()).then_some(d))
        }
        None => (t.to_string(), None),
    }
}

fn entry_names(head: &str) -> Vec<String> {
    head.split(',')
        .map(|n| n.trim().trim_start_matches('*').to_string())
        .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_alphanumeric() || c == '_'))
        .collect()
}

fn numpy_sections(lines: &[&str]) -> Vec<ParamDoc> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < lines.len() {
        let header = lines[i].trim();
        let rule = lines[i + 1];
        if header.is_empty() || !is_dash_rule(rule) || rule.trim().len() != header.len() {
            i += 1;
            continue;
        }
        let section = Section::from_header(header);
        let base = indent_of(lines[i]);
        i += 2;
        let start = i;
        // the section ends at the next underlined header
        while i < lines.len() && !(i + 1 < lines.len() && is_dash_rule(lines[i + 1]) && !lines[i].trim().is_empty()) {
            i += 1;
        }
        if let Some(section) = section {
            numpy_entries(&lines[start..i], base, section, &mut out);
        }
    }
    out
}

fn numpy_entries(lines: &[&str], base: usize, section: Section, out: &mut Vec<ParamDoc>) {
    let mut cur: Option<(Vec<String>, String, Vec<String>)> = None;
    let flush = |cur: &mut Option<(Vec<String>, String, Vec<String>)>, out: &mut Vec<ParamDoc>| {
        if let Some((names, ty, desc)) = cur.take() {
            let (type_text, default_text) = split_default(&ty);
            let description = desc.join(" ").trim().to_string();
            for name in names {
                out.push(ParamDoc {
                    name,
                    type_text: type_text.clone(),
                    default_text: default_text.clone(),
                    description: description.clone(),
                    section,
                });
            }
        }
    };
    for l in lines {
        if l.trim().is_empty() {
            continue;
        }
        if indent_of(l) <= base {
            flush(&mut cur, out);
            let t = l.trim();
            let (head, ty) = match t.split_once(" : ").or_else(|| t.split_once(": ")) {
                Some((h, ty)) => (h, ty.to_string()),
                None => (t.trim_end_matches(':'), String::new()),
            };
            let names = entry_names(head);
            if names.is_empty() {
                log::debug!("skipping malformed entry {t:?}");
                continue;
            }
            cur = Some((names, ty, Vec::new()));
        } else if let Some((_, _, desc)) = cur.as_mut() {
            desc.push(l.trim().to_string());
        }
    }
    flush(&mut cur, out);
}

fn google_header(l: &str) -> Option<Section> {
    let t = l.trim();
    let h = t.strip_suffix(':')?;
    Section::from_header(h)
}

/// Parses `name (type): description` or `name: description`.
fn google_entry(t: &str) -> Option<(Vec<String>, String, String)> {
    let name_end = t
        .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '*'))
        .unwrap_or(t.len());
    let names = entry_names(&t[..name_end]);
    if names.is_empty() {
        return None;
    }
    let rest = t[name_end..].trim_start();
    let (ty, rest) = if let Some(r) = rest.strip_prefix('(') {
        let mut depth = 1;
        let mut close = None;
        for (i, c) in r.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let close = close?;
        (r[..close].to_string(), r[close + 1..].trim_start())
    } else {
        (String::new(), rest)
    };
    let desc = rest.strip_prefix(':')?;
    Some((names, ty, desc.trim().to_string()))
}

fn google_sections(lines: &[&str]) -> Vec<ParamDoc> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let Some(section) = google_header(lines[i]) else {
            i += 1;
            continue;
        };
        let base = indent_of(lines[i]);
        i += 1;
        let mut entry_indent = None;
        let mut cur: Option<(Vec<String>, String, Vec<String>)> = None;
        while i < lines.len() {
            let l = lines[i];
            if l.trim().is_empty() {
                i += 1;
                continue;
            }
            let ind = indent_of(l);
            if ind <= base {
                break;
            }
            let ei = *entry_indent.get_or_insert(ind);
            if ind <= ei {
                push_google(cur.take(), section, &mut out);
                match google_entry(l.trim()) {
                    Some((names, ty, d)) => cur = Some((names, ty, vec![d])),
                    None => log::debug!("skipping malformed entry {:?}", l.trim()),
                }
            } else if let Some((_, _, desc)) = cur.as_mut() {
                desc.push(l.trim().to_string());
            }
            i += 1;
        }
        push_google(cur.take(), section, &mut out);
    }
    out
}

fn push_google(cur: Option<(Vec<String>, String, Vec<String>)>, section: Section, out: &mut Vec<ParamDoc>) {
    if let Some((names, ty, desc)) = cur {
        let (type_text, default_text) = split_default(&ty);
        let description = desc.join(" ").trim().to_string();
        for name in names {
            out.push(ParamDoc {
                name,
                type_text: type_text.clone(),
                default_text: default_text.clone(),
                description: description.clone(),
                section,
            });
        }
    }
}

pub fn detect_style(doc: &str) -> DocStyle {
    let cleaned = clean_docstring(doc);
    let lines: Vec<&str> = cleaned.lines().collect();
    let numpy = lines
        .windows(2)
        .any(|w| !w[0].trim().is_empty() && is_dash_rule(w[1]) && w[1].trim().len() == w[0].trim().len());
    if numpy {
        return DocStyle::NumPy;
    }
    if lines.iter().any(|l| google_header(l).is_some()) && !google_sections(&lines).is_empty() {
        return DocStyle::Google;
    }
    DocStyle::Unknown
}

fn dedupe(params: Vec<ParamDoc>) -> Vec<ParamDoc> {
    let mut out: Vec<ParamDoc> = Vec::new();
    for p in params {
        match out.iter_mut().find(|q| q.name == p.name) {
            Some(q) => {
                if q.description.is_empty() {
                    q.description = p.description;
                }
                if q.type_text.is_empty() {
                    q.type_text = p.type_text;
                }
            }
            None => out.push(p),
        }
    }
    out
}

pub fn parse_param_sections(doc: &str) -> (DocStyle, Vec<ParamDoc>) {
    let style = detect_style(doc);
    let cleaned = clean_docstring(doc);
    let lines: Vec<&str> = cleaned.lines().collect();
    let params = match style {
        DocStyle::NumPy => numpy_sections(&lines),
        DocStyle::Google => google_sections(&lines),
        DocStyle::Unknown => Vec::new(),
    };
    (style, dedupe(params))
}

/// Removes reStructuredText roles and inline literal markers.
pub fn strip_markup(text: &str) -> String {
    let role = Regex::new(r":[a-z]+:`([^`]*)`").unwrap();
    role.replace_all(text, "$1").replace("``", "").replace('`', "")
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whether `word` occurs in `text` bounded by non-identifier characters.
pub fn contains_word(text: &str, word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    text.match_indices(word).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + word.len()..].chars().next();
        !before.is_some_and(is_ident_char) && !after.is_some_and(is_ident_char)
    })
}

/// Splits at `.`, `!` or `?` followed by whitespace.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        cur.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = cur.trim().to_string();
            if !s.is_empty() {
                out.push(s);
            }
            cur.clear();
        }
    }
    let s = cur.trim().to_string();
    if !s.is_empty() {
        out.push(s);
    }
    out
}

pub fn filter_candidates(unit: &DocUnit) -> Vec<CandidatePair> {
    let params: Vec<&ParamDoc> = unit.params.iter().filter(|p| p.section != Section::Returns).collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for a in &params {
        let sents = sentences(&a.description);
        for b in &params {
            if a.name == b.name || !seen.insert((a.name.clone(), b.name.clone())) {
                continue;
            }
            if let Some(s) = sents.iter().find(|s| contains_word(s, &b.name)) {
                out.push(CandidatePair {
                    param_a: a.name.clone(),
                    param_b: b.name.clone(),
                    evidence: s.clone(),
                });
            }
        }
    }
    out
}

fn unit_for(kind: OwnerKind, name: &str, doc: Option<&String>, file: &Path, lines: (usize, usize)) -> Option<DocUnit> {
    let doc = doc?;
    let (style, params) = parse_param_sections(doc);
    if params.is_empty() {
        return None;
    }
    Some(DocUnit {
        owner_kind: kind,
        owner_name: name.to_string(),
        style,
        params,
        source_span: SourceSpan {
            file: file.to_path_buf(),
            line_start: lines.0,
            line_end: lines.1,
        },
    })
}

fn source_fn(f: &FunctionItem, class: Option<&str>, file: &Path) -> SourceFunction {
    SourceFunction {
        qualname: f.qualname.clone(),
        class: class.map(str::to_string),
        file: file.to_path_buf(),
        line_start: f.line_start,
        line_end: f.line_end,
        source: f.source.clone(),
    }
}

/// Documentation units and functions of one module's source text. `file`
/// labels the results.
pub fn scan_source(src: &str, file: &Path, out: &mut ScanResult) {
    let outline = match outline_module(src) {
        Ok(o) => o,
        Err(e) => {
            out.diagnostics.push(Diagnostic {
                file: file.to_path_buf(),
                message: e.to_string(),
            });
            return;
        }
    };
    for c in &outline.classes {
        out.units.extend(unit_for(
            OwnerKind::Class,
            &c.name,
            c.docstring.as_ref(),
            file,
            (c.line_start, c.line_end),
        ));
        for m in &c.methods {
            out.units.extend(unit_for(
                OwnerKind::Method,
                &m.qualname,
                m.docstring.as_ref(),
                file,
                (m.line_start, m.line_end),
            ));
            out.functions.push(source_fn(m, Some(&c.name), file));
        }
    }
    for f in &outline.functions {
        out.units.extend(unit_for(
            OwnerKind::Function,
            &f.qualname,
            f.docstring.as_ref(),
            file,
            (f.line_start, f.line_end),
        ));
        out.functions.push(source_fn(f, None, file));
    }
}

/// Walks `root` for `.py` files in path order. Files that fail to tokenize
/// are skipped with a diagnostic.
pub fn scan_tree(root: &Path) -> Result<ScanResult, DocError> {
    let mut out = ScanResult::default();
    let meta = fs::metadata(root).map_err(|source| DocError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let files: Vec<PathBuf> = if meta.is_file() {
        vec![root.to_path_buf()]
    } else {
        let mut v = Vec::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| DocError::Io {
                path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
                source: e.into_io_error().unwrap_or_else(|| io::Error::other("walk error")),
            })?;
            if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "py") {
                v.push(entry.into_path());
            }
        }
        v
    };
    for path in files {
        let src = fs::read_to_string(&path).map_err(|source| DocError::Io {
            path: path.clone(),
            source,
        })?;
        let rel = path
            .strip_prefix(root)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| path.clone());
        let rel = if rel.as_os_str().is_empty() { path.clone() } else { rel };
        scan_source(&src, &rel, &mut out);
    }
    Ok(out)
}

pub fn extract_docstrings(root: &Path) -> Result<Vec<DocUnit>, DocError> {
    Ok(scan_tree(root)?.units)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NUMPY_CLASS: &str = r#"
class ExampleNumpyStyle(Exception):
    """Exceptions are documented in the same way as classes.

    Parameters
    ----------
    msg : str
        Human readable string describing the exception.
    code : :obj:`int`, optional
        Numeric error code.

    Attributes
    ----------
    msg : str
        Human readable string describing the exception.
    code : int
        Numeric error code.
    """

    def __init__(self, msg, code):
        self.msg = msg
        self.code = code
"#;

    const GOOGLE_CLASS: &str = r#"
class ExampleGoogleStyle(Exception):
    """Exceptions are documented in the same way as classes.

    Args:
        msg (str): Human readable string describing the exception.
        code (:obj:`int`, optional): Error code.

    Attributes:
        msg (str): Human readable string describing the exception.
        code (int): Exception error code.
    """

    def __init__(self, msg, code):
        self.msg = msg
        self.code = code
"#;

    #[test]
    fn numpy_class_unit() {
        let mut out = ScanResult::default();
        scan_source(NUMPY_CLASS, Path::new("ex.py"), &mut out);
        assert_eq!(out.units.len(), 1);
        let u = &out.units[0];
        assert_eq!(u.style, DocStyle::NumPy);
        assert_eq!(u.owner_kind, OwnerKind::Class);
        let names: Vec<_> = u.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["msg", "code"]);
        assert_eq!(u.params[0].type_text, "str");
        assert_eq!(
            u.params[0].description,
            "Human readable string describing the exception."
        );
        assert_eq!(out.functions.len(), 1);
        assert_eq!(out.functions[0].qualname, "ExampleNumpyStyle.__init__");
        assert_eq!(out.functions_for(u).len(), 1);
    }

    #[test]
    fn google_entries() {
        let (style, params) = parse_param_sections(GOOGLE_CLASS.split("\"\"\"").nth(1).unwrap());
        assert_eq!(style, DocStyle::Google);
        assert_eq!(params.len(), 2);
        assert_eq!(params[1].name, "code");
        assert_eq!(params[1].type_text, ":obj:`int`, optional");
        assert_eq!(params[1].default_text, None);
        assert_eq!(params[1].description, "Error code.");
        assert_eq!(params[1].section, Section::Args);
    }

    #[test]
    fn empty_docstring_is_unknown() {
        assert_eq!(parse_param_sections(""), (DocStyle::Unknown, vec![]));
        assert_eq!(parse_param_sections("Just prose.").0, DocStyle::Unknown);
    }

    #[test]
    fn defaults_and_multiline_descriptions() {
        let doc = "Summary.\n\nParameters\n----------\nn_neighbors : int, default=10\n    Number of neighbors.\n    Ignored for affinity='rbf'.\nx1, x2 : float\n    Points.\n\nReturns\n-------\nself : object\n    Fitted.\n";
        let (style, params) = parse_param_sections(doc);
        assert_eq!(style, DocStyle::NumPy);
        assert_eq!(params.len(), 4);
        assert_eq!(params[0].default_text.as_deref(), Some("10"));
        assert_eq!(
            params[0].description,
            "Number of neighbors. Ignored for affinity='rbf'."
        );
        assert_eq!(params[2].name, "x2");
        assert_eq!(params[3].section, Section::Returns);
    }

    fn unit(params: &[(&str, &str)]) -> DocUnit {
        DocUnit {
            owner_kind: OwnerKind::Class,
            owner_name: "C".into(),
            style: DocStyle::NumPy,
            params: params
                .iter()
                .map(|(n, d)| ParamDoc {
                    name: n.to_string(),
                    type_text: String::new(),
                    default_text: None,
                    description: d.to_string(),
                    section: Section::Parameters,
                })
                .collect(),
            source_span: SourceSpan {
                file: "c.py".into(),
                line_start: 1,
                line_end: 1,
            },
        }
    }

    #[test]
    fn candidate_pairs() {
        let u = unit(&[
            (
                "gamma",
                "Kernel coefficient. Ignored for affinity=\"nearest_neighbors\".",
            ),
            ("affinity", "How to construct the affinity matrix."),
        ]);
        let pairs = filter_candidates(&u);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].param_a, "gamma");
        assert_eq!(pairs[0].param_b, "affinity");
        assert_eq!(pairs[0].evidence, "Ignored for affinity=\"nearest_neighbors\".");

        let u = unit(&[
            ("deterministic", "If not None, trend and seasonal are ignored."),
            ("trend", ""),
            ("seasonal", ""),
        ]);
        assert_eq!(filter_candidates(&u).len(), 2);
        assert!(filter_candidates(&unit(&[("a", "First."), ("b", "Second.")])).is_empty());
    }

    #[test]
    fn whole_word_matching() {
        assert!(!contains_word("Use none of them", "n"));
        assert!(contains_word("When `n` is set", "n"));
        assert!(!contains_word("n_jobs is used", "n"));
        assert!(contains_word("see n_jobs.", "n_jobs"));
    }

    #[test]
    fn truthiness_from_types() {
        let mut u = unit(&[("sample_weight", ""), ("flag", "")]);
        u.params[0].type_text = "array-like, default=None".into();
        u.params[1].type_text = "bool".into();
        let h = u.truthiness_hints();
        assert_eq!(h["sample_weight"], Truthiness::NotNone);
        assert_eq!(h["flag"], Truthiness::Bool);
    }

    #[test]
    fn tree_scan_skips_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.py"), NUMPY_CLASS).unwrap();
        fs::write(dir.path().join("b.py"), "x = \"unterminated\n").unwrap();
        fs::write(dir.path().join("c.py"), "def f(x):\n    return x\n").unwrap();
        let r = scan_tree(dir.path()).unwrap();
        assert_eq!(r.units.len(), 1);
        assert_eq!(r.diagnostics.len(), 1);
        assert_eq!(r.units[0].source_span.file, PathBuf::from("a.py"));
        assert!(extract_docstrings(&dir.path().join("missing")).is_err());
    }
}
