//! Report rendering. JSON output has sorted keys at every level; markdown
//! groups findings by file and kind.

use std::collections::BTreeMap;
use std::fmt::Write;

use cdi_core::checker::{Evidence, Kind, Status};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::ReportFormat;
use crate::pipeline::Finding;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub consistent: usize,
    pub inconsistent: usize,
    pub unresolved: usize,
}

impl Counts {
    pub fn of(findings: &[Finding]) -> Counts {
        let n = |s| findings.iter().filter(|f| f.status == s).count();
        Counts {
            total: findings.len(),
            consistent: n(Status::Consistent),
            inconsistent: n(Status::Inconsistent),
            unresolved: n(Status::Unresolved),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Counts,
    pub findings: Vec<Finding>,
}

impl Report {
    pub fn new(findings: Vec<Finding>) -> Report {
        Report {
            summary: Counts::of(&findings),
            findings,
        }
    }

    /// Exit status: 1 when any finding is inconsistent. Unresolved
    /// findings do not count.
    pub fn exit_code(&self) -> u8 {
        u8::from(self.summary.inconsistent > 0)
    }
}

fn sorted(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let ordered: BTreeMap<String, Value> = m.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(ordered.into_iter().collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn render_json(report: &Report) -> String {
    let v = sorted(serde_json::to_value(report).expect("report serializes"));
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn evidence_line(e: &Evidence) -> String {
    match e {
        Evidence::Path { index, path } => format!("path {index} disagrees: `{path}`"),
        Evidence::Score(s) => format!(
            "path {}: similarity {:.3}, {} the path, score {:.3}",
            s.path,
            s.rho,
            if s.holds { "agrees with" } else { "contradicts" },
            s.score
        ),
        Evidence::Uncovered { condition } => format!("branch not covered by the documentation: `{condition}`"),
        Evidence::Usage { param, condition, used } => {
            format!(
                "`{param}` is {} when `{condition}`",
                if *used { "used" } else { "never used" }
            )
        }
        Evidence::Note { message } => format!("note: {message}"),
    }
}

fn group_title(f: &Finding) -> &'static str {
    match (f.status, f.kind) {
        (Status::Unresolved, _) => "Unresolved",
        (_, Some(Kind::Incompleteness)) => "Incompleteness",
        _ => "Incorrectness",
    }
}

fn quote(text: &str) -> String {
    text.lines().map(|l| format!("> {l}\n")).collect()
}

pub fn render_markdown(report: &Report) -> String {
    let c = &report.summary;
    let mut s = String::from("# Inconsistency report\n\n");
    let _ = writeln!(
        s,
        "{} verdicts: {} inconsistent, {} consistent, {} unresolved.\n",
        c.total, c.inconsistent, c.consistent, c.unresolved
    );
    let listed: Vec<&Finding> = report
        .findings
        .iter()
        .filter(|f| f.status != Status::Consistent)
        .collect();
    if listed.is_empty() {
        s.push_str("## No findings\n\nNo documentation constraint contradicts the code.\n");
        return s;
    }
    let mut by_file: BTreeMap<&str, BTreeMap<(u8, &str), Vec<&Finding>>> = BTreeMap::new();
    for f in listed {
        let title = group_title(f);
        let rank = match title {
            "Incorrectness" => 0,
            "Incompleteness" => 1,
            _ => 2,
        };
        by_file
            .entry(&f.file)
            .or_default()
            .entry((rank, title))
            .or_default()
            .push(f);
    }
    for (file, groups) in by_file {
        let _ = writeln!(s, "## `{file}`\n");
        for ((_, title), items) in groups {
            let _ = writeln!(s, "### {title}\n");
            for f in items {
                let _ = writeln!(s, "#### `{}`\n", f.owner);
                s.push_str("Documentation:\n\n");
                s.push_str(&quote(&f.doc_sentence));
                let _ = writeln!(s, "\nConstraint: `{}`\n", f.constraint);
                if let Some(mu) = f.membership {
                    let _ = writeln!(s, "Membership: {mu:.3}\n");
                }
                if !f.evidence.is_empty() {
                    s.push_str("Evidence:\n\n");
                    for e in &f.evidence {
                        let _ = writeln!(s, "- {}", evidence_line(e));
                    }
                    s.push('\n');
                }
            }
        }
    }
    s
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => render_json(report),
        ReportFormat::Markdown => render_markdown(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finding(status: Status, kind: Option<Kind>, evidence: Vec<Evidence>) -> Finding {
        Finding {
            record_id: "id".into(),
            file: "sklearn/cluster/_spectral.py".into(),
            owner: "SpectralClustering.fit".into(),
            doc_sentence: "Ignored for affinity='nearest_neighbors'.".into(),
            constraint: "((affinity = \"nearest_neighbors\") -> ignore(gamma))".into(),
            status,
            kind,
            membership: Some(0.0),
            evidence,
        }
    }

    #[test]
    fn empty_report_has_no_findings_stanza() {
        let md = render_markdown(&Report::new(vec![]));
        assert!(md.contains("No findings"));
        assert_eq!(Report::new(vec![]).exit_code(), 0);
    }

    #[test]
    fn incompleteness_names_the_uncovered_branches() {
        let ev = vec![
            Evidence::Uncovered {
                condition: "(affinity = \"precomputed_nearest_neighbors\")".into(),
            },
            Evidence::Uncovered {
                condition: "(affinity = \"precomputed\")".into(),
            },
        ];
        let r = Report::new(vec![finding(Status::Inconsistent, Some(Kind::Incompleteness), ev)]);
        let md = render_markdown(&r);
        assert!(md.contains("### Incompleteness"));
        assert!(md.contains("gamma") && md.contains("affinity"));
        assert!(md.contains("precomputed_nearest_neighbors") && md.contains("(affinity = \"precomputed\")"));
        assert!(md.contains("> Ignored for"));
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn json_keys_are_sorted_and_fields_present() {
        let r = Report::new(vec![
            finding(Status::Consistent, None, vec![]),
            finding(Status::Unresolved, None, vec![]),
        ]);
        assert_eq!(r.exit_code(), 0);
        let text = render_json(&r);
        let v: Value = serde_json::from_str(&text).unwrap();
        let arr = v["findings"].as_array().unwrap();
        assert_eq!(arr.len(), 2);
        for f in arr {
            assert!(f.get("status").is_some() && f.get("kind").is_some() && f.get("membership").is_some());
        }
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("    \"") && l.contains("\":"))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut want = keys.clone();
        want.sort();
        assert_eq!(&keys[..], &want[..]);
    }
}
