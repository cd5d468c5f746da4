//! `cdi`: scan a Python source tree, extract documented constraints, check
//! them against the code and report inconsistencies.
//!
//! Exit codes: 0 when no inconsistency is found, 1 when at least one is,
//! 2 on any tool error (bad configuration, unreadable input, failed
//! extraction requests).

pub mod clients;
pub mod config;
pub mod pipeline;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cdi_core::corpus::{read_records, write_manifest, write_records, MutationPattern, MUTATIONS_PER_RECORD};
use clap::{Parser, Subcommand};

use config::{Overrides, ReportFormat, ToolConfig};
use report::Report;

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_FOUND: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cdi",
    version,
    about = "Find contradictions between API documentation and Python code"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Use fuzzy matching of documented constraints.
    #[arg(long, global = true, overrides_with = "no_fuzzy")]
    pub fuzzy: bool,
    /// Crisp checking only.
    #[arg(long, global = true)]
    pub no_fuzzy: bool,
    /// Membership threshold.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Operator weight in expression similarity.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Most paths enumerated per function.
    #[arg(long, global = true)]
    pub max_paths: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<ReportFormat>,
    /// Replay file of recorded completions; selects the replay client.
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,
    /// Seed for mutation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for checking (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List documentation units that relate two or more parameters.
    Scan {
        tree: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Extract constraints from a tree into a corpus file.
    Extract {
        tree: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Append every model exchange to this replay file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Check a corpus and write a report.
    Check {
        corpus: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write mutants of a corpus and a manifest.
    Mutate {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to `<out>.manifest.jsonl`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Comma-separated pattern names; all patterns when omitted.
        #[arg(long, value_delimiter = ',')]
        patterns: Vec<MutationPattern>,
        #[arg(long, default_value_t = MUTATIONS_PER_RECORD)]
        per_record: usize,
    },
    /// Re-render a JSON report.
    Report {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            fuzzy: if self.no_fuzzy {
                Some(false)
            } else if self.fuzzy {
                Some(true)
            } else {
                None
            },
            tau: self.tau,
            beta: self.beta,
            max_paths: self.max_paths,
            format: self.format,
            replay: self.replay.clone(),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> anyhow::Result<String> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it)?);
        s.push('\n');
    }
    Ok(s)
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> anyhow::Result<u8> {
    let cfg = ToolConfig::load(cli.config.as_deref(), &cli.overrides())?;
    let check_cfg = cfg.check_config();
    match &cli.command {
        Command::Scan { tree, out } => {
            let scan = pipeline::run_scan(tree)?;
            log::info!("{} pairable units", scan.entries.len());
            emit(out.as_deref(), &jsonl(&scan.entries)?)?;
            Ok(EXIT_CLEAN)
        }
        Command::Extract { tree, out, record } => {
            let scan = pipeline::run_scan(tree)?;
            let mut client = clients::build_client(&cfg, record.as_deref())?;
            let ex = pipeline::run_extract(tree, &scan, client.as_mut(), cfg.checker.max_paths);
            emit(out.as_deref(), &jsonl(&ex.records)?)?;
            if ex.failures > 0 {
                bail!("{} extraction requests failed", ex.failures);
            }
            Ok(EXIT_CLEAN)
        }
        Command::Check { corpus, out } => {
            let records = read_records(corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let report = Report::new(pipeline::run_check(&records, &check_cfg, cli.jobs)?);
            emit(out.as_deref(), &report::render(&report, cfg.report.format))?;
            Ok(report.exit_code())
        }
        Command::Mutate {
            corpus,
            out,
            manifest,
            patterns,
            per_record,
        } => {
            let records = read_records(corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let patterns = if patterns.is_empty() {
                MutationPattern::ALL.to_vec()
            } else {
                patterns.clone()
            };
            let (mutants, entries) = pipeline::run_mutate(&records, &patterns, *per_record, cli.seed, &check_cfg);
            let manifest = manifest.clone().unwrap_or_else(|| {
                let mut name = out.as_os_str().to_owned();
                name.push(".manifest.jsonl");
                PathBuf::from(name)
            });
            write_records(&mutants, out).with_context(|| format!("writing {}", out.display()))?;
            write_manifest(&entries, &manifest).with_context(|| format!("writing {}", manifest.display()))?;
            Ok(EXIT_CLEAN)
        }
        Command::Report { input, out } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let report: Report = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
            emit(out.as_deref(), &report::render(&report, cfg.report.format))?;
            Ok(report.exit_code())
        }
    }
}
