//! Tool configuration: defaults, a TOML file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cdi_core::checker::CheckConfig;
use cdi_core::code_model::DEFAULT_MAX_PATHS;
use cdi_core::fcl::{FclConfig, DEFAULT_BETA, DEFAULT_TAU};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Markdown,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "markdown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    Live,
    #[default]
    Replay,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FclSection {
    pub beta: f64,
    pub tau: f64,
}

impl Default for FclSection {
    fn default() -> Self {
        FclSection {
            beta: DEFAULT_BETA,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckerSection {
    pub fuzzy_enabled: bool,
    pub relevance_filter: bool,
    pub max_paths: usize,
}

impl Default for CheckerSection {
    fn default() -> Self {
        CheckerSection {
            fuzzy_enabled: true,
            relevance_filter: true,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSection {
    pub client: ClientKind,
    /// Base URL of an OpenAI-compatible endpoint (live client).
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub replay_path: Option<PathBuf>,
    /// JSON list of `{"contains": .., "completion": ..}` (mock client).
    pub mock_path: Option<PathBuf>,
    pub timeout_secs: u64,
    pub min_interval_ms: u64,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        ExtractionSection {
            client: ClientKind::Replay,
            endpoint: None,
            model: None,
            replay_path: None,
            mock_path: None,
            timeout_secs: 120,
            min_interval_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub fcl: FclSection,
    pub checker: CheckerSection,
    pub extraction: ExtractionSection,
    pub report: ReportSection,
}

/// Values given on the command line; `None` leaves the file or default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fuzzy: Option<bool>,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub max_paths: Option<usize>,
    pub format: Option<ReportFormat>,
    pub replay: Option<PathBuf>,
}

impl ToolConfig {
    /// Parses a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn from_file(path: &Path) -> anyhow::Result<ToolConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ToolConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.extraction.replay_path, &mut cfg.extraction.mock_path]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Defaults, then the file if any, then the overrides; validated.
    pub fn load(file: Option<&Path>, o: &Overrides) -> anyhow::Result<ToolConfig> {
        let mut cfg = match file {
            Some(p) => ToolConfig::from_file(p)?,
            None => ToolConfig::default(),
        };
        cfg.apply(o);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(f) = o.fuzzy {
            self.checker.fuzzy_enabled = f;
        }
        if let Some(t) = o.tau {
            self.fcl.tau = t;
        }
        if let Some(b) = o.beta {
            self.fcl.beta = b;
        }
        if let Some(n) = o.max_paths {
            self.checker.max_paths = n;
        }
        if let Some(f) = o.format {
            self.report.format = f;
        }
        if let Some(r) = &o.replay {
            self.extraction.client = ClientKind::Replay;
            self.extraction.replay_path = Some(r.clone());
        }
    }

    /// Checks ranges and the settings each client kind needs. The client
    /// paths are only required when extraction runs, see
    /// [`ToolConfig::validate_extraction`].
    pub fn validate(&self) -> anyhow::Result<()> {
        FclConfig::new(self.fcl.beta, self.fcl.tau)?;
        if self.checker.max_paths == 0 {
            bail!("checker.max_paths must be at least 1");
        }
        Ok(())
    }

    pub fn validate_extraction(&self) -> anyhow::Result<()> {
        let x = &self.extraction;
        match x.client {
            ClientKind::Replay if x.replay_path.is_none() => {
                bail!("the replay client needs extraction.replay_path or --replay")
            }
            ClientKind::Mock if x.mock_path.is_none() => bail!("the mock client needs extraction.mock_path"),
            ClientKind::Live if x.endpoint.is_none() || x.model.is_none() => {
                bail!("the live client needs extraction.endpoint and extraction.model")
            }
            _ => Ok(()),
        }
    }

    pub fn fcl_config(&self) -> FclConfig {
        FclConfig {
            beta: self.fcl.beta,
            tau: self.fcl.tau,
        }
    }

    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            fcl: self.fcl_config(),
            fuzzy_enabled: self.checker.fuzzy_enabled,
            relevance_filter: self.checker.relevance_filter,
            max_paths: self.checker.max_paths,
        }
    }
}
