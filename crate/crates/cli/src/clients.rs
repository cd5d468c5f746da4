//! Construction of the language-model client named by the configuration.

use std::path::Path;

use anyhow::{bail, Context};
use cdi_core::extraction::{ClientError, LlmClient, MockClient, RecordingClient, ReplayClient};
use serde::Deserialize;

use crate::config::{ClientKind, ToolConfig};

/// One canned answer: returned for the first prompt containing `contains`.
#[derive(Debug, Clone, Deserialize)]
pub struct MockRule {
    pub contains: String,
    pub completion: String,
}

pub fn mock_from_file(path: &Path) -> anyhow::Result<MockClient> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rules: Vec<MockRule> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(MockClient::new(move |prompt| {
        rules
            .iter()
            .find(|r| prompt.contains(&r.contains))
            .map(|r| r.completion.clone())
            .ok_or_else(|| ClientError::Transport("no mock rule matches the prompt".into()))
    }))
}

#[cfg(feature = "live")]
fn live(cfg: &ToolConfig) -> anyhow::Result<Box<dyn LlmClient>> {
    use cdi_core::extraction::{HttpClient, HttpConfig, DEFAULT_MAX_TOKENS};
    use std::time::Duration;
    let x = &cfg.extraction;
    let http = HttpConfig {
        base_url: x.endpoint.clone().unwrap_or_default(),
        model: x.model.clone().unwrap_or_default(),
        timeout: Duration::from_secs(x.timeout_secs),
        min_interval: Duration::from_millis(x.min_interval_ms),
        max_tokens: DEFAULT_MAX_TOKENS,
    };
    Ok(Box::new(HttpClient::from_env(http)?))
}

#[cfg(not(feature = "live"))]
fn live(_cfg: &ToolConfig) -> anyhow::Result<Box<dyn LlmClient>> {
    bail!("this build has no live client; rebuild with `--features live`")
}

/// The configured client, wrapped to append every exchange to `record`
/// when given.
pub fn build_client(cfg: &ToolConfig, record: Option<&Path>) -> anyhow::Result<Box<dyn LlmClient>> {
    cfg.validate_extraction()?;
    let x = &cfg.extraction;
    let inner: Box<dyn LlmClient> = match x.client {
        ClientKind::Replay => {
            let p = x.replay_path.as_deref().expect("validated");
            Box::new(ReplayClient::open(p)?)
        }
        ClientKind::Mock => Box::new(mock_from_file(x.mock_path.as_deref().expect("validated"))?),
        ClientKind::Live => live(cfg)?,
    };
    Ok(match record {
        Some(p) => {
            if p.exists() {
                bail!("refusing to append to existing recording {}", p.display());
            }
            Box::new(RecordingClient::new(inner, p))
        }
        None => inner,
    })
}
