//! Constraint extraction from documentation through a chat-completion client.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraint::{parse_constraint, Constraint, FUZZY_WORDS};
use crate::docstrings::{DocUnit, Section};

pub const MAX_CHUNK_WORDS: usize = 1500;
/// Words per token used for prompt-size estimates.
pub const WORDS_PER_TOKEN: f64 = 0.75;
pub const DEFAULT_MAX_TOKENS: usize = 8192;

/// Marks the start of the final answer in a completion.
pub const ANSWER_MARKER: &str = "CONSTRAINTS:";
pub const FIELD_SEPARATOR: &str = " ## ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub sentence: String,
    pub constraint: String,
}

/// Four reconstructed examples: a conjunction, an implication, an `ignore`
/// predicate and a `specified` predicate.
pub fn default_few_shots() -> Vec<FewShot> {
    let pairs = [
        (
            "solver (str): Must be \"lbfgs\", and tol must be positive.",
            "(solver = \"lbfgs\") ^ (tol > 0)",
        ),
        (
            "Gram (array, optional): When X is None, Gram has to be None as well.",
            "(X = None) -> (Gram = None)",
        ),
        (
            "gamma (float): Kernel coefficient. Ignored for affinity=\"nearest_neighbors\".",
            "(affinity = \"nearest_neighbors\") -> (ignore(gamma))",
        ),
        (
            "n_components (int): Needs to be specified if init is \"custom\".",
            "(init = \"custom\") -> (specified(n_components))",
        ),
    ];
    pairs
        .iter()
        .map(|(s, c)| FewShot {
            sentence: s.to_string(),
            constraint: c.to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRequest {
    pub doc_chunks: Vec<String>,
    pub param_names: Vec<String>,
    pub few_shots: Vec<FewShot>,
}

impl ExtractionRequest {
    pub fn new(doc: &str, param_names: Vec<String>) -> ExtractionRequest {
        ExtractionRequest {
            doc_chunks: chunk_document(doc),
            param_names,
            few_shots: default_few_shots(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extracted {
    pub constraint: Constraint,
    pub source_sentence: String,
    pub confidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkFailure {
    pub chunk: usize,
    pub error: ClientError,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub constraints: Vec<Extracted>,
    pub rejects: Vec<Reject>,
    /// Chunks whose request failed; results from other chunks are kept.
    pub failures: Vec<ChunkFailure>,
}

impl ExtractionResult {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(&mut self, other: ExtractionResult) {
        for e in other.constraints {
            if !self.constraints.iter().any(|x| x.constraint == e.constraint) {
                self.constraints.push(e);
            }
        }
        self.rejects.extend(other.rejects);
        self.failures.extend(other.failures);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ClientError {
    #[error("HTTP {status}{}", retry_after.map(|s| format!(" (retry after {s}s)")).unwrap_or_default())]
    Http { status: u16, retry_after: Option<u64> },
    #[error("request timed out")]
    Timeout,
    #[error("no recorded completion for prompt {hash}")]
    MissingReplay { hash: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("io: {0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
}

impl From<io::Error> for ClientError {
    fn from(e: io::Error) -> Self {
        ClientError::Io(e.to_string())
    }
}

pub trait LlmClient {
    fn send(&mut self, prompt: &str) -> Result<String, ClientError>;

    /// Largest prompt the client accepts, in estimated tokens.
    fn max_tokens(&self) -> usize {
        DEFAULT_MAX_TOKENS
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn send(&mut self, prompt: &str) -> Result<String, ClientError> {
        (**self).send(prompt)
    }

    fn max_tokens(&self) -> usize {
        (**self).max_tokens()
    }
}

type Responder = Box<dyn FnMut(&str) -> Result<String, ClientError> + Send>;

/// Answers from a closure.
pub struct MockClient {
    respond: Responder,
    pub max_tokens: usize,
    pub calls: usize,
}

impl MockClient {
    pub fn new(respond: impl FnMut(&str) -> Result<String, ClientError> + Send + 'static) -> MockClient {
        MockClient {
            respond: Box::new(respond),
            max_tokens: DEFAULT_MAX_TOKENS,
            calls: 0,
        }
    }

    /// Returns `text` for every prompt.
    pub fn fixed(text: impl Into<String>) -> MockClient {
        let text = text.into();
        MockClient::new(move |_| Ok(text.clone()))
    }
}

impl LlmClient for MockClient {
    fn send(&mut self, prompt: &str) -> Result<String, ClientError> {
        self.calls += 1;
        (self.respond)(prompt)
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    format!("{:x}", Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub prompt_hash: String,
    pub prompt: String,
    pub completion: String,
}

/// Serves completions recorded in a JSONL file, keyed by prompt hash.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    records: BTreeMap<String, String>,
}

impl ReplayClient {
    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>) -> ReplayClient {
        ReplayClient {
            records: records.into_iter().map(|r| (r.prompt_hash, r.completion)).collect(),
        }
    }

    pub fn open(path: &Path) -> Result<ReplayClient, ClientError> {
        let f = File::open(path).map_err(|e| ClientError::Io(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ReplayRecord = serde_json::from_str(&line)
                .map_err(|e| ClientError::Io(format!("{}:{}: {e}", path.display(), n + 1)))?;
            records.push(r);
        }
        Ok(ReplayClient::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl LlmClient for ReplayClient {
    fn send(&mut self, prompt: &str) -> Result<String, ClientError> {
        let hash = prompt_hash(prompt);
        self.records
            .get(&hash)
            .cloned()
            .ok_or(ClientError::MissingReplay { hash })
    }
}

/// Appends every successful exchange of the inner client to a JSONL file.
pub struct RecordingClient<C> {
    inner: C,
    path: PathBuf,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C, path: impl Into<PathBuf>) -> RecordingClient<C> {
        RecordingClient {
            inner,
            path: path.into(),
        }
    }

    pub fn into_inner(self) -> C {
        self.inner
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn send(&mut self, prompt: &str) -> Result<String, ClientError> {
        let completion = self.inner.send(prompt)?;
        let rec = ReplayRecord {
            prompt_hash: prompt_hash(prompt),
            prompt: prompt.to_string(),
            completion: completion.clone(),
        };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let line = serde_json::to_string(&rec).map_err(|e| ClientError::Io(e.to_string()))?;
        writeln!(f, "{line}")?;
        Ok(completion)
    }

    fn max_tokens(&self) -> usize {
        self.inner.max_tokens()
    }
}

#[cfg(feature = "live")]
pub use live::{HttpClient, HttpConfig};

#[cfg(feature = "live")]
mod live {
    use std::time::{Duration, Instant};

    use serde_json::json;

    use super::{ClientError, LlmClient, DEFAULT_MAX_TOKENS};

    pub const API_KEY_VAR: &str = "CDI_LLM_API_KEY";

    #[derive(Debug, Clone)]
    pub struct HttpConfig {
        /// Base URL of an OpenAI-compatible API, e.g. `https://host/v1`.
        pub base_url: String,
        pub model: String,
        pub timeout: Duration,
        /// Minimum spacing between requests.
        pub min_interval: Duration,
        pub max_tokens: usize,
    }

    pub struct HttpClient {
        cfg: HttpConfig,
        key: String,
        agent: ureq::Agent,
        last: Option<Instant>,
    }

    impl HttpClient {
        pub fn from_env(cfg: HttpConfig) -> Result<HttpClient, ClientError> {
            let key =
                std::env::var(API_KEY_VAR).map_err(|_| ClientError::Config(format!("{API_KEY_VAR} is not set")))?;
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(cfg.timeout))
                .http_status_as_error(false)
                .build()
                .into();
            Ok(HttpClient {
                cfg,
                key,
                agent,
                last: None,
            })
        }
    }

    impl LlmClient for HttpClient {
        fn send(&mut self, prompt: &str) -> Result<String, ClientError> {
            if let Some(last) = self.last {
                let wait = self.cfg.min_interval.saturating_sub(last.elapsed());
                std::thread::sleep(wait);
            }
            self.last = Some(Instant::now());
            let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
            let body = json!({
                "model": self.cfg.model,
                "temperature": 0,
                "messages": [{"role": "user", "content": prompt}],
            });
            let mut resp = self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {}", self.key))
                .send_json(&body)
                .map_err(|e| match e {
                    ureq::Error::Timeout(_) => ClientError::Timeout,
                    other => ClientError::Transport(other.to_string()),
                })?;
            let status = resp.status().as_u16();
            if status != 200 {
                let retry_after = resp
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|s| s.trim().parse().ok());
                return Err(ClientError::Http { status, retry_after });
            }
            let v: serde_json::Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| ClientError::Transport(e.to_string()))?;
            v["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| ClientError::Transport("response has no message content".into()))
        }

        fn max_tokens(&self) -> usize {
            if self.cfg.max_tokens == 0 {
                DEFAULT_MAX_TOKENS
            } else {
                self.cfg.max_tokens
            }
        }
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn estimate_tokens(text: &str) -> usize {
    (word_count(text) as f64 / WORDS_PER_TOKEN).ceil() as usize
}

/// Greedy packing of paragraphs into chunks of at most `limit` words.
/// Paragraphs longer than the limit are cut at word boundaries.
pub fn chunk_words(doc: &str, limit: usize) -> Vec<String> {
    let limit = limit.max(1);
    let mut pieces: Vec<String> = Vec::new();
    for para in doc.split("\n\n").map(str::trim).filter(|p| !p.is_empty()) {
        let words: Vec<&str> = para.split_whitespace().collect();
        if words.len() <= limit {
            pieces.push(para.to_string());
        } else {
            pieces.extend(words.chunks(limit).map(|w| w.join(" ")));
        }
    }
    let mut chunks: Vec<String> = Vec::new();
    let mut cur = String::new();
    let mut cur_words = 0;
    for p in pieces {
        let n = word_count(&p);
        if cur_words > 0 && cur_words + n > limit {
            chunks.push(std::mem::take(&mut cur));
            cur_words = 0;
        }
        if !cur.is_empty() {
            cur.push_str("\n\n");
        }
        cur.push_str(&p);
        cur_words += n;
    }
    if !cur.is_empty() {
        chunks.push(cur);
    }
    chunks
}

pub fn chunk_document(doc: &str) -> Vec<String> {
    chunk_words(doc, MAX_CHUNK_WORDS)
}

/// Documentation text of a unit as seen by the model: one paragraph per
/// documented parameter or attribute.
pub fn render_unit(unit: &DocUnit) -> String {
    unit.params
        .iter()
        .filter(|p| p.section != Section::Returns)
        .map(|p| {
            if p.type_text.is_empty() {
                format!("{}: {}", p.name, p.description)
            } else {
                format!("{} ({}): {}", p.name, p.type_text, p.description)
            }
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn prompt_sections(req: &ExtractionRequest) -> String {
    let mut s = String::new();
    s.push_str("You translate API documentation into logical constraints over parameter values.\n\n");
    s.push_str("### Logical symbols\n");
    s.push_str("->  implication (if the left side holds, the right side must hold)\n");
    s.push_str("!   negation (NOT)\n");
    s.push_str("^   conjunction (logical AND)\n");
    s.push_str("v   disjunction (logical OR)\n");
    s.push_str("( ) grouping\n");
    s.push_str("An atom compares one parameter with one literal: param op value, where op is one of = != < > <= >= ");
    s.push_str("and value is a number, a quoted string, True, False or None.\n\n");
    s.push_str("### Usage words\n");
    s.push_str("Keep the following words as predicates instead of translating them away: ");
    let words: Vec<String> = FUZZY_WORDS.iter().map(|(w, _)| format!("\"{w}\"")).collect();
    s.push_str(&words.join(", "));
    s.push_str(".\nWrite them as ignore(param) when the parameter has no effect and specified(param) when it must be given or has an effect.\n\n");
    s.push_str("### Examples\n");
    for (i, f) in req.few_shots.iter().enumerate() {
        s.push_str(&format!(
            "Example {}\nText: {}\nConstraint: {}\n\n",
            i + 1,
            f.sentence,
            f.constraint
        ));
    }
    s.push_str("### Output\n");
    s.push_str("First reason step by step about which sentences relate two or more parameters. ");
    s.push_str(&format!(
        "Then write a line containing only {ANSWER_MARKER} followed by one constraint per line as\n"
    ));
    s.push_str(&format!(
        "constraint{FIELD_SEPARATOR}source sentence{FIELD_SEPARATOR}confidence (high, medium or low)\n"
    ));
    s.push_str("Use only the listed parameters. Write nothing after the constraints.\n\n");
    s.push_str("### Parameters\n");
    s.push_str(&req.param_names.join(", "));
    s.push_str("\n\n### Documentation\n");
    s
}

/// Prompt for one chunk. Identical requests give byte-identical prompts.
pub fn build_extraction_prompt(req: &ExtractionRequest, chunk_index: usize) -> String {
    let mut s = prompt_sections(req);
    s.push_str(&req.doc_chunks[chunk_index]);
    s.push('\n');
    s
}

fn strip_list_marker(line: &str) -> &str {
    let t = line.trim();
    if let Some(r) = t.strip_prefix("- ").or_else(|| t.strip_prefix("* ")) {
        return r.trim();
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        if let Some(r) = t[digits..]
            .strip_prefix(". ")
            .or_else(|| t[digits..].strip_prefix(") "))
        {
            return r.trim();
        }
    }
    t
}

/// Parses a completion. When the answer marker is present only the lines
/// after it count; fenced-code markers are skipped.
pub fn parse_llm_output(completion: &str) -> ExtractionResult {
    let lines: Vec<&str> = completion.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.trim().eq_ignore_ascii_case(ANSWER_MARKER))
        .map(|i| i + 1)
        .unwrap_or(0);
    let mut out = ExtractionResult::default();
    for raw in &lines[start..] {
        let line = strip_list_marker(raw);
        if line.is_empty() || line.starts_with("```") {
            continue;
        }
        let mut fields = line.split(FIELD_SEPARATOR.trim()).map(str::trim);
        let text = fields.next().unwrap_or_default();
        let text = text.strip_prefix("Constraint:").map(str::trim).unwrap_or(text);
        match parse_constraint(text) {
            Ok(c) => {
                if !out.constraints.iter().any(|e| e.constraint == c) {
                    out.constraints.push(Extracted {
                        constraint: c,
                        source_sentence: fields.next().unwrap_or_default().to_string(),
                        confidence: fields.next().unwrap_or_default().to_string(),
                    });
                }
            }
            Err(e) => out.rejects.push(Reject {
                line: raw.to_string(),
                error: e.to_string(),
            }),
        }
    }
    out
}

/// Moves constraints naming parameters outside `known` (and not synthetic
/// `call_*` symbols) to the rejects.
pub fn reject_unknown(result: &mut ExtractionResult, known: &[String]) {
    let mut kept = Vec::new();
    for e in std::mem::take(&mut result.constraints) {
        let unknown: Vec<String> = e
            .constraint
            .params()
            .into_iter()
            .filter(|p| !known.contains(p) && !p.starts_with("call_"))
            .collect();
        if unknown.is_empty() {
            kept.push(e);
        } else {
            result.rejects.push(Reject {
                line: e.constraint.to_string(),
                error: format!("UnknownParameter: {}", unknown.join(", ")),
            });
        }
    }
    result.constraints = kept;
}

/// Splits chunks until each prompt fits the client's token budget.
fn fit_chunks(req: &ExtractionRequest, max_tokens: usize) -> Vec<String> {
    let overhead = estimate_tokens(&prompt_sections(req));
    let mut out = Vec::new();
    let mut todo: Vec<String> = req.doc_chunks.iter().rev().cloned().collect();
    while let Some(c) = todo.pop() {
        let words = word_count(&c);
        if overhead + estimate_tokens(&c) <= max_tokens || words <= 1 {
            out.push(c);
        } else {
            let mut halves = chunk_words(&c, words.div_ceil(2));
            halves.reverse();
            todo.extend(halves);
        }
    }
    out
}

pub fn extract_with_request(req: &ExtractionRequest, client: &mut dyn LlmClient) -> ExtractionResult {
    let mut req = req.clone();
    req.doc_chunks = fit_chunks(&req, client.max_tokens());
    let mut result = ExtractionResult::default();
    for i in 0..req.doc_chunks.len() {
        let prompt = build_extraction_prompt(&req, i);
        match client.send(&prompt) {
            Ok(text) => result.merge(parse_llm_output(&text)),
            Err(error) => result.failures.push(ChunkFailure { chunk: i, error }),
        }
    }
    reject_unknown(&mut result, &req.param_names);
    result
}

pub fn extract_constraints(unit: &DocUnit, client: &mut dyn LlmClient) -> ExtractionResult {
    let names = unit
        .params
        .iter()
        .filter(|p| p.section != Section::Returns)
        .map(|p| p.name.clone())
        .collect();
    let req = ExtractionRequest::new(&render_unit(unit), names);
    extract_with_request(&req, client)
}
