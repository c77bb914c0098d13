//! Chat backends: mock, scripted, HTTP chat-completions and local process.

use std::collections::VecDeque;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CampaignTask, HarnessError, MockSettings, ProviderKind, ProviderProfile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// The JSON body of one chat-completions request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Local bookkeeping for a request; never sent to a remote provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequestContext {
    pub sample_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("rate limited: {body}")]
    RateLimited { body: String },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed reply: {0}")]
    Malformed(String),
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::RateLimited { .. } | TransportError::Transport(_) => true,
            TransportError::Status { status, .. } => *status >= 500,
            TransportError::Malformed(_) => false,
        }
    }
}

pub trait ChatTransport: Send + Sync {
    fn send(&self, request: &ChatRequest, ctx: &RequestContext) -> Result<String, TransportError>;
}

const FALLBACK_VOCABULARY: &[&str] = &[
    "anchor", "apple", "arrow", "badge", "banjo", "basket", "beacon", "blanket", "bottle", "bridge", "candle",
    "canyon", "carpet", "castle", "cloud", "comet", "compass", "copper", "cotton", "desert", "diamond", "engine",
    "feather", "forest", "fossil", "garden", "glacier", "hammer", "harbor", "helmet", "honey", "island", "jacket",
    "kettle", "ladder", "lantern", "lemon", "magnet", "marble", "meadow", "mirror", "needle", "ocean", "orchard",
    "paper", "pepper", "pillow", "planet", "pocket", "puzzle", "river", "saddle", "shadow", "silver", "spider",
    "thunder", "tunnel", "velvet", "violin", "window",
];

/// Deterministic offline provider driven by [`MockSettings`].
pub struct MockTransport {
    settings: MockSettings,
    task: CampaignTask,
    vocabulary: Vec<String>,
}

impl MockTransport {
    pub fn new(settings: MockSettings, task: CampaignTask) -> Self {
        let vocabulary = if settings.vocabulary.len() >= 10 {
            settings.vocabulary.clone()
        } else {
            FALLBACK_VOCABULARY.iter().map(|s| s.to_string()).collect()
        };
        Self {
            settings,
            task,
            vocabulary,
        }
    }

    fn failing(&self, ctx: &RequestContext) -> bool {
        self.settings
            .fail_every
            .is_some_and(|n| n > 0 && (ctx.sample_index + 1).is_multiple_of(n))
    }

    /// Higher temperature draws from a wider slice of the vocabulary.
    fn pool(&self, temperature: f64) -> &[String] {
        let frac = (temperature / 2.0).clamp(0.0, 1.0);
        let n = ((self.vocabulary.len() as f64 * frac).round() as usize).clamp(10, self.vocabulary.len());
        &self.vocabulary[..n]
    }
}

impl ChatTransport for MockTransport {
    fn send(&self, request: &ChatRequest, ctx: &RequestContext) -> Result<String, TransportError> {
        if self.failing(ctx) {
            return Ok(if self.task.is_dat_family() {
                "I'm sorry, but I can't help with that request.".to_string()
            } else {
                String::new()
            });
        }
        if let Some(reply) = &self.settings.reply {
            return Ok(reply.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let pool = self.pool(request.temperature);
        if self.task.is_dat_family() {
            let picks = sample(&mut rng, pool.len(), 10);
            return Ok(picks
                .iter()
                .enumerate()
                .map(|(i, p)| format!("{}. {}\n", i + 1, pool[p]))
                .collect());
        }
        let n_words = match self.task {
            CampaignTask::Haiku => 9,
            CampaignTask::Synopsis => 40,
            _ => 150,
        };
        let words: Vec<&str> = (0..n_words).map(|_| pool[rng.gen_range(0..pool.len())].as_str()).collect();
        let sentences: Vec<String> = words
            .chunks(8)
            .map(|c| {
                let s = c.join(" ");
                let mut chars = s.chars();
                let first = chars.next().map(|f| f.to_uppercase().collect::<String>()).unwrap_or_default();
                format!("{first}{}.", chars.as_str())
            })
            .collect();
        Ok(sentences.join(" "))
    }
}

/// Replays a fixed sequence of results and records every request.
#[derive(Default)]
pub struct ScriptedTransport {
    script: Mutex<VecDeque<Result<String, TransportError>>>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl ScriptedTransport {
    pub fn new<I: IntoIterator<Item = Result<String, TransportError>>>(script: I) -> Self {
        Self {
            script: Mutex::new(script.into_iter().collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().expect("poisoned").clone()
    }
}

impl ChatTransport for ScriptedTransport {
    fn send(&self, request: &ChatRequest, _ctx: &RequestContext) -> Result<String, TransportError> {
        self.requests.lock().expect("poisoned").push(request.clone());
        self.script
            .lock()
            .expect("poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(TransportError::Transport("script exhausted".into())))
    }
}

/// Wraps another transport and keeps a copy of every request body.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<(RequestContext, ChatRequest)>>,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<(RequestContext, ChatRequest)> {
        self.log.lock().expect("poisoned").clone()
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn send(&self, request: &ChatRequest, ctx: &RequestContext) -> Result<String, TransportError> {
        self.log.lock().expect("poisoned").push((*ctx, request.clone()));
        self.inner.send(request, ctx)
    }
}

pub(crate) fn http_agent(timeout_secs: Option<u64>) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(timeout_secs.unwrap_or(120))))
        .build()
        .into()
}

/// POSTs to `<base_url>/chat/completions` and returns the first choice's
/// message content.
pub struct HttpChatTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpChatTransport {
    pub fn new(base_url: &str, api_key: Option<String>, timeout_secs: Option<u64>) -> Self {
        Self {
            agent: http_agent(timeout_secs),
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key,
        }
    }
}

pub(crate) fn post_json(
    agent: &ureq::Agent,
    url: &str,
    api_key: Option<&str>,
    body: &impl Serialize,
) -> Result<Value, TransportError> {
    let mut req = agent.post(url);
    if let Some(key) = api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req
        .send_json(body)
        .map_err(|e| TransportError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| TransportError::Transport(e.to_string()))?;
    match status {
        200..=299 => serde_json::from_str(&text).map_err(|e| TransportError::Malformed(format!("{e}: {text}"))),
        429 => Err(TransportError::RateLimited { body: text }),
        _ => Err(TransportError::Status { status, body: text }),
    }
}

impl ChatTransport for HttpChatTransport {
    fn send(&self, request: &ChatRequest, _ctx: &RequestContext) -> Result<String, TransportError> {
        let reply = post_json(&self.agent, &self.url, self.api_key.as_deref(), request)?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportError::Malformed(reply.to_string()))
    }
}

/// Runs a program per request, writing the request JSON to its stdin and
/// taking its stdout as the reply.
pub struct LocalProcessTransport {
    command: Vec<String>,
}

impl LocalProcessTransport {
    pub fn new(command: Vec<String>) -> Self {
        Self { command }
    }
}

pub(crate) fn run_process(command: &[String], input: &[u8]) -> Result<String, TransportError> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| TransportError::Transport("empty command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| TransportError::Transport(format!("{program}: {e}")))?;
    child
        .stdin
        .take()
        .expect("stdin piped")
        .write_all(input)
        .map_err(|e| TransportError::Transport(e.to_string()))?;
    let out = child
        .wait_with_output()
        .map_err(|e| TransportError::Transport(e.to_string()))?;
    if !out.status.success() {
        return Err(TransportError::Transport(format!(
            "{program} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        )));
    }
    String::from_utf8(out.stdout).map_err(|e| TransportError::Malformed(e.to_string()))
}

impl ChatTransport for LocalProcessTransport {
    fn send(&self, request: &ChatRequest, _ctx: &RequestContext) -> Result<String, TransportError> {
        let body = serde_json::to_vec(request).map_err(|e| TransportError::Malformed(e.to_string()))?;
        run_process(&self.command, &body)
    }
}

/// Builds the transport a profile describes. HTTP credentials come from the
/// profile's API key variable; a missing key is allowed for local servers.
pub fn transport_for(profile: &ProviderProfile, task: CampaignTask) -> Result<Box<dyn ChatTransport>, HarnessError> {
    profile.validate()?;
    Ok(match profile.kind {
        ProviderKind::Mock => Box::new(MockTransport::new(profile.mock.clone().unwrap_or_default(), task)),
        ProviderKind::ChatHttp => Box::new(HttpChatTransport::new(
            profile.base_url.as_deref().expect("validated"),
            std::env::var(profile.api_key_var()).ok(),
            profile.timeout_secs,
        )),
        ProviderKind::LocalProcess => Box::new(LocalProcessTransport::new(profile.command.clone())),
    })
}
