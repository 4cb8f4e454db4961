//! Chat-completion backends: one live HTTP client speaking the
//! `/v1/chat/completions` wire protocol and one deterministic scripted
//! implementation for tests and dry runs.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Message role on the chat-completions wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Connection settings for the live backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub base_url: String,
    pub model_name: String,
    /// Sampling temperature; defaults to 0.7.
    pub temperature: f64,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First backoff delay; doubles per retry.
    pub retry_initial_delay: Duration,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub api_key: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:11434".into(),
            model_name: "default".into(),
            temperature: 0.7,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            retry_initial_delay: Duration::from_millis(500),
            api_key: None,
        }
    }
}

/// Who is asking and in which round; the scripted backend keys on this, the
/// live backend ignores it.
#[derive(Debug, Clone, Copy)]
pub struct CallContext<'a> {
    pub agent: &'a str,
    pub round: usize,
}

/// Uniform chat-completion interface. One debate issues its calls strictly
/// sequentially; a backend handle may serve many debates concurrently.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, ctx: &CallContext<'_>, messages: &[ChatMessage]) -> Result<String>;
}

fn validate_messages(messages: &[ChatMessage]) -> Result<()> {
    if messages.is_empty() {
        return Err(Error::Domain("complete() with empty message list".into()));
    }
    for (i, m) in messages.iter().enumerate() {
        if m.role != Role::Assistant && m.content.is_empty() {
            return Err(Error::Domain(format!("message {i} has empty content")));
        }
        if m.role == Role::System && i != 0 {
            return Err(Error::Domain(
                "system message must be first when present".into(),
            ));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

/// Live backend: POST {base_url}/v1/chat/completions, bearer auth when an
/// api key is set. Transport failures and 5xx responses are retried with
/// exponential backoff; 4xx responses never are.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    config: BackendConfig,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Backend(format!("building http client: {e}")))?;
        Ok(Self { client, config })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/v1/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    fn try_once(&self, messages: &[ChatMessage]) -> std::result::Result<String, (bool, String)> {
        let body = WireRequest {
            model: &self.config.model_name,
            messages,
            temperature: self.config.temperature,
        };
        let mut request = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| (true, format!("transport: {e}")))?;
        let status = response.status();
        if status.is_server_error() {
            return Err((true, format!("http {status}")));
        }
        if !status.is_success() {
            return Err((false, format!("http {status}")));
        }
        let parsed: WireResponse = response
            .json()
            .map_err(|e| (false, format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or((false, "response has no choices[0].message.content".into()))
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, _ctx: &CallContext<'_>, messages: &[ChatMessage]) -> Result<String> {
        validate_messages(messages)?;
        let mut delay = self.config.retry_initial_delay;
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.try_once(messages) {
                Ok(text) => return Ok(text),
                Err((retryable, msg)) => {
                    last_error = msg;
                    if !retryable || attempt == self.config.max_retries {
                        break;
                    }
                    log::warn!(
                        "backend attempt {}/{} failed ({last_error}), retrying in {delay:?}",
                        attempt + 1,
                        self.config.max_retries + 1,
                    );
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
            }
        }
        Err(Error::Backend(format!(
            "chat completion failed: {last_error}"
        )))
    }
}

type RuleFn = dyn Fn(&str, usize) -> Option<String> + Send + Sync;

enum Script {
    Queue(Vec<String>),
    PerAgent(BTreeMap<String, Vec<String>>),
    Rule(Arc<RuleFn>),
}

/// One recorded scripted-backend call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub agent: String,
    pub round: usize,
    pub messages: Vec<ChatMessage>,
}

/// Deterministic backend that replays a script and records every request.
pub struct ScriptedBackend {
    script: Mutex<Script>,
    default: Option<String>,
    log: Mutex<Vec<RecordedRequest>>,
}

impl ScriptedBackend {
    /// Replay responses from one ordered queue.
    pub fn from_queue(responses: Vec<String>) -> Self {
        Self {
            script: Mutex::new(Script::Queue(responses)),
            default: None,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Replay per-agent queues, consumed independently.
    pub fn per_agent(queues: BTreeMap<String, Vec<String>>) -> Self {
        Self {
            script: Mutex::new(Script::PerAgent(queues)),
            default: None,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Respond via a deterministic function of (agent, round).
    pub fn from_rule(rule: impl Fn(&str, usize) -> Option<String> + Send + Sync + 'static) -> Self {
        Self {
            script: Mutex::new(Script::Rule(Arc::new(rule))),
            default: None,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Fall back to a fixed response when the script has nothing queued.
    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = Some(response.into());
        self
    }

    pub fn request_log(&self) -> Vec<RecordedRequest> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn requests_served(&self) -> usize {
        self.log.lock().expect("log lock").len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, ctx: &CallContext<'_>, messages: &[ChatMessage]) -> Result<String> {
        validate_messages(messages)?;
        self.log.lock().expect("log lock").push(RecordedRequest {
            agent: ctx.agent.to_string(),
            round: ctx.round,
            messages: messages.to_vec(),
        });
        let mut script = self.script.lock().expect("script lock");
        let next = match &mut *script {
            Script::Queue(q) => {
                if q.is_empty() {
                    None
                } else {
                    Some(q.remove(0))
                }
            }
            Script::PerAgent(map) => {
                // debates qualify agents as "debate_id/name"; accept a key
                // matching either the full id or the bare name
                let key = map
                    .keys()
                    .find(|k| {
                        k.as_str() == ctx.agent
                            || ctx.agent.rsplit_once('/').is_some_and(|(_, n)| n == *k)
                    })
                    .cloned();
                match key.and_then(|k| map.get_mut(&k)) {
                    Some(q) if !q.is_empty() => Some(q.remove(0)),
                    _ => None,
                }
            }
            Script::Rule(rule) => rule(ctx.agent, ctx.round),
        };
        next.or_else(|| self.default.clone()).ok_or_else(|| {
            Error::Backend(format!(
                "scripted backend has no response for agent {:?} round {}",
                ctx.agent, ctx.round
            ))
        })
    }
}
