//! Model backends: a remote chat-completions endpoint, scripted playback and
//! a failing stub.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend call timed out")]
    Timeout,
    #[error("http status {0}")]
    Status(u16),
    #[error("unexpected response shape: {0}")]
    Format(String),
    #[error("scripted backend exhausted")]
    Exhausted,
    #[error("configuration error: {0}")]
    Config(String),
}

pub trait ModelBackend: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64, timeout: Duration) -> Result<String, BackendError>;
}

impl<B: ModelBackend + ?Sized> ModelBackend for Box<B> {
    fn complete(&self, prompt: &str, temperature: f64, timeout: Duration) -> Result<String, BackendError> {
        (**self).complete(prompt, temperature, timeout)
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for std::sync::Arc<B> {
    fn complete(&self, prompt: &str, temperature: f64, timeout: Duration) -> Result<String, BackendError> {
        (**self).complete(prompt, temperature, timeout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL; `/chat/completions` is appended unless already present.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_secs: u64,
}

fn default_request_timeout() -> u64 {
    120
}

/// OpenAI-compatible chat completions over HTTP.
pub struct RemoteBackend {
    config: RemoteConfig,
    api_key: Option<String>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| BackendError::Config(format!("environment variable {var} is not set")))?),
            None => None,
        };
        Ok(RemoteBackend { config, api_key })
    }

    fn url(&self) -> String {
        let base = self.config.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

impl ModelBackend for RemoteBackend {
    fn complete(&self, prompt: &str, temperature: f64, timeout: Duration) -> Result<String, BackendError> {
        let limit = timeout.min(Duration::from_secs(self.config.request_timeout_secs));
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(limit)).build().into();
        let body = json!({
            "model": self.config.model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = agent.post(&self.url());
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::StatusCode(code) => BackendError::Status(code),
            ureq::Error::Timeout(_) => BackendError::Timeout,
            other => BackendError::Transport(other.to_string()),
        })?;
        let v: Value = resp.into_body().read_json().map_err(|e| BackendError::Format(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Format("missing choices[0].message.content".into()))
    }
}

/// Plays back canned responses in order.
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
    delay: Duration,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend { queue: Mutex::new(responses.into_iter().map(Into::into).collect()), prompts: Mutex::new(Vec::new()), delay: Duration::ZERO }
    }

    /// Every call takes `delay`; a delay beyond the call's timeout yields
    /// [`BackendError::Timeout`] once the timeout has elapsed.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().unwrap().len()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap().len()
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(&self, prompt: &str, _temperature: f64, timeout: Duration) -> Result<String, BackendError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        if !self.delay.is_zero() {
            thread::sleep(self.delay.min(timeout));
            if self.delay > timeout {
                return Err(BackendError::Timeout);
            }
        }
        self.queue.lock().unwrap().pop_front().ok_or(BackendError::Exhausted)
    }
}

/// Fails a fixed number of calls (or all of them), then delegates.
pub struct FailingBackend {
    fail_first: Option<usize>,
    inner: Option<Box<dyn ModelBackend>>,
    calls: Mutex<usize>,
}

impl FailingBackend {
    pub fn always() -> Self {
        FailingBackend { fail_first: None, inner: None, calls: Mutex::new(0) }
    }

    pub fn transient(fail_first: usize, inner: impl ModelBackend + 'static) -> Self {
        FailingBackend { fail_first: Some(fail_first), inner: Some(Box::new(inner)), calls: Mutex::new(0) }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl ModelBackend for FailingBackend {
    fn complete(&self, prompt: &str, temperature: f64, timeout: Duration) -> Result<String, BackendError> {
        let n = {
            let mut c = self.calls.lock().unwrap();
            *c += 1;
            *c
        };
        match (self.fail_first, &self.inner) {
            (Some(k), Some(inner)) if n > k => inner.complete(prompt, temperature, timeout),
            _ => Err(BackendError::Transport(format!("injected failure on call {n}"))),
        }
    }
}
