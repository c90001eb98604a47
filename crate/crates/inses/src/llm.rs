//! Chat-completion backends. Everything downstream talks to the
//! [`ChatBackend`] trait so tests can swap in canned or programmatic
//! responders, while production use goes through a small HTTP client.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("language-model backend not configured: set {0}")]
    NotConfigured(&'static str),
    #[error("language-model request failed: {0}")]
    Transport(String),
    #[error("language-model response malformed: {0}")]
    MalformedPayload(String),
    #[error("scripted backend has no responses left")]
    Exhausted,
}

pub type BackendResult<T> = Result<T, BackendError>;

/// A synchronous prompt-in, text-out completion endpoint.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> BackendResult<String>;
    fn identity(&self) -> String;
}

pub const LLM_URL_VAR: &str = "INSES_LLM_URL";
pub const LLM_KEY_VAR: &str = "INSES_LLM_KEY";

pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

/// HTTP client posting `{"prompt": ...}` and expecting `{"text": ...}`.
pub struct HttpChatBackend {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    text: String,
}

impl HttpChatBackend {
    /// Reads the endpoint from `INSES_LLM_URL` and an optional bearer token
    /// from `INSES_LLM_KEY`.
    pub fn from_env(timeout: Duration) -> BackendResult<Self> {
        let url =
            std::env::var(LLM_URL_VAR).map_err(|_| BackendError::NotConfigured(LLM_URL_VAR))?;
        HttpChatBackend::from_url(&url, std::env::var(LLM_KEY_VAR).ok(), timeout)
    }

    pub fn from_url(url: &str, api_key: Option<String>, timeout: Duration) -> BackendResult<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpChatBackend { url: url.to_owned(), api_key, client })
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, prompt: &str) -> BackendResult<String> {
        let mut request = self.client.post(&self.url).json(&ChatRequest { prompt });
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Transport(format!("server returned {status}")));
        }
        let payload: ChatResponse =
            response.json().map_err(|e| BackendError::MalformedPayload(e.to_string()))?;
        Ok(payload.text)
    }

    fn identity(&self) -> String {
        format!("http@{}", self.url)
    }
}

/// Plays back a fixed queue of responses; errors once drained. The prompts
/// it received stay inspectable for assertions.
pub struct CannedBackend {
    responses: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
}

impl CannedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CannedBackend {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("response queue lock").len()
    }
}

impl ChatBackend for CannedBackend {
    fn complete(&self, prompt: &str) -> BackendResult<String> {
        self.prompts.lock().expect("prompt log lock").push(prompt.to_owned());
        self.responses
            .lock()
            .expect("response queue lock")
            .pop_front()
            .ok_or(BackendError::Exhausted)
    }

    fn identity(&self) -> String {
        "canned".to_owned()
    }
}

/// Adapts a closure into a backend, for adversarial test drivers.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&str) -> BackendResult<String> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> BackendResult<String> {
        (self.0)(prompt)
    }

    fn identity(&self) -> String {
        "fn".to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_backend_replays_in_order_then_errors() {
        let backend = CannedBackend::new(["first", "second"]);
        assert_eq!(backend.complete("p1").unwrap(), "first");
        assert_eq!(backend.complete("p2").unwrap(), "second");
        assert!(matches!(backend.complete("p3"), Err(BackendError::Exhausted)));
        assert_eq!(backend.prompts(), vec!["p1", "p2", "p3"]);
    }

    #[test]
    fn fn_backend_delegates_to_the_closure() {
        let backend = FnBackend(|prompt: &str| Ok(format!("echo: {prompt}")));
        assert_eq!(backend.complete("hi").unwrap(), "echo: hi");
    }

    #[test]
    fn from_env_requires_url() {
        let saved = std::env::var(LLM_URL_VAR).ok();
        std::env::remove_var(LLM_URL_VAR);
        let err = HttpChatBackend::from_env(Duration::from_secs(1)).err().unwrap();
        assert!(matches!(err, BackendError::NotConfigured(LLM_URL_VAR)));
        if let Some(value) = saved {
            std::env::set_var(LLM_URL_VAR, value);
        }
    }
}
