use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::Semaphore;

use super::EvalError;

/// Environment variables consulted for the credential, in order.
pub const API_KEY_VARS: [&str; 2] = ["TRACECOT_API_KEY", "OPENAI_API_KEY"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub backoff_base_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, backoff_base_ms: 500, max_backoff_ms: 30_000 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, failed_attempts: u32) -> Duration {
        let factor = 1u64.checked_shl(failed_attempts.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

/// The credential is never serialized and is redacted from `Debug`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout() -> u64 {
    60
}

fn default_in_flight() -> usize {
    8
}

impl fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout_secs", &self.timeout_secs)
            .field("max_in_flight", &self.max_in_flight)
            .field("retry", &self.retry)
            .finish()
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout_secs: default_timeout(),
            max_in_flight: default_in_flight(),
            retry: RetryPolicy::default(),
        }
    }

    /// Fills `api_key` from the first set variable in [`API_KEY_VARS`].
    pub fn with_env_key(mut self) -> Self {
        self.api_key = API_KEY_VARS.iter().find_map(|v| std::env::var(v).ok().filter(|k| !k.is_empty()));
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.base_url.is_empty() || self.model.is_empty() {
            return Err(EvalError::Config("base_url and model are required".into()));
        }
        if self.max_in_flight == 0 || self.retry.max_attempts == 0 {
            return Err(EvalError::Config("max_in_flight and max_attempts must be positive".into()));
        }
        Ok(())
    }

    /// The URL requests are posted to; `/chat/completions` is appended
    /// unless already present.
    pub fn endpoint_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Retries were exhausted; one entry per failed attempt.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("request failed after {} attempts: {}", attempts.len(), attempts.last().map(String::as_str).unwrap_or(""))]
pub struct TransportError {
    pub attempts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct ChatClient {
    http: reqwest::Client,
    config: EndpointConfig,
    in_flight: Arc<Semaphore>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(EvalError),
}

impl ChatClient {
    pub fn new(config: EndpointConfig) -> Result<Self, EvalError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| EvalError::Config(e.to_string()))?;
        let in_flight = Arc::new(Semaphore::new(config.max_in_flight));
        Ok(ChatClient { http, config, in_flight })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    async fn attempt(&self, body: &[u8]) -> Attempt {
        let _permit = self.in_flight.acquire().await.expect("semaphore is never closed");
        let mut req = self
            .http
            .post(self.config.endpoint_url())
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_vec());
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("send: {e}")),
        };
        let status = resp.status();
        let bytes = match resp.bytes().await {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(format!("read body: {e}")),
        };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("status {}", status.as_u16()));
        }
        if !status.is_success() {
            let body = String::from_utf8_lossy(&bytes).chars().take(500).collect();
            return Attempt::Fatal(EvalError::Status { status: status.as_u16(), body });
        }
        match first_choice(&bytes) {
            Some(text) => Attempt::Done(text),
            None => Attempt::Fatal(EvalError::BadResponse(String::from_utf8_lossy(&bytes).chars().take(500).collect())),
        }
    }

    /// Sends `prompt` as a single user message and returns the first
    /// choice's content.
    pub async fn complete(&self, prompt: &str) -> Result<String, EvalError> {
        let body = serde_json::to_vec(&json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }))
        .expect("static shape");
        let mut log = Vec::new();
        for attempt in 1..=self.config.retry.max_attempts {
            match self.attempt(&body).await {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(why) => log.push(format!("attempt {attempt}: {why}")),
            }
            if attempt < self.config.retry.max_attempts {
                tokio::time::sleep(self.config.retry.delay(attempt)).await;
            }
        }
        Err(TransportError { attempts: log }.into())
    }

    /// Completes every `(id, prompt)` pair concurrently; results come back
    /// in input order and failures are recorded per item.
    pub async fn complete_all(&self, prompts: &[(String, String)]) -> Vec<Prediction> {
        let calls = prompts.iter().map(|(id, prompt)| async move {
            match self.complete(prompt).await {
                Ok(text) => Prediction { id: id.clone(), text: Some(text), error: None },
                Err(e) => Prediction { id: id.clone(), text: None, error: Some(e.to_string()) },
            }
        });
        futures::future::join_all(calls).await
    }
}

fn first_choice(bytes: &[u8]) -> Option<String> {
    let v: Value = serde_json::from_slice(bytes).ok()?;
    v.get("choices")?.get(0)?.get("message")?.get("content")?.as_str().map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    use axum::extract::State;
    use axum::http::StatusCode;
    use axum::routing::post;
    use axum::{Json, Router};

    async fn serve(app: Router) -> String {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        format!("http://{addr}/v1")
    }

    fn reply(text: &str) -> Json<Value> {
        Json(json!({"choices": [{"message": {"role": "assistant", "content": text}}]}))
    }

    fn fast(base: String) -> EndpointConfig {
        let mut c = EndpointConfig::new(base, "stub");
        c.retry = RetryPolicy { max_attempts: 3, backoff_base_ms: 10, max_backoff_ms: 50 };
        c.timeout_secs = 5;
        c
    }

    #[tokio::test]
    async fn canned_text_is_returned() {
        let app = Router::new().route(
            "/v1/chat/completions",
            post(|Json(body): Json<Value>| async move {
                assert_eq!(body["model"], "stub");
                assert_eq!(body["messages"][0]["role"], "user");
                reply("x = 5 , y = 6\n1 1")
            }),
        );
        let client = ChatClient::new(fast(serve(app).await)).unwrap();
        assert_eq!(client.complete("5 + 6").await.unwrap(), "x = 5 , y = 6\n1 1");
    }

    #[tokio::test]
    async fn retries_after_429() {
        let hits = Arc::new(AtomicUsize::new(0));
        let app = Router::new()
            .route(
                "/v1/chat/completions",
                post(|State(hits): State<Arc<AtomicUsize>>| async move {
                    if hits.fetch_add(1, Ordering::SeqCst) == 0 {
                        Err(StatusCode::TOO_MANY_REQUESTS)
                    } else {
                        Ok(reply("1 1"))
                    }
                }),
            )
            .with_state(hits.clone());
        let client = ChatClient::new(fast(serve(app).await)).unwrap();
        assert_eq!(client.complete("5 + 6").await.unwrap(), "1 1");
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[tokio::test]
    async fn client_errors_are_not_retried() {
        let hits = Arc::new(AtomicUsize::new(0));
        let app = Router::new()
            .route(
                "/v1/chat/completions",
                post(|State(hits): State<Arc<AtomicUsize>>| async move {
                    hits.fetch_add(1, Ordering::SeqCst);
                    StatusCode::UNAUTHORIZED
                }),
            )
            .with_state(hits.clone());
        let client = ChatClient::new(fast(serve(app).await)).unwrap();
        assert!(matches!(client.complete("x").await, Err(EvalError::Status { status: 401, .. })));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[tokio::test]
    async fn unreachable_host_exhausts_attempts() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let client = ChatClient::new(fast(format!("http://{addr}"))).unwrap();
        match client.complete("x").await {
            Err(EvalError::Transport(t)) => assert_eq!(t.attempts.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[tokio::test]
    async fn in_flight_bound_is_respected() {
        #[derive(Clone, Default)]
        struct Gauge {
            now: Arc<AtomicUsize>,
            peak: Arc<AtomicUsize>,
        }
        let gauge = Gauge::default();
        let app = Router::new()
            .route(
                "/v1/chat/completions",
                post(|State(g): State<Gauge>| async move {
                    let n = g.now.fetch_add(1, Ordering::SeqCst) + 1;
                    g.peak.fetch_max(n, Ordering::SeqCst);
                    tokio::time::sleep(Duration::from_millis(20)).await;
                    g.now.fetch_sub(1, Ordering::SeqCst);
                    reply("0")
                }),
            )
            .with_state(gauge.clone());
        let mut cfg = fast(serve(app).await);
        cfg.max_in_flight = 3;
        let client = ChatClient::new(cfg).unwrap();
        let prompts: Vec<_> = (0..20).map(|i| (format!("p{i}"), format!("{i} + 0"))).collect();
        let preds = client.complete_all(&prompts).await;
        assert_eq!(preds.iter().map(|p| p.id.clone()).collect::<Vec<_>>(), prompts.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
        assert!(preds.iter().all(|p| p.text.as_deref() == Some("0")));
        assert!(gauge.peak.load(Ordering::SeqCst) <= 3);
    }

    #[test]
    fn credential_is_hidden() {
        let mut cfg = EndpointConfig::new("http://localhost", "m");
        cfg.api_key = Some("sk-secret-value".into());
        assert!(!format!("{cfg:?}").contains("sk-secret-value"));
        assert!(!serde_json::to_string(&cfg).unwrap().contains("sk-secret-value"));
    }

    #[test]
    fn url_and_backoff() {
        assert_eq!(EndpointConfig::new("http://h/v1/", "m").endpoint_url(), "http://h/v1/chat/completions");
        assert_eq!(EndpointConfig::new("http://h/v1/chat/completions", "m").endpoint_url(), "http://h/v1/chat/completions");
        let p = RetryPolicy { max_attempts: 9, backoff_base_ms: 100, max_backoff_ms: 1000 };
        assert_eq!(p.delay(1), Duration::from_millis(100));
        assert_eq!(p.delay(3), Duration::from_millis(400));
        assert_eq!(p.delay(8), Duration::from_millis(1000));
    }
}
