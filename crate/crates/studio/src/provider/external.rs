use std::thread;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use echo_core::pipeline::{PromptBundle, Provider, ProviderError};
use serde_json::{json, Value};

/// A chat-completions endpoint. Requests carry the system text, the user text
/// and, when present, the image as a PNG data URL.
#[derive(Debug, Clone)]
pub struct ExternalProvider {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    timeout: Duration,
    retry_backoff: Duration,
    deterministic: bool,
    agent: ureq::Agent,
}

impl ExternalProvider {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            timeout,
            retry_backoff: Duration::from_millis(500),
            deterministic: true,
            agent,
        }
    }

    pub fn with_retry_backoff(mut self, backoff: Duration) -> Self {
        self.retry_backoff = backoff;
        self
    }

    pub fn with_deterministic(mut self, deterministic: bool) -> Self {
        self.deterministic = deterministic;
        self
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn body(&self, request: &PromptBundle) -> Result<Value, ProviderError> {
        let mut content = vec![json!({"type": "text", "text": request.user_text})];
        if let Some(b64) = &request.image_payload {
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{}", to_png_base64(b64)?)},
            }));
        }
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": content},
            ],
        });
        if self.deterministic {
            body["temperature"] = json!(0);
            body["seed"] = json!(0);
        }
        Ok(body)
    }

    fn send(&self, body: &Value) -> Result<String, ProviderError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(map_transport)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_transport)?;
        match status {
            200..=299 => extract_content(&text),
            401 | 403 => Err(ProviderError::Auth {
                message: truncate(&text),
            }),
            _ => Err(ProviderError::Http {
                status,
                body: truncate(&text),
            }),
        }
    }
}

impl Provider for ExternalProvider {
    fn id(&self) -> &str {
        "external"
    }

    /// One retry after a backoff for timeouts, transport failures and 5xx or
    /// 429 answers; credentials and other client errors fail at once.
    fn complete(&self, request: &PromptBundle) -> Result<String, ProviderError> {
        let body = self.body(request)?;
        match self.send(&body) {
            Err(e) if retryable(&e) => {
                tracing::warn!(error = %e, "provider call failed, retrying once");
                thread::sleep(self.retry_backoff);
                self.send(&body)
            }
            other => other,
        }
    }
}

fn retryable(e: &ProviderError) -> bool {
    match e {
        ProviderError::Timeout | ProviderError::Transport { .. } => true,
        ProviderError::Http { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

fn map_transport(e: ureq::Error) -> ProviderError {
    match e {
        ureq::Error::Timeout(_) => ProviderError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => ProviderError::Timeout,
        other => ProviderError::Transport {
            message: other.to_string(),
        },
    }
}

/// The assistant message text of a chat-completions response, untouched.
fn extract_content(text: &str) -> Result<String, ProviderError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ProviderError::Other {
        message: format!("response is not JSON: {e}"),
    })?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Other {
            message: "response has no choices[0].message.content".into(),
        })
}

fn truncate(text: &str) -> String {
    text.chars().take(512).collect()
}

/// Top views travel as PPM internally; vision endpoints want PNG. Anything
/// that already decodes as PNG passes through.
fn to_png_base64(b64: &str) -> Result<String, ProviderError> {
    let bad = |m: String| ProviderError::Other {
        message: format!("image payload: {m}"),
    };
    let bytes = STANDARD.decode(b64).map_err(|e| bad(e.to_string()))?;
    let png = crate::imaging::to_png(&bytes).map_err(|e| bad(e.to_string()))?;
    Ok(STANDARD.encode(png))
}
