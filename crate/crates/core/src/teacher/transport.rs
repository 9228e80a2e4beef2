use std::io::Read;
use std::time::Duration;

use super::request::ChatRequest;

/// Failure below the API schema level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    /// Server answered with a non-success status.
    Status { code: u16, body: String },
    /// Connection, timeout or I/O failure.
    Network(String),
}

/// Sends one chat-completion request and returns the raw response body.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<Vec<u8>, TransportFailure>;
}

/// Adapts a closure into a [`Transport`]; handy for scripted endpoints.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: Fn(&ChatRequest) -> Result<Vec<u8>, TransportFailure> + Send + Sync,
{
    fn send(&self, request: &ChatRequest) -> Result<Vec<u8>, TransportFailure> {
        (self.0)(request)
    }
}

/// Blocking HTTP transport for OpenAI-compatible servers.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    /// `base_url` such as `http://localhost:8000/v1`, `path` such as
    /// `/chat/completions`. The bearer token is read from `api_key_env` when
    /// that variable is set.
    pub fn new(base_url: &str, path: &str, api_key_env: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        let url = format!("{}/{}", base_url.trim_end_matches('/'), path.trim_start_matches('/'));
        let api_key = std::env::var(api_key_env).ok().filter(|k| !k.is_empty());
        Self { agent, url, api_key }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<Vec<u8>, TransportFailure> {
        let body = serde_json::to_vec(&request.to_wire()).expect("request serializes");
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(&body[..]).map_err(|e| TransportFailure::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let mut bytes = Vec::new();
        resp.body_mut().as_reader().read_to_end(&mut bytes).map_err(|e| TransportFailure::Network(e.to_string()))?;
        if (200..300).contains(&status) {
            Ok(bytes)
        } else {
            Err(TransportFailure::Status { code: status, body: String::from_utf8_lossy(&bytes).into_owned() })
        }
    }
}
