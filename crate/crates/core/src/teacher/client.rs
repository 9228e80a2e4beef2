use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use rand::Rng;
use serde_json::Value;
use thiserror::Error;

use super::cache::{CacheKey, ResponseCache};
use super::reasoning::{split_reasoning, ReasoningMarkers};
use super::request::{ChatRequest, ChatResponse, Usage};
use super::transport::{Transport, TransportFailure};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeacherError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("no cached response for {0} and the client is in cache-only mode")]
    CacheMiss(String),
    #[error("cache write failed: {0}")]
    Cache(String),
}

impl TeacherError {
    /// Errors that will recur for every request of a run.
    pub fn is_systemic(&self) -> bool {
        matches!(self, TeacherError::Auth { .. } | TeacherError::Cache(_))
    }
}

/// Exponential backoff with full jitter; only 429, 5xx and network failures
/// are retried.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
            jitter: true,
        }
    }
}

impl RetryPolicy {
    pub fn immediate(max_attempts: u32) -> Self {
        Self { max_attempts, base_delay: Duration::ZERO, max_delay: Duration::ZERO, jitter: false }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << attempt.min(16));
        let capped = exp.min(self.max_delay);
        if self.jitter && !capped.is_zero() {
            capped.mul_f64(rand::thread_rng().gen_range(0.0..1.0))
        } else {
            capped
        }
    }
}

/// Teacher model client: validation, cache lookup, retries and reasoning
/// extraction in front of a [`Transport`].
///
/// Without a transport the client runs in cache-only mode and replays a
/// previous run's responses.
pub struct TeacherClient {
    transport: Option<Arc<dyn Transport>>,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    markers: ReasoningMarkers,
    network_calls: AtomicU64,
}

impl TeacherClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self {
            transport: Some(transport),
            cache: None,
            retry: RetryPolicy::default(),
            markers: ReasoningMarkers::default(),
            network_calls: AtomicU64::new(0),
        }
    }

    pub fn cache_only(cache: ResponseCache) -> Self {
        Self {
            transport: None,
            cache: Some(cache),
            retry: RetryPolicy::default(),
            markers: ReasoningMarkers::default(),
            network_calls: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_markers(mut self, markers: ReasoningMarkers) -> Self {
        self.markers = markers;
        self
    }

    pub fn markers(&self) -> &ReasoningMarkers {
        &self.markers
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    /// HTTP attempts made so far, retries included.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TeacherError> {
        request.validate().map_err(TeacherError::InvalidRequest)?;
        let key = CacheKey::of(request);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key) {
                return Ok(hit);
            }
        }
        let Some(transport) = &self.transport else {
            return Err(TeacherError::CacheMiss(key.to_string()));
        };
        let body = self.send_with_retry(transport.as_ref(), request)?;
        let response = parse_response(&body, &self.markers)?;
        if let Some(cache) = &self.cache {
            cache.put(key, &response).map_err(|e| TeacherError::Cache(e.to_string()))?;
        }
        Ok(response)
    }

    fn send_with_retry(&self, transport: &dyn Transport, request: &ChatRequest) -> Result<Vec<u8>, TeacherError> {
        let max = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let err = match transport.send(request) {
                Ok(body) => return Ok(body),
                Err(TransportFailure::Status { code: code @ (401 | 403), .. }) => {
                    return Err(TeacherError::Auth { status: code })
                }
                Err(TransportFailure::Status { code: 429, .. }) => TeacherError::RateLimited { attempts: attempt },
                Err(TransportFailure::Status { code, body }) if code >= 500 => TeacherError::Transport {
                    attempts: attempt,
                    message: format!("HTTP {code}: {}", truncate(&body, 200)),
                },
                Err(TransportFailure::Status { code, body }) => {
                    return Err(TeacherError::Transport {
                        attempts: attempt,
                        message: format!("HTTP {code}: {}", truncate(&body, 200)),
                    })
                }
                Err(TransportFailure::Network(message)) => TeacherError::Transport { attempts: attempt, message },
            };
            if attempt >= max {
                return Err(err);
            }
            tracing::debug!(attempt, "retrying teacher request: {err}");
            thread::sleep(self.retry.delay(attempt - 1));
        }
    }

    /// Completes every request with at most `max_in_flight` outstanding at
    /// once. Slot `i` of the result belongs to `requests[i]`; failures stay
    /// in their slot.
    ///
    /// # Panics
    /// If `max_in_flight` is zero.
    pub fn complete_batch(
        &self,
        requests: &[ChatRequest],
        max_in_flight: usize,
    ) -> Vec<Result<ChatResponse, TeacherError>> {
        assert!(max_in_flight >= 1, "max_in_flight must be at least 1");
        if requests.is_empty() {
            return Vec::new();
        }
        let slots: Vec<Mutex<Option<Result<ChatResponse, TeacherError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = max_in_flight.min(requests.len());
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= requests.len() {
                        break;
                    }
                    let result = self.complete(&requests[i]);
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });
        slots.into_iter().map(|slot| slot.into_inner().unwrap().expect("every slot filled")).collect()
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn parse_response(body: &[u8], markers: &ReasoningMarkers) -> Result<ChatResponse, TeacherError> {
    let raw = String::from_utf8_lossy(body).into_owned();
    let value: Value =
        serde_json::from_slice(body).map_err(|e| TeacherError::MalformedResponse(format!("invalid JSON: {e}")))?;
    let message = value
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .filter(|m| m.is_object())
        .ok_or_else(|| TeacherError::MalformedResponse("missing choices[0].message".into()))?;
    match message.get("content") {
        None | Some(Value::Null) | Some(Value::String(_)) => {}
        Some(_) => return Err(TeacherError::MalformedResponse("message content is not a string".into())),
    }
    let (final_text, reasoning_text) = split_reasoning(message, markers);
    let usage = value.get("usage");
    let count = |k: &str| usage.and_then(|u| u.get(k)).and_then(Value::as_u64).unwrap_or(0);
    Ok(ChatResponse {
        final_text,
        reasoning_text,
        usage: Usage { prompt_tokens: count("prompt_tokens"), completion_tokens: count("completion_tokens") },
        raw_payload: raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teacher::mock::chat_completion_body;
    use crate::teacher::transport::FnTransport;
    use std::sync::atomic::AtomicU32;

    fn scripted<F>(f: F) -> Arc<dyn Transport>
    where
        F: Fn(&ChatRequest) -> Result<Vec<u8>, TransportFailure> + Send + Sync + 'static,
    {
        Arc::new(FnTransport(f))
    }

    fn req(text: &str) -> ChatRequest {
        ChatRequest::single_turn("m", "sys", text, 0.0)
    }

    #[test]
    fn retries_5xx_then_succeeds() {
        let calls = Arc::new(AtomicU32::new(0));
        let c = calls.clone();
        let client = TeacherClient::new(scripted(move |_| {
            if c.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(TransportFailure::Status { code: 503, body: "busy".into() })
            } else {
                Ok(chat_completion_body("ok", None))
            }
        }))
        .with_retry(RetryPolicy::immediate(3));
        assert_eq!(client.complete(&req("a")).unwrap().final_text, "ok");
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn retry_budget_is_bounded() {
        let client = TeacherClient::new(scripted(|_| Err(TransportFailure::Status { code: 429, body: String::new() })))
            .with_retry(RetryPolicy::immediate(3));
        assert_eq!(client.complete(&req("a")), Err(TeacherError::RateLimited { attempts: 3 }));
        assert_eq!(client.network_calls(), 3);

        let client = TeacherClient::new(scripted(|_| Err(TransportFailure::Network("reset".into()))))
            .with_retry(RetryPolicy::immediate(2));
        assert!(matches!(client.complete(&req("a")), Err(TeacherError::Transport { attempts: 2, .. })));
    }

    #[test]
    fn auth_and_client_errors_are_not_retried() {
        let client = TeacherClient::new(scripted(|_| Err(TransportFailure::Status { code: 401, body: String::new() })))
            .with_retry(RetryPolicy::immediate(5));
        assert_eq!(client.complete(&req("a")), Err(TeacherError::Auth { status: 401 }));
        assert_eq!(client.network_calls(), 1);

        let client = TeacherClient::new(scripted(|_| Err(TransportFailure::Status { code: 400, body: "bad".into() })))
            .with_retry(RetryPolicy::immediate(5));
        assert!(client.complete(&req("a")).is_err());
        assert_eq!(client.network_calls(), 1);
    }

    #[test]
    fn malformed_bodies() {
        for body in [&b"not json"[..], b"{}", b"{\"choices\": []}", b"{\"choices\":[{\"message\":{\"content\":5}}]}"] {
            let body = body.to_vec();
            let client = TeacherClient::new(scripted(move |_| Ok(body.clone())));
            assert!(matches!(client.complete(&req("a")), Err(TeacherError::MalformedResponse(_))));
        }
    }

    #[test]
    fn invalid_request_makes_no_call() {
        let client = TeacherClient::new(scripted(|_| panic!("must not be called")));
        let empty = ChatRequest::new("m", vec![], 0.0);
        assert!(matches!(client.complete(&empty), Err(TeacherError::InvalidRequest(_))));
        assert_eq!(client.network_calls(), 0);
    }

    #[test]
    fn cache_only_mode_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path().join("c.jsonl")).unwrap();
        let client = TeacherClient::cache_only(cache);
        assert!(matches!(client.complete(&req("a")), Err(TeacherError::CacheMiss(_))));
    }

    #[test]
    fn usage_is_read() {
        let client = TeacherClient::new(scripted(|_| {
            Ok(br#"{"choices":[{"message":{"content":"x"}}],"usage":{"prompt_tokens":7,"completion_tokens":3}}"#
                .to_vec())
        }));
        let r = client.complete(&req("a")).unwrap();
        assert_eq!(r.usage, Usage { prompt_tokens: 7, completion_tokens: 3 });
    }
}
