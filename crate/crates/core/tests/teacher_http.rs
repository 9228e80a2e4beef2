mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use common::{completion, user_text, MockServer};
use langforge::teacher::{ChatRequest, HttpTransport, ResponseCache, RetryPolicy, TeacherClient, TeacherError};

fn http_client(server: &MockServer, key_env: &str) -> TeacherClient {
    let transport = HttpTransport::new(&server.base_url, "/chat/completions", key_env, Duration::from_secs(10));
    TeacherClient::new(Arc::new(transport)).with_retry(RetryPolicy::immediate(2))
}

fn request(i: usize) -> ChatRequest {
    ChatRequest::single_turn("teacher", "sys", format!("item {i}"), 1.0)
}

#[test]
fn batch_respects_concurrency_bound_and_keeps_slot_order() {
    let server = MockServer::start(Duration::from_millis(80), |body| {
        let user = user_text(body);
        if user == "item 2" {
            (500, "{\"error\":\"boom\"}".into())
        } else {
            (200, completion(&format!("answer to {user}")))
        }
    });
    let client = http_client(&server, "LANGFORGE_TEST_UNSET_KEY");
    let requests: Vec<_> = (0..10).map(request).collect();
    let results = client.complete_batch(&requests, 3);

    assert_eq!(results.len(), 10);
    for (i, r) in results.iter().enumerate() {
        if i == 2 {
            assert!(matches!(r, Err(TeacherError::Transport { attempts: 2, .. })), "slot 2: {r:?}");
        } else {
            assert_eq!(r.as_ref().unwrap().final_text, format!("answer to item {i}"));
        }
    }
    let peak = server.peak_concurrency();
    assert!(peak <= 3, "peak concurrency {peak}");
    assert!(peak >= 2, "requests never overlapped");
    assert_eq!(server.requests(), 11, "nine successes plus two attempts for slot 2");
}

#[test]
fn auth_failures_are_not_retried() {
    let server = MockServer::start(Duration::ZERO, |_| (401, "{}".into()));
    let client = http_client(&server, "LANGFORGE_TEST_UNSET_KEY");
    let err = client.complete(&request(0)).unwrap_err();
    assert!(matches!(err, TeacherError::Auth { status: 401 }));
    assert!(err.is_systemic());
    assert_eq!(server.requests(), 1);
}

#[test]
fn rate_limits_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let server = MockServer::start(Duration::ZERO, move |_| {
        if seen.fetch_add(1, Ordering::SeqCst) == 0 {
            (429, "{}".into())
        } else {
            (200, completion("ok"))
        }
    });
    let client = http_client(&server, "LANGFORGE_TEST_UNSET_KEY");
    assert_eq!(client.complete(&request(0)).unwrap().final_text, "ok");
    assert_eq!(server.requests(), 2);
}

#[test]
fn bearer_token_and_decoding_parameters_reach_the_server() {
    std::env::set_var("LANGFORGE_TEST_KEY", "sekrit");
    let server = MockServer::start(Duration::ZERO, |_| (200, completion("ok")));
    let client = http_client(&server, "LANGFORGE_TEST_KEY");
    let mut req = ChatRequest::single_turn("m", "sys", "hi", 0.0);
    req.repetition_penalty = Some(1.0);
    client.complete(&req).unwrap();
    let seen = server.seen();
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sekrit"));
    assert_eq!(seen[0].body["temperature"], 0.0);
    assert_eq!(seen[0].body["repetition_penalty"], 1.0);
    assert_eq!(seen[0].body["model"], "m");
}

#[test]
fn reasoning_is_split_from_the_answer() {
    let server = MockServer::start(Duration::ZERO, |_| {
        (200, String::from_utf8(langforge::teacher::mock::chat_completion_body("Final.", Some("Because."))).unwrap())
    });
    let client = http_client(&server, "LANGFORGE_TEST_UNSET_KEY");
    let r = client.complete(&request(0)).unwrap();
    assert_eq!(r.final_text, "Final.");
    assert_eq!(r.reasoning_text, "Because.");
}

#[test]
fn cached_responses_are_replayed_without_network() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let server = MockServer::start(Duration::ZERO, |body| (200, completion(&format!("re: {}", user_text(body)))));
    let requests: Vec<_> = (0..5).map(request).collect();

    let first = http_client(&server, "LANGFORGE_TEST_UNSET_KEY").with_cache(ResponseCache::open(&path).unwrap());
    let a: Vec<_> = first.complete_batch(&requests, 2).into_iter().map(Result::unwrap).collect();
    assert_eq!(server.requests(), 5);
    drop(first);

    let replay = TeacherClient::cache_only(ResponseCache::open(&path).unwrap());
    let b: Vec<_> = replay.complete_batch(&requests, 2).into_iter().map(Result::unwrap).collect();
    assert_eq!(a, b);
    assert_eq!(server.requests(), 5);
    assert_eq!(replay.network_calls(), 0);
    assert!(matches!(replay.complete(&request(99)), Err(TeacherError::CacheMiss(_))));
}
