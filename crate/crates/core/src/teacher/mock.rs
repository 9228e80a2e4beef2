//! A deterministic stand-in teacher.
//!
//! [`MockTeacher`] recognises each generation stage by the output contract
//! in its system message and answers with exactly the number of items the
//! user message asks for. It never touches the network, which makes full
//! pipeline runs reproducible offline. Select it with the endpoint `mock`.

use serde_json::json;

use super::request::{ChatRequest, Role};
use super::transport::{Transport, TransportFailure};
use crate::translation::serial::{parse_records, render_records};

/// Builds a chat-completions response body.
pub fn chat_completion_body(content: &str, reasoning: Option<&str>) -> Vec<u8> {
    let mut message = json!({"role": "assistant", "content": content});
    if let Some(r) = reasoning {
        message["reasoning_content"] = json!(r);
    }
    let body = json!({
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": message, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0},
    });
    serde_json::to_vec(&body).unwrap()
}

/// Wraps a JSON value in a fenced block with some surrounding chatter.
pub fn fenced_json(value: &serde_json::Value) -> String {
    format!("Here you go:\n```json\n{}\n```\n", serde_json::to_string_pretty(value).unwrap())
}

#[derive(Debug, Clone, Default)]
pub struct MockTeacher;

impl MockTeacher {
    pub fn new() -> Self {
        Self
    }

    fn reply(&self, request: &ChatRequest) -> String {
        let system = request.messages.iter().find(|m| m.role == Role::System).map(|m| m.content.as_str()).unwrap_or("");
        let user =
            request.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("");
        let tag = short_hash(user);

        if system.contains("\"improved_prompt\"") {
            return fenced_json(&json!({"improved_prompt": format!("{user} Please explain in detail.")}));
        }
        if system.contains("list of dicts") {
            return match parse_records(user) {
                Ok(records) => {
                    let translated: Vec<Vec<(String, String)>> = records
                        .into_iter()
                        .map(|rec| {
                            rec.into_iter()
                                .map(|(k, v)| if k == "value" { (k, format!("{v} (tr)")) } else { (k, v) })
                                .collect()
                        })
                        .collect();
                    render_records(&translated)
                }
                Err(_) => "I could not read that conversation.".into(),
            };
        }
        for (key, label) in [("\"topics\"", "Topic"), ("\"scenarios\"", "Scenario"), ("\"prompts\"", "Prompt")] {
            if system.contains(key) {
                let n = requested_count(user).unwrap_or(3);
                let items: Vec<String> = (1..=n).map(|k| format!("{label} {k} {tag}")).collect();
                return fenced_json(&json!({ key.trim_matches('"'): items }));
            }
        }
        String::new()
    }
}

impl Transport for MockTeacher {
    fn send(&self, request: &ChatRequest) -> Result<Vec<u8>, TransportFailure> {
        let content = self.reply(request);
        if !content.is_empty() {
            return Ok(chat_completion_body(&content, None));
        }
        // plain chat: answer with a reasoning trace
        let user = request.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        let head: String = user.chars().take(48).collect();
        let tag = short_hash(user);
        Ok(chat_completion_body(&format!("Answer {tag}: {head}"), Some(&format!("Reasoning {tag} about the request."))))
    }
}

/// Count requested on the first line of the user message: the number after
/// "at most" when present, otherwise the first number.
fn requested_count(user: &str) -> Option<usize> {
    let first = user.lines().next().unwrap_or("");
    let number = |s: &str| s.split(|c: char| !c.is_ascii_digit()).find_map(|t| t.parse::<usize>().ok());
    match first.find("at most ") {
        Some(i) => number(&first[i..]),
        None => number(first),
    }
}

fn short_hash(text: &str) -> String {
    format!("{:08x}", crate::rng::derive_seed(0, text) as u32)
}
