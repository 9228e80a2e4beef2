use serde_json::Value;

/// Delimiters of an inline reasoning block, for endpoints that do not return
/// reasoning in a separate field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningMarkers {
    pub open: String,
    pub close: String,
}

impl Default for ReasoningMarkers {
    fn default() -> Self {
        Self { open: "<think>".into(), close: "</think>".into() }
    }
}

impl ReasoningMarkers {
    pub fn appear_in(&self, text: &str) -> bool {
        text.contains(&self.open) || text.contains(&self.close)
    }
}

/// Splits a chat-completion message into `(final_text, reasoning_text)`.
///
/// Precedence: a dedicated reasoning field (`reasoning_content`, then
/// `reasoning`); else a leading block delimited by `markers`; else no
/// reasoning. A close marker without an opening one is treated as the end of
/// a leading block whose opener the server template already consumed.
pub(crate) fn split_reasoning(message: &Value, markers: &ReasoningMarkers) -> (String, String) {
    let content = message.get("content").and_then(Value::as_str).unwrap_or("");
    let field = ["reasoning_content", "reasoning"]
        .iter()
        .find_map(|k| message.get(*k).and_then(Value::as_str))
        .filter(|s| !s.trim().is_empty());

    let (inline_reasoning, answer) = split_inline(content, markers);
    let reasoning = match field {
        Some(r) => r.trim().to_string(),
        None => inline_reasoning.unwrap_or_default(),
    };
    (answer, reasoning)
}

fn split_inline(content: &str, markers: &ReasoningMarkers) -> (Option<String>, String) {
    let trimmed = content.trim_start();
    if let Some(after_open) = trimmed.strip_prefix(markers.open.as_str()) {
        if let Some(end) = after_open.find(&markers.close) {
            let reasoning = after_open[..end].trim().to_string();
            let answer = after_open[end + markers.close.len()..].trim().to_string();
            return (Some(reasoning), answer);
        }
    } else if !trimmed.contains(&markers.open) {
        if let Some(end) = trimmed.find(&markers.close) {
            let reasoning = trimmed[..end].trim().to_string();
            let answer = trimmed[end + markers.close.len()..].trim().to_string();
            return (Some(reasoning), answer);
        }
    }
    (None, content.trim().to_string())
}
