//! Pulling structured output out of free-form model replies.

use regex::Regex;
use serde_json::Value;
use std::sync::OnceLock;

fn fence_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[ \t]*(?:json|JSON)?[ \t]*\r?\n?(.*?)```").unwrap())
}

/// The last fenced block that parses as JSON; failing that, the whole reply,
/// then the outermost `{...}` span.
pub fn extract_json(text: &str) -> Option<Value> {
    let blocks: Vec<&str> = fence_regex().captures_iter(text).filter_map(|c| c.get(1).map(|m| m.as_str())).collect();
    for block in blocks.iter().rev() {
        if let Ok(v) = serde_json::from_str(block.trim()) {
            return Some(v);
        }
    }
    if let Ok(v) = serde_json::from_str(text.trim()) {
        return Some(v);
    }
    let (start, end) = (text.find('{')?, text.rfind('}')?);
    if start < end {
        serde_json::from_str(&text[start..=end]).ok()
    } else {
        None
    }
}

/// Non-empty strings of the first of `keys` holding an array. `Some(vec![])`
/// for a well-formed empty list, `None` when no such array exists.
pub fn extract_string_list(text: &str, keys: &[&str]) -> Option<Vec<String>> {
    let value = extract_json(text)?;
    let array = keys.iter().find_map(|k| value.get(*k).and_then(Value::as_array))?;
    Some(array.iter().filter_map(Value::as_str).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
}

pub fn extract_string_field(text: &str, key: &str) -> Option<String> {
    let value = extract_json(text)?;
    value.get(key).and_then(Value::as_str).map(str::trim).filter(|s| !s.is_empty()).map(String::from)
}
