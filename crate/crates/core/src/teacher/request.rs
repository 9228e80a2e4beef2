use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// One chat-completion call. Field order is the cache key's serialization
/// order, so do not reorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Sampling seed. Also used to obtain a fresh cache entry when a
    /// response has to be re-requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition_penalty: Option<f64>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<Message>, temperature: f64) -> Self {
        Self { model: model.into(), messages, temperature, max_tokens: None, seed: None, repetition_penalty: None }
    }

    /// System message followed by one user turn.
    pub fn single_turn(
        model: impl Into<String>,
        system: impl Into<String>,
        user: impl Into<String>,
        temperature: f64,
    ) -> Self {
        Self::new(model, vec![Message::system(system), Message::user(user)], temperature)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.messages.is_empty() {
            return Err("messages must not be empty".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be finite and >= 0, got {}", self.temperature));
        }
        if self.max_tokens == Some(0) {
            return Err("max_tokens must be positive".into());
        }
        let rest = match self.messages[0].role {
            Role::System => &self.messages[1..],
            _ => &self.messages[..],
        };
        for (i, m) in rest.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if m.role != expected {
                return Err(format!(
                    "message {} has role {:?}, expected {:?}",
                    i + self.messages.len() - rest.len(),
                    m.role,
                    expected
                ));
            }
        }
        Ok(())
    }

    /// Request body in the chat-completions wire schema.
    pub fn to_wire(&self) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
        });
        let obj = body.as_object_mut().unwrap();
        if let Some(n) = self.max_tokens {
            obj.insert("max_tokens".into(), json!(n));
        }
        if let Some(s) = self.seed {
            obj.insert("seed".into(), json!(s));
        }
        if let Some(p) = self.repetition_penalty {
            obj.insert("repetition_penalty".into(), json!(p));
        }
        body
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub final_text: String,
    pub reasoning_text: String,
    pub usage: Usage,
    /// Response body as received.
    pub raw_payload: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = ChatRequest::single_turn("m", "sys", "hi", 0.7);
        assert!(ok.validate().is_ok());

        let empty = ChatRequest::new("m", vec![], 0.0);
        assert!(empty.validate().is_err());

        let late_system = ChatRequest::new("m", vec![Message::user("a"), Message::system("b")], 0.0);
        assert!(late_system.validate().is_err());

        let two_users = ChatRequest::new("m", vec![Message::user("a"), Message::user("b")], 0.0);
        assert!(two_users.validate().is_err());

        let multi = ChatRequest::new("m", vec![Message::user("a"), Message::assistant("b"), Message::user("c")], 0.0);
        assert!(multi.validate().is_ok());

        let mut neg = ok.clone();
        neg.temperature = -1.0;
        assert!(neg.validate().is_err());
    }

    #[test]
    fn wire_omits_unset_options() {
        let req = ChatRequest::single_turn("m", "s", "u", 0.0);
        let wire = req.to_wire();
        assert!(wire.get("seed").is_none());
        assert!(wire.get("repetition_penalty").is_none());
        let mut req = req;
        req.repetition_penalty = Some(1.0);
        assert_eq!(req.to_wire()["repetition_penalty"], json!(1.0));
        assert_eq!(req.to_wire()["messages"][0]["role"], json!("system"));
    }
}
