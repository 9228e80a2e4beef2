use serde::{Deserialize, Serialize};

use crate::prompts::PromptMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnRole {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: TurnRole,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Generated,
    Translated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemMode {
    Thinking,
    Standard,
}

/// One training conversation.
///
/// Generated examples are single-turn, may carry the teacher's reasoning
/// trace and always train in thinking mode. Translated examples never carry
/// a trace and train in standard mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationExample {
    pub source_id: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_trace: Option<String>,
    pub origin: Origin,
    pub system_mode: SystemMode,
    /// Prompt family of generated examples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<PromptMethod>,
}

impl ConversationExample {
    pub fn generated(
        source_id: impl Into<String>,
        method: PromptMethod,
        prompt: impl Into<String>,
        answer: impl Into<String>,
        reasoning: Option<String>,
    ) -> Self {
        Self {
            source_id: source_id.into(),
            turns: vec![
                Turn { role: TurnRole::User, content: prompt.into() },
                Turn { role: TurnRole::Assistant, content: answer.into() },
            ],
            reasoning_trace: reasoning.filter(|r| !r.is_empty()),
            origin: Origin::Generated,
            system_mode: SystemMode::Thinking,
            method: Some(method),
        }
    }

    pub fn translated(source_id: impl Into<String>, turns: Vec<Turn>) -> Self {
        Self {
            source_id: source_id.into(),
            turns,
            reasoning_trace: None,
            origin: Origin::Translated,
            system_mode: SystemMode::Standard,
            method: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.turns.is_empty() {
            return Err(format!("{}: no turns", self.source_id));
        }
        for (i, t) in self.turns.iter().enumerate() {
            let expected = if i % 2 == 0 { TurnRole::User } else { TurnRole::Assistant };
            if t.role != expected {
                return Err(format!("{}: turn {i} should be {expected:?}", self.source_id));
            }
        }
        match (self.origin, self.system_mode) {
            (Origin::Generated, SystemMode::Thinking) => Ok(()),
            (Origin::Translated, SystemMode::Standard) if self.reasoning_trace.is_none() => Ok(()),
            (Origin::Translated, SystemMode::Standard) => {
                Err(format!("{}: translated example carries a reasoning trace", self.source_id))
            }
            (o, m) => Err(format!("{}: origin {o:?} cannot use system mode {m:?}", self.source_id)),
        }
    }

    /// Final assistant turn.
    pub fn answer(&self) -> Option<&str> {
        self.turns.iter().rev().find(|t| t.role == TurnRole::Assistant).map(|t| t.content.as_str())
    }

    pub fn without_reasoning(mut self) -> Self {
        self.reasoning_trace = None;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_satisfy_invariants() {
        let g = ConversationExample::generated("p1", PromptMethod::Topic, "q", "a", Some("r".into()));
        assert!(g.validate().is_ok());
        assert_eq!(g.answer(), Some("a"));
        let empty_trace = ConversationExample::generated("p2", PromptMethod::Topic, "q", "a", Some(String::new()));
        assert_eq!(empty_trace.reasoning_trace, None);

        let t = ConversationExample::translated(
            "c1",
            vec![
                Turn { role: TurnRole::User, content: "q".into() },
                Turn { role: TurnRole::Assistant, content: "a".into() },
            ],
        );
        assert!(t.validate().is_ok());
    }

    #[test]
    fn violations_detected() {
        let mut t = ConversationExample::translated("c", vec![Turn { role: TurnRole::User, content: "q".into() }]);
        t.reasoning_trace = Some("r".into());
        assert!(t.validate().is_err());
        let mut g = ConversationExample::generated("p", PromptMethod::Topic, "q", "a", None);
        g.system_mode = SystemMode::Standard;
        assert!(g.validate().is_err());
        g.system_mode = SystemMode::Thinking;
        g.turns.swap(0, 1);
        assert!(g.validate().is_err());
    }
}
