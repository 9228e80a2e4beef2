use serde::{Deserialize, Serialize};

use super::{ConversationExample, Origin, SystemMode, Turn, TurnRole};
use crate::prompts::Templates;
use crate::teacher::ReasoningMarkers;

/// The two system messages of the training data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemPrompts {
    pub thinking: String,
    pub standard: String,
}

impl SystemPrompts {
    pub fn for_language(templates: &Templates, language: &str) -> Self {
        Self { thinking: templates.thinking_system(language), standard: templates.response_system(language) }
    }

    pub fn get(&self, mode: SystemMode) -> &str {
        match mode {
            SystemMode::Thinking => &self.thinking,
            SystemMode::Standard => &self.standard,
        }
    }
}

/// An example ready to be written: system message plus final turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormattedExample {
    pub source_id: String,
    pub origin: Origin,
    pub system: String,
    pub turns: Vec<Turn>,
}

/// Generated examples get the thinking-mode message and their answer
/// rewritten as `<think>\ntrace\n</think>\n\nanswer` (an empty block when
/// there is no trace); translated examples get the standard message and are
/// otherwise untouched.
pub fn attach_system_prompts(
    examples: &[ConversationExample],
    prompts: &SystemPrompts,
    delimiters: &ReasoningMarkers,
) -> Vec<FormattedExample> {
    examples
        .iter()
        .map(|ex| {
            let mut turns = ex.turns.clone();
            if ex.system_mode == SystemMode::Thinking {
                let trace = ex.reasoning_trace.as_deref().unwrap_or("");
                if let Some(last) = turns.iter_mut().rev().find(|t| t.role == TurnRole::Assistant) {
                    last.content = format!("{}\n{trace}\n{}\n\n{}", delimiters.open, delimiters.close, last.content);
                }
            }
            FormattedExample {
                source_id: ex.source_id.clone(),
                origin: ex.origin,
                system: prompts.get(ex.system_mode).to_string(),
                turns,
            }
        })
        .collect()
}
