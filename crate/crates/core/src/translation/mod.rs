//! Translation of an English instruction corpus into the target language,
//! with format validation and length-ratio filtering.

pub mod serial;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ConversationExample, Turn, TurnRole};
use crate::prompts::Generator;
use crate::scalar::Scalar;
use crate::teacher::{ChatRequest, ReasoningMarkers, TeacherError};
use crate::tokenize::TokenCounter;
use serial::{parse_records, render_records, Record};

#[derive(Debug, Error)]
pub enum TranslationError {
    #[error("teacher failure: {0}")]
    Teacher(#[from] TeacherError),
    #[error("corpus unavailable at {path}: {source}")]
    CorpusUnavailable { path: String, source: std::io::Error },
}

/// One turn in the source corpus vocabulary (`from` is `human` or `gpt`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTurn {
    pub from: String,
    pub value: String,
}

impl SourceTurn {
    pub fn role(&self) -> Option<TurnRole> {
        match self.from.as_str() {
            "human" | "user" => Some(TurnRole::User),
            "gpt" | "assistant" => Some(TurnRole::Assistant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConversation {
    pub conversation_id: String,
    pub turns: Vec<SourceTurn>,
    pub source_language: String,
}

impl SourceConversation {
    pub fn validate(&self) -> Result<(), String> {
        if self.turns.is_empty() {
            return Err("no turns".into());
        }
        for (i, t) in self.turns.iter().enumerate() {
            let expected = if i % 2 == 0 { TurnRole::User } else { TurnRole::Assistant };
            if t.role() != Some(expected) {
                return Err(format!("turn {i} has role {:?}", t.from));
            }
            if t.value.trim().is_empty() {
                return Err(format!("turn {i} is empty"));
            }
        }
        Ok(())
    }

    pub fn records(&self) -> Vec<Record> {
        self.turns
            .iter()
            .map(|t| vec![("from".to_string(), t.from.clone()), ("value".to_string(), t.value.clone())])
            .collect()
    }

    pub fn token_count(&self, counter: &dyn TokenCounter) -> usize {
        self.turns.iter().map(|t| counter.count(&t.value)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatedConversation<F> {
    pub conversation_id: String,
    pub turns: Vec<SourceTurn>,
    /// Translated tokens over source tokens, summed over all turns.
    pub token_ratio: F,
}

impl<F> TranslatedConversation<F> {
    pub fn into_example(self) -> ConversationExample {
        let turns = self
            .turns
            .into_iter()
            .map(|t| Turn { role: t.role().expect("validated role"), content: t.value })
            .collect();
        ConversationExample::translated(self.conversation_id, turns)
    }
}

/// Accepted range of translated/source token ratios, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds<F> {
    pub min: F,
    pub max: F,
}

impl<F: Scalar> Default for RatioBounds<F> {
    fn default() -> Self {
        Self { min: F::lit(0.75), max: F::lit(25.0) }
    }
}

impl<F: Scalar> RatioBounds<F> {
    pub fn contains(&self, ratio: F) -> bool {
        ratio >= self.min && ratio <= self.max
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub rows: u64,
    pub non_english: u64,
    pub invalid: u64,
    pub loaded: u64,
}

#[derive(Deserialize)]
struct CorpusRow {
    #[serde(default)]
    id: Option<serde_json::Value>,
    #[serde(default, alias = "langdetect", alias = "lang")]
    language: Option<String>,
    #[serde(default)]
    conversations: Vec<SourceTurn>,
}

pub fn is_english(code: &str) -> bool {
    let c = code.trim().to_ascii_lowercase();
    c == "en" || c == "english" || c.starts_with("en-") || c.starts_with("en_")
}

/// The first `limit` valid English conversations, in corpus order.
///
/// The corpus is JSON lines with `id`, `language` (or `langdetect`) and
/// `conversations: [{from, value}, ...]`. Rows whose turns do not alternate
/// human/gpt, have empty turns, or already contain `markers` are skipped and
/// counted as invalid.
pub fn load_source(
    corpus_path: &Path,
    limit: usize,
    english: &dyn Fn(&str) -> bool,
    markers: &ReasoningMarkers,
) -> Result<(Vec<SourceConversation>, LoadStats), TranslationError> {
    let unavailable = |source| TranslationError::CorpusUnavailable { path: corpus_path.display().to_string(), source };
    let reader = BufReader::new(File::open(corpus_path).map_err(unavailable)?);
    let mut stats = LoadStats::default();
    let mut out = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        if out.len() >= limit {
            break;
        }
        let line = line.map_err(unavailable)?;
        if line.trim().is_empty() {
            continue;
        }
        stats.rows += 1;
        let row: CorpusRow = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(line = line_no + 1, "malformed corpus row: {e}");
                stats.invalid += 1;
                continue;
            }
        };
        let language = row.language.unwrap_or_default();
        if !english(&language) {
            stats.non_english += 1;
            continue;
        }
        let conversation = SourceConversation {
            conversation_id: match row.id {
                Some(serde_json::Value::String(s)) => s,
                Some(v) => v.to_string(),
                None => format!("row-{}", line_no + 1),
            },
            turns: row.conversations,
            source_language: language,
        };
        let contaminated = conversation.turns.iter().any(|t| markers.appear_in(&t.value));
        if contaminated || conversation.validate().is_err() {
            stats.invalid += 1;
            continue;
        }
        out.push(conversation);
    }
    stats.loaded = out.len() as u64;
    Ok((out, stats))
}

/// Why a translation was not usable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TranslationFailure {
    Parse(String),
    Transport(String),
}

/// Checks a teacher reply against its source and computes the token ratio.
pub fn parse_translation<F: Scalar>(
    source: &SourceConversation,
    reply: &str,
    counter: &dyn TokenCounter,
    markers: &ReasoningMarkers,
) -> Result<TranslatedConversation<F>, String> {
    let records = parse_records(reply).map_err(|e| e.to_string())?;
    if records.len() != source.turns.len() {
        return Err(format!("expected {} turns, got {}", source.turns.len(), records.len()));
    }
    let mut turns = Vec::with_capacity(records.len());
    for (i, (record, src)) in records.into_iter().zip(&source.turns).enumerate() {
        let mut from = None;
        let mut value = None;
        for (k, v) in record {
            match k.as_str() {
                "from" if from.is_none() => from = Some(v),
                "value" if value.is_none() => value = Some(v),
                other => return Err(format!("turn {i}: unexpected key {other:?}")),
            }
        }
        let (Some(from), Some(value)) = (from, value) else {
            return Err(format!("turn {i}: missing key"));
        };
        if from != src.from {
            return Err(format!("turn {i}: role {from:?} does not match {:?}", src.from));
        }
        if value.trim().is_empty() {
            return Err(format!("turn {i}: empty translation"));
        }
        if markers.appear_in(&value) {
            return Err(format!("turn {i}: contains reasoning delimiters"));
        }
        turns.push(SourceTurn { from, value });
    }
    let translated: usize = turns.iter().map(|t| counter.count(&t.value)).sum();
    let source_tokens = source.token_count(counter);
    let token_ratio = if source_tokens == 0 {
        F::infinity()
    } else {
        F::from_count(translated as u64) / F::from_count(source_tokens as u64)
    };
    Ok(TranslatedConversation { conversation_id: source.conversation_id.clone(), turns, token_ratio })
}

/// Result of translating a batch, before ratio filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationOutcome<F> {
    pub candidates: Vec<TranslatedConversation<F>>,
    pub parse_failures: Vec<String>,
    pub transport_drops: Vec<String>,
}

impl<F> TranslationOutcome<F> {
    pub fn attempted(&self) -> usize {
        self.candidates.len() + self.parse_failures.len() + self.transport_drops.len()
    }
}

/// One teacher call per conversation, sent as a Python-literal list of dicts
/// under the translation system message. Replies that are not a list of the
/// same length with the same roles are parse failures.
pub fn translate_conversations<F: Scalar>(
    gen: &Generator<'_>,
    sources: &[SourceConversation],
    counter: &dyn TokenCounter,
) -> Result<TranslationOutcome<F>, TranslationError> {
    let system = gen.templates.translation_system(gen.language);
    let requests: Vec<ChatRequest> = sources
        .iter()
        .map(|s| {
            ChatRequest::single_turn(
                &gen.settings.model,
                &system,
                render_records(&s.records()),
                gen.settings.temperature,
            )
        })
        .collect();
    let results = gen.client.complete_batch(&requests, gen.settings.max_in_flight);
    let markers = gen.client.markers();
    let mut outcome =
        TranslationOutcome { candidates: Vec::new(), parse_failures: Vec::new(), transport_drops: Vec::new() };
    for (source, result) in sources.iter().zip(results) {
        match result {
            Ok(resp) => match parse_translation(source, &resp.final_text, counter, markers) {
                Ok(t) => outcome.candidates.push(t),
                Err(reason) => {
                    tracing::debug!(id = %source.conversation_id, "translation rejected: {reason}");
                    outcome.parse_failures.push(source.conversation_id.clone());
                }
            },
            Err(e) if e.is_systemic() => return Err(e.into()),
            Err(e) => {
                tracing::warn!(id = %source.conversation_id, "translation request failed: {e}");
                outcome.transport_drops.push(source.conversation_id.clone());
            }
        }
    }
    Ok(outcome)
}

/// Keeps candidates whose ratio lies within `bounds`, in order.
pub fn filter_by_ratio<F: Scalar>(
    candidates: Vec<TranslatedConversation<F>>,
    bounds: &RatioBounds<F>,
) -> Vec<TranslatedConversation<F>> {
    candidates.into_iter().filter(|c| bounds.contains(c.token_ratio)).collect()
}
