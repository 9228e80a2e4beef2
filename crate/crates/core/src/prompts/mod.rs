//! Synthetic prompt generation: topic-, scenario- and context-based prompts
//! and their revision.

mod context;
pub mod json;
mod revision;
mod scenarios;
pub mod templates;
mod topics;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::teacher::{ChatRequest, TeacherClient, TeacherError};

pub use context::{
    draw_tasks, generate_context_prompts, sample_context_sources, ContextSampling, ContextTask, TaskWeights,
};
pub use revision::{revise_prompts, revision_selection};
pub use scenarios::{expand_scenarios, generate_scenario_prompts, ScenarioCounts};
pub use templates::{fill, Templates};
pub use topics::{expand_topics, generate_topic_prompts, TopicCounts};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("teacher failure: {0}")]
    Teacher(#[from] TeacherError),
    #[error("no parseable output for any {stage} request")]
    GenerationParse { stage: String },
    #[error("corpus unavailable at {path}: {source}")]
    CorpusUnavailable { path: String, source: std::io::Error },
    #[error("corpus has no documents for language {0}")]
    EmptyCorpus(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicLevel {
    Seed,
    MacroTopic,
    Topic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicNode {
    pub id: String,
    pub text: String,
    pub level: TopicLevel,
    pub parent: Option<String>,
    pub language_specific: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioLevel {
    Broad,
    Detailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioNode {
    pub id: String,
    pub text: String,
    pub level: ScenarioLevel,
    pub parent: Option<String>,
    pub language_informed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSource {
    pub document_id: String,
    pub truncated_text: String,
    pub task: ContextTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMethod {
    Topic,
    Scenario,
    Context,
}

impl PromptMethod {
    pub const ALL: [PromptMethod; 3] = [PromptMethod::Topic, PromptMethod::Scenario, PromptMethod::Context];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMethod::Topic => "topic",
            PromptMethod::Scenario => "scenario",
            PromptMethod::Context => "context",
        }
    }
}

impl fmt::Display for PromptMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a prompt was generated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Lineage {
    Topic(String),
    Scenario(String),
    Context(String),
}

impl Lineage {
    pub fn id(&self) -> &str {
        match self {
            Lineage::Topic(id) | Lineage::Scenario(id) | Lineage::Context(id) => id,
        }
    }
}

/// Separator between a context prompt's source text and its instruction.
pub const CONTEXT_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub prompt_text: String,
    pub method: PromptMethod,
    pub lineage: Lineage,
    pub revised: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_prefix: Option<String>,
}

impl PromptRecord {
    /// The generated instruction without any prepended context.
    pub fn instruction(&self) -> &str {
        match &self.context_prefix {
            Some(prefix) => self
                .prompt_text
                .strip_prefix(prefix.as_str())
                .map(|rest| rest.strip_prefix(CONTEXT_SEPARATOR).unwrap_or(rest))
                .unwrap_or(&self.prompt_text),
            None => &self.prompt_text,
        }
    }

    /// Replaces the instruction, keeping any context prefix in front.
    pub fn with_instruction(&self, instruction: &str) -> String {
        match &self.context_prefix {
            Some(prefix) => format!("{prefix}{CONTEXT_SEPARATOR}{instruction}"),
            None => instruction.to_string(),
        }
    }
}

/// Drops exact duplicate prompt texts within each method, keeping the first.
pub fn dedup_prompts(records: Vec<PromptRecord>) -> Vec<PromptRecord> {
    let mut seen: HashSet<(PromptMethod, String)> = HashSet::new();
    records.into_iter().filter(|r| seen.insert((r.method, r.prompt_text.clone()))).collect()
}

/// Request accounting for one generation step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub requests: u64,
    pub parse_failures: u64,
    pub transport_failures: u64,
    pub produced: u64,
}

impl GenerationStats {
    pub fn absorb(&mut self, other: &GenerationStats) {
        self.requests += other.requests;
        self.parse_failures += other.parse_failures;
        self.transport_failures += other.transport_failures;
        self.produced += other.produced;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSettings {
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    /// Attempts per request before its output is declared unparseable.
    pub parse_attempts: u32,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self { model: "openai/gpt-oss-120b".into(), temperature: 1.0, max_in_flight: 16, parse_attempts: 2 }
    }
}

/// Everything a generation step needs to talk to the teacher.
#[derive(Clone, Copy)]
pub struct Generator<'a> {
    pub client: &'a TeacherClient,
    pub templates: &'a Templates,
    pub settings: &'a GenerationSettings,
    pub language: &'a str,
}

impl<'a> Generator<'a> {
    /// Sends `(system, user)` jobs and parses each reply with `parse`.
    /// Unparseable replies are re-requested under a fresh sampling seed up
    /// to `parse_attempts` times; slots still failing come back `None`.
    pub(crate) fn ask<T, P>(
        &self,
        jobs: &[(String, String)],
        parse: P,
        stats: &mut GenerationStats,
    ) -> Result<Vec<Option<T>>, PromptError>
    where
        P: Fn(&str) -> Option<T>,
    {
        let mut out: Vec<Option<T>> = jobs.iter().map(|_| None).collect();
        let mut pending: Vec<usize> = (0..jobs.len()).collect();
        stats.requests += jobs.len() as u64;
        let attempts = self.settings.parse_attempts.max(1);
        for attempt in 0..attempts {
            if pending.is_empty() {
                break;
            }
            let seed = (attempt > 0).then_some(attempt as u64);
            let requests: Vec<ChatRequest> = pending
                .iter()
                .map(|&i| {
                    let (system, user) = &jobs[i];
                    ChatRequest::single_turn(&self.settings.model, system, user, self.settings.temperature)
                        .with_seed(seed)
                })
                .collect();
            let results = self.client.complete_batch(&requests, self.settings.max_in_flight);
            let mut retry = Vec::new();
            for (&i, result) in pending.iter().zip(results) {
                match result {
                    Ok(resp) => match parse(&resp.final_text) {
                        Some(v) => out[i] = Some(v),
                        None if attempt + 1 < attempts => retry.push(i),
                        None => stats.parse_failures += 1,
                    },
                    Err(e) if e.is_systemic() => return Err(e.into()),
                    Err(e) => {
                        tracing::warn!("teacher request failed: {e}");
                        stats.transport_failures += 1;
                    }
                }
            }
            pending = retry;
        }
        Ok(out)
    }
}
