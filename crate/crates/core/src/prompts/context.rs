use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::json::extract_string_list;
use super::topics::to_records;
use super::{ContextSource, GenerationStats, Generator, Lineage, PromptError, PromptMethod, PromptRecord};
use crate::rng;
use crate::scalar::Scalar;
use crate::tokenize::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextTask {
    Translate,
    Summarize,
    Improve,
    Classify,
    AnswerQuestion,
}

impl ContextTask {
    pub const ALL: [ContextTask; 5] = [
        ContextTask::Translate,
        ContextTask::Summarize,
        ContextTask::Improve,
        ContextTask::Classify,
        ContextTask::AnswerQuestion,
    ];

    /// Completes "ask the AI assistant to ___ the text".
    pub fn verb(self) -> &'static str {
        match self {
            ContextTask::Translate => "translate",
            ContextTask::Summarize => "summarize",
            ContextTask::Improve => "improve",
            ContextTask::Classify => "classify",
            ContextTask::AnswerQuestion => "answer a question about",
        }
    }
}

/// Relative draw weights, in [`ContextTask::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskWeights(pub [u32; 5]);

impl Default for TaskWeights {
    /// Uniform, with question answering weighted four times.
    fn default() -> Self {
        Self([1, 1, 1, 1, 4])
    }
}

impl TaskWeights {
    pub fn probabilities<F: Scalar>(&self) -> [F; 5] {
        let total = F::from_count(self.0.iter().map(|&w| w as u64).sum());
        self.0.map(|w| F::from_count(w as u64) / total)
    }

    pub fn sampler(&self) -> impl Fn(&mut dyn rand::RngCore) -> ContextTask {
        let dist = WeightedIndex::new(self.0).expect("at least one positive weight");
        move |rng: &mut dyn rand::RngCore| ContextTask::ALL[dist.sample(rng)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSampling {
    pub max_documents: usize,
    pub max_tokens: usize,
    pub weights: TaskWeights,
}

impl Default for ContextSampling {
    fn default() -> Self {
        Self { max_documents: 10_000, max_tokens: 1000, weights: TaskWeights::default() }
    }
}

#[derive(Deserialize)]
struct CorpusDoc {
    #[serde(default)]
    id: Option<serde_json::Value>,
    text: String,
    #[serde(default, alias = "lang")]
    language: Option<String>,
}

fn language_matches(doc_language: Option<&str>, code: &str) -> bool {
    match doc_language {
        Some(l) => l == code || l.strip_prefix(code).is_some_and(|rest| rest.starts_with('_')),
        None => false,
    }
}

/// Seeded uniform sample of up to `max_documents` corpus documents in
/// `language_code`, each truncated to its first `max_tokens` tokens and
/// assigned a task by weighted draw.
///
/// The corpus is JSON lines with `text`, `language` and optionally `id`; a
/// document labelled `jav_Latn` matches the code `jav`. Sampled documents
/// keep corpus order.
pub fn sample_context_sources(
    corpus_path: &Path,
    language_code: &str,
    rng_seed: u64,
    sampling: &ContextSampling,
    counter: &dyn TokenCounter,
) -> Result<Vec<ContextSource>, PromptError> {
    let unavailable = |source| PromptError::CorpusUnavailable { path: corpus_path.display().to_string(), source };
    let open = || File::open(corpus_path).map(BufReader::new).map_err(unavailable);

    let mut matching = Vec::new();
    for (line_no, line) in open()?.lines().enumerate() {
        let line = line.map_err(unavailable)?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusDoc>(&line) {
            Ok(doc) if language_matches(doc.language.as_deref(), language_code) && !doc.text.trim().is_empty() => {
                matching.push(line_no)
            }
            Ok(_) => {}
            Err(e) => tracing::warn!(line = line_no + 1, "skipping malformed corpus line: {e}"),
        }
    }
    if matching.is_empty() {
        return Err(PromptError::EmptyCorpus(language_code.to_string()));
    }

    let mut rng = rng::stream(rng_seed, "context-sample");
    let take = matching.len().min(sampling.max_documents);
    let mut chosen: Vec<usize> =
        index::sample(&mut rng, matching.len(), take).into_iter().map(|i| matching[i]).collect();
    chosen.sort_unstable();

    let draw = sampling.weights.sampler();
    let mut task_rng = rng::stream(rng_seed, "context-task");
    let mut out = Vec::with_capacity(chosen.len());
    let mut next = chosen.iter().peekable();
    for (line_no, line) in open()?.lines().enumerate() {
        let Some(&&want) = next.peek() else { break };
        let line = line.map_err(unavailable)?;
        if line_no != want {
            continue;
        }
        next.next();
        let doc: CorpusDoc = serde_json::from_str(&line).expect("validated in first pass");
        let document_id = match doc.id {
            Some(serde_json::Value::String(s)) => s,
            Some(v) => v.to_string(),
            None => format!("line-{}", line_no + 1),
        };
        out.push(ContextSource {
            document_id,
            truncated_text: counter.truncate(doc.text.trim(), sampling.max_tokens).to_string(),
            task: draw(&mut task_rng),
        });
    }
    Ok(out)
}

/// Up to `prompts_per_source` prompts per source; each prompt is prefixed
/// with the source text it was written about.
pub fn generate_context_prompts(
    gen: &Generator<'_>,
    sources: &[ContextSource],
    prompts_per_source: usize,
    stats: &mut GenerationStats,
) -> Result<Vec<PromptRecord>, PromptError> {
    if sources.is_empty() {
        return Ok(Vec::new());
    }
    let system = gen.templates.prompt_system(gen.language);
    let jobs: Vec<(String, String)> = sources
        .iter()
        .map(|s| {
            let user = gen.templates.context_prompt(gen.language, &s.truncated_text, s.task.verb(), prompts_per_source);
            (system.clone(), user)
        })
        .collect();
    let mut step = GenerationStats::default();
    let replies = gen.ask(&jobs, |t| extract_string_list(t, &["prompts"]), &mut step)?;
    if replies.iter().all(Option::is_none) {
        stats.absorb(&step);
        return Err(PromptError::GenerationParse { stage: "context prompts".into() });
    }
    let mut records = to_records(
        sources.iter().map(|s| s.document_id.as_str()),
        replies,
        prompts_per_source,
        |id| Lineage::Context(id.to_string()),
        PromptMethod::Context,
    );
    let texts: std::collections::HashMap<&str, &str> =
        sources.iter().map(|s| (s.document_id.as_str(), s.truncated_text.as_str())).collect();
    for r in &mut records {
        let prefix = texts[r.lineage.id()].to_string();
        r.context_prefix = Some(prefix);
        r.prompt_text = r.with_instruction(&r.prompt_text);
    }
    step.produced = records.len() as u64;
    stats.absorb(&step);
    Ok(records)
}

/// Draws `n` tasks; exposed for distribution checks.
pub fn draw_tasks(weights: &TaskWeights, rng_seed: u64, n: usize) -> Vec<ContextTask> {
    let draw = weights.sampler();
    let mut r = rng::stream(rng_seed, "context-task");
    (0..n).map(|_| draw(&mut r)).collect()
}
