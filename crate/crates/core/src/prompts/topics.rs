use serde::{Deserialize, Serialize};

use super::json::extract_string_list;
use super::{GenerationStats, Generator, Lineage, PromptError, PromptMethod, PromptRecord, TopicLevel, TopicNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCounts {
    pub macro_topics_per_seed: usize,
    pub topics_per_macro: usize,
    pub prompts_per_topic: usize,
    /// Lower bound stated in the prompt template.
    pub min_prompts_per_topic: usize,
}

impl Default for TopicCounts {
    fn default() -> Self {
        Self { macro_topics_per_seed: 20, topics_per_macro: 10, prompts_per_topic: 3, min_prompts_per_topic: 1 }
    }
}

const LIST_KEYS: &[&str] = &["topics", "prompts"];

/// Seeds, their macro-topics and those macro-topics' topics, as one pool.
///
/// Each parent gets one request for its configured number of children;
/// shorter lists are accepted and longer ones truncated.
pub fn expand_topics(
    gen: &Generator<'_>,
    counts: &TopicCounts,
    stats: &mut GenerationStats,
) -> Result<Vec<TopicNode>, PromptError> {
    let seeds: Vec<TopicNode> = gen
        .templates
        .seeds(gen.language)
        .into_iter()
        .enumerate()
        .map(|(i, (text, language_specific))| TopicNode {
            id: format!("seed-{i:02}"),
            text,
            level: TopicLevel::Seed,
            parent: None,
            language_specific,
        })
        .collect();

    let macros = expand_level(gen, &seeds, TopicLevel::MacroTopic, counts.macro_topics_per_seed, stats)?;
    let topics = expand_level(gen, &macros, TopicLevel::Topic, counts.topics_per_macro, stats)?;

    let mut pool = seeds;
    pool.extend(macros);
    pool.extend(topics);
    Ok(pool)
}

fn expand_level(
    gen: &Generator<'_>,
    parents: &[TopicNode],
    level: TopicLevel,
    per_parent: usize,
    stats: &mut GenerationStats,
) -> Result<Vec<TopicNode>, PromptError> {
    if parents.is_empty() || per_parent == 0 {
        return Ok(Vec::new());
    }
    let system = gen.templates.topic_system(gen.language);
    let jobs: Vec<(String, String)> = parents
        .iter()
        .map(|p| (system.clone(), gen.templates.topic_generation(gen.language, &p.text, per_parent)))
        .collect();
    let mut step = GenerationStats::default();
    let replies = gen.ask(&jobs, |t| extract_string_list(t, LIST_KEYS), &mut step)?;
    if replies.iter().all(Option::is_none) {
        stats.absorb(&step);
        return Err(PromptError::GenerationParse { stage: format!("{level:?}") });
    }
    let mut out = Vec::new();
    for (parent, reply) in parents.iter().zip(replies) {
        for (k, text) in reply.unwrap_or_default().into_iter().take(per_parent).enumerate() {
            out.push(TopicNode {
                id: format!("{}.{k:02}", parent.id.replace("seed-", "topic-")),
                text,
                level,
                parent: Some(parent.id.clone()),
                language_specific: parent.language_specific,
            });
        }
    }
    step.produced = out.len() as u64;
    stats.absorb(&step);
    Ok(out)
}

/// Up to `prompts_per_topic` prompts for every node of the pool.
pub fn generate_topic_prompts(
    gen: &Generator<'_>,
    pool: &[TopicNode],
    counts: &TopicCounts,
    stats: &mut GenerationStats,
) -> Result<Vec<PromptRecord>, PromptError> {
    let system = gen.templates.prompt_system(gen.language);
    let jobs: Vec<(String, String)> = pool
        .iter()
        .map(|node| {
            let user = gen.templates.topic_prompt(
                gen.language,
                &node.text,
                counts.min_prompts_per_topic,
                counts.prompts_per_topic,
            );
            (system.clone(), user)
        })
        .collect();
    let mut step = GenerationStats::default();
    let replies = gen.ask(&jobs, |t| extract_string_list(t, &["prompts"]), &mut step)?;
    if !pool.is_empty() && replies.iter().all(Option::is_none) {
        stats.absorb(&step);
        return Err(PromptError::GenerationParse { stage: "topic prompts".into() });
    }
    let records = to_records(
        pool.iter().map(|n| n.id.as_str()),
        replies,
        counts.prompts_per_topic,
        |id| Lineage::Topic(id.to_string()),
        PromptMethod::Topic,
    );
    step.produced = records.len() as u64;
    stats.absorb(&step);
    Ok(records)
}

pub(crate) fn to_records<'a>(
    ids: impl Iterator<Item = &'a str>,
    replies: Vec<Option<Vec<String>>>,
    cap: usize,
    lineage: impl Fn(&str) -> Lineage,
    method: PromptMethod,
) -> Vec<PromptRecord> {
    let mut out = Vec::new();
    for (id, reply) in ids.zip(replies) {
        for (k, text) in reply.unwrap_or_default().into_iter().take(cap).enumerate() {
            out.push(PromptRecord {
                id: format!("{method}:{id}:{k}"),
                prompt_text: text,
                method,
                lineage: lineage(id),
                revised: false,
                context_prefix: None,
            });
        }
    }
    out
}
