use serde::{Deserialize, Serialize};

use super::json::extract_string_list;
use super::topics::to_records;
use super::{
    GenerationStats, Generator, Lineage, PromptError, PromptMethod, PromptRecord, ScenarioLevel, ScenarioNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCounts {
    pub broad: usize,
    pub detailed_per_broad: usize,
    pub prompts_per_scenario: usize,
}

impl Default for ScenarioCounts {
    fn default() -> Self {
        Self { broad: 30, detailed_per_broad: 30, prompts_per_scenario: 5 }
    }
}

const LIST_KEYS: &[&str] = &["scenarios", "prompts"];

/// Broad scenarios generated once with and once without the target language
/// in the instructions, plus detailed scenarios for each broad one. Broad
/// scenarios that coincide across the two settings are both kept.
pub fn expand_scenarios(
    gen: &Generator<'_>,
    counts: &ScenarioCounts,
    stats: &mut GenerationStats,
) -> Result<Vec<ScenarioNode>, PromptError> {
    let system = gen.templates.scenario_system(gen.language);
    let settings = [true, false];
    let jobs: Vec<(String, String)> = settings
        .iter()
        .map(|&informed| (system.clone(), gen.templates.general_scenarios(gen.language, counts.broad, informed)))
        .collect();
    let mut step = GenerationStats::default();
    let replies = gen.ask(&jobs, |t| extract_string_list(t, LIST_KEYS), &mut step)?;
    if replies.iter().all(Option::is_none) {
        stats.absorb(&step);
        return Err(PromptError::GenerationParse { stage: "broad scenarios".into() });
    }
    let mut broad = Vec::new();
    for (&informed, reply) in settings.iter().zip(replies) {
        let tag = if informed { "i" } else { "a" };
        for (k, text) in reply.unwrap_or_default().into_iter().take(counts.broad).enumerate() {
            broad.push(ScenarioNode {
                id: format!("broad-{tag}{k:02}"),
                text,
                level: ScenarioLevel::Broad,
                parent: None,
                language_informed: informed,
            });
        }
    }

    let mut detailed = Vec::new();
    if counts.detailed_per_broad > 0 && !broad.is_empty() {
        let jobs: Vec<(String, String)> = broad
            .iter()
            .map(|b| {
                let user = gen.templates.specific_scenarios(
                    gen.language,
                    &b.text,
                    counts.detailed_per_broad,
                    b.language_informed,
                );
                (system.clone(), user)
            })
            .collect();
        let replies = gen.ask(&jobs, |t| extract_string_list(t, LIST_KEYS), &mut step)?;
        for (parent, reply) in broad.iter().zip(replies) {
            for (k, text) in reply.unwrap_or_default().into_iter().take(counts.detailed_per_broad).enumerate() {
                detailed.push(ScenarioNode {
                    id: format!("{}.{k:02}", parent.id.replace("broad-", "scen-")),
                    text,
                    level: ScenarioLevel::Detailed,
                    parent: Some(parent.id.clone()),
                    language_informed: parent.language_informed,
                });
            }
        }
    }

    step.produced = (broad.len() + detailed.len()) as u64;
    stats.absorb(&step);
    broad.extend(detailed);
    Ok(broad)
}

/// Up to `prompts_per_scenario` prompts for every scenario of the pool.
pub fn generate_scenario_prompts(
    gen: &Generator<'_>,
    pool: &[ScenarioNode],
    counts: &ScenarioCounts,
    stats: &mut GenerationStats,
) -> Result<Vec<PromptRecord>, PromptError> {
    if pool.is_empty() {
        return Ok(Vec::new());
    }
    let system = gen.templates.prompt_system(gen.language);
    let jobs: Vec<(String, String)> = pool
        .iter()
        .map(|s| (system.clone(), gen.templates.scenario_prompt(gen.language, &s.text, counts.prompts_per_scenario)))
        .collect();
    let mut step = GenerationStats::default();
    let replies = gen.ask(&jobs, |t| extract_string_list(t, &["prompts"]), &mut step)?;
    if replies.iter().all(Option::is_none) {
        stats.absorb(&step);
        return Err(PromptError::GenerationParse { stage: "scenario prompts".into() });
    }
    let records = to_records(
        pool.iter().map(|n| n.id.as_str()),
        replies,
        counts.prompts_per_scenario,
        |id| Lineage::Scenario(id.to_string()),
        PromptMethod::Scenario,
    );
    step.produced = records.len() as u64;
    stats.absorb(&step);
    Ok(records)
}
