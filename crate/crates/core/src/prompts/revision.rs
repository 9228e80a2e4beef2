use std::collections::BTreeMap;

use rand::seq::index;

use super::json::extract_string_field;
use super::{GenerationStats, Generator, PromptError, PromptMethod, PromptRecord};
use crate::rng;

/// Indices selected for revision: `floor(n/2)` per method, drawn uniformly
/// from a seeded stream per method. Returned sorted.
pub fn revision_selection(records: &[PromptRecord], rng_seed: u64) -> Vec<usize> {
    let mut by_method: BTreeMap<PromptMethod, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_method.entry(r.method).or_default().push(i);
    }
    let mut selected = Vec::new();
    for (method, members) in by_method {
        let mut rng = rng::stream(rng_seed, &format!("revision-{method}"));
        let picks = index::sample(&mut rng, members.len(), members.len() / 2);
        selected.extend(picks.into_iter().map(|k| members[k]));
    }
    selected.sort_unstable();
    selected
}

/// Asks the teacher to improve half of each method's prompts, in place.
/// A reply without an `improved_prompt` string leaves the original
/// untouched and unflagged. Context prompts are revised without their
/// source text, which is re-attached afterwards.
pub fn revise_prompts(
    gen: &Generator<'_>,
    records: Vec<PromptRecord>,
    rng_seed: u64,
    stats: &mut GenerationStats,
) -> Result<Vec<PromptRecord>, PromptError> {
    let selected = revision_selection(&records, rng_seed);
    let system = gen.templates.revision_system(gen.language);
    let jobs: Vec<(String, String)> =
        selected.iter().map(|&i| (system.clone(), records[i].instruction().to_string())).collect();
    let mut step = GenerationStats::default();
    let replies = gen.ask(&jobs, |t| extract_string_field(t, "improved_prompt"), &mut step)?;

    let mut records = records;
    for (&i, reply) in selected.iter().zip(replies) {
        if let Some(improved) = reply {
            let r = &mut records[i];
            r.prompt_text = r.with_instruction(&improved);
            r.revised = true;
            step.produced += 1;
        }
    }
    stats.absorb(&step);
    Ok(records)
}
