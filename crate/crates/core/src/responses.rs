//! Response generation: one teacher answer per prompt, keeping the teacher's
//! reasoning trace alongside the answer.

use serde::{Deserialize, Serialize};

use crate::dataset::ConversationExample;
use crate::prompts::{Generator, PromptRecord};
use crate::teacher::{ChatRequest, ChatResponse, TeacherError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseStats {
    pub prompts: u64,
    pub produced: u64,
    pub dropped_empty: u64,
    pub dropped_error: u64,
    pub with_reasoning: u64,
}

impl ResponseStats {
    pub fn dropped(&self) -> u64 {
        self.dropped_empty + self.dropped_error
    }
}

/// Outcome of one request: usable, worth one retry, or dead.
enum Verdict {
    Keep(ChatResponse),
    Empty,
    Failed,
}

/// Answers every prompt under the response system message.
///
/// An empty answer, or one that still contains reasoning delimiters, is
/// re-requested once with a fresh sampling seed and dropped if it fails
/// again. Non-systemic transport failures drop the prompt; authentication
/// failures abort.
pub fn generate_responses(
    gen: &Generator<'_>,
    prompts: &[PromptRecord],
) -> Result<(Vec<ConversationExample>, ResponseStats), TeacherError> {
    let system = gen.templates.response_system(gen.language);
    let markers = gen.client.markers();
    let request = |p: &PromptRecord, seed: Option<u64>| {
        ChatRequest::single_turn(&gen.settings.model, &system, &p.prompt_text, gen.settings.temperature).with_seed(seed)
    };
    let judge = |result: Result<ChatResponse, TeacherError>| -> Result<Verdict, TeacherError> {
        match result {
            Ok(r) if r.final_text.trim().is_empty() || markers.appear_in(&r.final_text) => Ok(Verdict::Empty),
            Ok(r) => Ok(Verdict::Keep(r)),
            Err(e) if e.is_systemic() => Err(e),
            Err(e) => {
                tracing::warn!("response request failed: {e}");
                Ok(Verdict::Failed)
            }
        }
    };

    let first: Vec<ChatRequest> = prompts.iter().map(|p| request(p, None)).collect();
    let mut verdicts = Vec::with_capacity(prompts.len());
    for result in gen.client.complete_batch(&first, gen.settings.max_in_flight) {
        verdicts.push(judge(result)?);
    }

    let retry_idx: Vec<usize> =
        verdicts.iter().enumerate().filter(|(_, v)| matches!(v, Verdict::Empty)).map(|(i, _)| i).collect();
    let retries: Vec<ChatRequest> = retry_idx.iter().map(|&i| request(&prompts[i], Some(1))).collect();
    for (&i, result) in retry_idx.iter().zip(gen.client.complete_batch(&retries, gen.settings.max_in_flight)) {
        verdicts[i] = judge(result)?;
    }

    let mut stats = ResponseStats { prompts: prompts.len() as u64, ..Default::default() };
    let mut out = Vec::with_capacity(prompts.len());
    for (p, verdict) in prompts.iter().zip(verdicts) {
        match verdict {
            Verdict::Keep(r) => {
                let reasoning = Some(r.reasoning_text).filter(|t| !t.trim().is_empty());
                stats.with_reasoning += reasoning.is_some() as u64;
                out.push(ConversationExample::generated(&p.id, p.method, &p.prompt_text, r.final_text, reasoning));
            }
            Verdict::Empty => stats.dropped_empty += 1,
            Verdict::Failed => stats.dropped_error += 1,
        }
    }
    stats.produced = out.len() as u64;
    Ok((out, stats))
}
