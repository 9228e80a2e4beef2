//! Greedy 3-shot evaluation against a chat endpoint.

use serde::{Deserialize, Serialize};

use super::chrf::{corpus_chrf, ChrfParams};
use super::EXEMPLAR_COUNT;
use super::{build_prompts, parse_choice, ChoiceParse, EvalError, EvalItem, EvalTask, FewShotTemplate, Gold};
use crate::teacher::{ChatRequest, TeacherClient};

pub const EVAL_TEMPERATURE: f64 = 0.0;
pub const EVAL_REPETITION_PENALTY: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub model: String,
    /// Non-thinking system prompt.
    pub system_prompt: String,
    pub template: FewShotTemplate,
    pub chrf: ChrfParams<f64>,
    pub max_in_flight: usize,
    /// Drop failed requests from the denominator instead of counting them wrong.
    pub exclude_failed: bool,
}

impl EvalSettings {
    pub fn new(model: impl Into<String>, system_prompt: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            system_prompt: system_prompt.into(),
            template: FewShotTemplate::default(),
            chrf: ChrfParams::default(),
            max_in_flight: 8,
            exclude_failed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub item_id: String,
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub scored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: EvalTask,
    pub model: String,
    pub temperature: f64,
    pub repetition_penalty: f64,
    pub exemplar_ids: Vec<String>,
    pub scored: usize,
    pub failed: usize,
    pub unparseable: usize,
    pub correct: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chrf: Option<f64>,
    pub predictions: Vec<Prediction>,
}

pub fn run_eval(
    client: &TeacherClient,
    task: &EvalTask,
    items: &[EvalItem],
    settings: &EvalSettings,
) -> Result<EvalReport, EvalError> {
    for (i, item) in items.iter().enumerate() {
        item.validate(task.task_kind).map_err(|message| EvalError::Schema { line: i + 1, message })?;
    }
    let prompts = build_prompts(items, &settings.template, task.task_kind)?;
    let requests: Vec<ChatRequest> = prompts
        .iter()
        .map(|(_, prompt)| {
            let mut r = ChatRequest::single_turn(&settings.model, &settings.system_prompt, prompt, EVAL_TEMPERATURE);
            r.repetition_penalty = Some(EVAL_REPETITION_PENALTY);
            r
        })
        .collect();
    let replies = client.complete_batch(&requests, settings.max_in_flight);

    let scored_items = &items[EXEMPLAR_COUNT..];
    let mut predictions = Vec::with_capacity(replies.len());
    let (mut failed, mut unparseable, mut correct) = (0, 0, 0);
    let mut hypotheses = Vec::new();
    let mut references = Vec::new();
    for (item, reply) in scored_items.iter().zip(replies) {
        let output = match reply {
            Ok(r) => Some(r.final_text.trim().to_string()),
            Err(e) if e.is_systemic() => return Err(e.into()),
            Err(e) => {
                failed += 1;
                let scored = !settings.exclude_failed;
                predictions.push(Prediction {
                    item_id: item.item_id.clone(),
                    output: None,
                    parsed_label: None,
                    correct: scored.then_some(false),
                    error: Some(e.to_string()),
                    scored,
                });
                if scored {
                    if let Gold::Reference(reference) = &item.gold {
                        hypotheses.push(String::new());
                        references.push(vec![reference.clone()]);
                    }
                }
                continue;
            }
        };
        let text = output.clone().unwrap_or_default();
        let mut prediction = Prediction {
            item_id: item.item_id.clone(),
            output,
            parsed_label: None,
            correct: None,
            error: None,
            scored: true,
        };
        match &item.gold {
            Gold::Label(gold) => {
                let choices = item.choices.as_deref().unwrap_or_default();
                let hit = match parse_choice(&text, choices) {
                    ChoiceParse::Label(label) => {
                        let hit = &label == gold;
                        prediction.parsed_label = Some(label);
                        hit
                    }
                    ChoiceParse::Unparseable => {
                        unparseable += 1;
                        false
                    }
                };
                correct += usize::from(hit);
                prediction.correct = Some(hit);
            }
            Gold::Reference(reference) => {
                hypotheses.push(text);
                references.push(vec![reference.clone()]);
            }
        }
        predictions.push(prediction);
    }

    let scored = predictions.iter().filter(|p| p.scored).count();
    if scored == 0 {
        return Err(EvalError::EmptyScoredSet);
    }
    let (accuracy, chrf) = if task.task_kind.is_choice() {
        (Some(correct as f64 / scored as f64), None)
    } else {
        (None, Some(corpus_chrf(&hypotheses, &references, &settings.chrf)))
    };
    Ok(EvalReport {
        task: task.clone(),
        model: settings.model.clone(),
        temperature: EVAL_TEMPERATURE,
        repetition_penalty: EVAL_REPETITION_PENALTY,
        exemplar_ids: items[..EXEMPLAR_COUNT].iter().map(|i| i.item_id.clone()).collect(),
        scored,
        failed,
        unparseable,
        correct,
        accuracy,
        chrf,
        predictions,
    })
}
