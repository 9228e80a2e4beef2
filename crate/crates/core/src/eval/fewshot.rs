//! 3-shot prompt rendering.
//!
//! The first three items of a dataset are solved exemplars and never scored.
//! All wording lives in [`FewShotTemplate`] so it can be edited without code
//! changes. Defaults:
//!
//! ```text
//! {instruction}
//!
//! Passage: {context}          (only when the item has one)
//! Question: {question}        ("Text:" for classification, "{source}:" for translation)
//! A. {option}                 (classification lists "Categories: a, b, ...")
//! Answer: {gold}
//!
//! ... two more exemplars, then the target item ending in "Answer:"
//! ```

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalItem, TaskKind};
use crate::prompts::fill;

pub const EXEMPLAR_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FewShotTemplate {
    pub multiple_choice_instruction: String,
    pub classification_instruction: String,
    /// `{source}` and `{target}` are replaced with language names.
    pub translation_instruction: String,
    pub context_label: String,
    pub question_label: String,
    pub text_label: String,
    pub categories_label: String,
    /// `{label}` and `{text}`.
    pub option_format: String,
    pub answer_label: String,
    pub source_language: String,
    pub target_language: String,
}

impl Default for FewShotTemplate {
    fn default() -> Self {
        Self {
            multiple_choice_instruction: "Answer the following multiple-choice questions. \
                Reply with the label of the correct option only."
                .into(),
            classification_instruction: "Classify the topic of each text. \
                Reply with one of the listed categories only."
                .into(),
            translation_instruction: "Translate the following sentences from {source} into {target}. \
                Reply with the translation only."
                .into(),
            context_label: "Passage:".into(),
            question_label: "Question:".into(),
            text_label: "Text:".into(),
            categories_label: "Categories:".into(),
            option_format: "{label}. {text}".into(),
            answer_label: "Answer:".into(),
            source_language: "English".into(),
            target_language: "English".into(),
        }
    }
}

impl FewShotTemplate {
    pub fn with_direction(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_language = source.into();
        self.target_language = target.into();
        self
    }

    fn instruction(&self, kind: TaskKind) -> String {
        match kind {
            TaskKind::MultipleChoice => self.multiple_choice_instruction.clone(),
            TaskKind::Classification => self.classification_instruction.clone(),
            TaskKind::Translation => fill(
                &self.translation_instruction,
                &[("source", &self.source_language), ("target", &self.target_language)],
            ),
        }
    }

    fn render_item(&self, item: &EvalItem, kind: TaskKind, with_gold: bool) -> String {
        let mut lines = Vec::new();
        if let Some(ctx) = &item.context {
            lines.push(format!("{} {}", self.context_label, ctx));
        }
        let label = match kind {
            TaskKind::MultipleChoice => self.question_label.clone(),
            TaskKind::Classification => self.text_label.clone(),
            TaskKind::Translation => format!("{}:", self.source_language),
        };
        lines.push(format!("{label} {}", item.question_or_source));
        if let Some(choices) = &item.choices {
            match kind {
                TaskKind::Classification => {
                    let names: Vec<&str> = choices.iter().map(|c| c.label.as_str()).collect();
                    lines.push(format!("{} {}", self.categories_label, names.join(", ")));
                }
                _ => lines.extend(
                    choices.iter().map(|c| fill(&self.option_format, &[("label", &c.label), ("text", &c.text)])),
                ),
            }
        }
        let answer = match kind {
            TaskKind::Translation => format!("{}:", self.target_language),
            _ => self.answer_label.clone(),
        };
        if with_gold {
            lines.push(format!("{answer} {}", item.gold.text()));
        } else {
            lines.push(answer);
        }
        lines.join("\n")
    }

    pub fn render(&self, exemplars: &[EvalItem], target: &EvalItem, kind: TaskKind) -> String {
        let mut blocks = vec![self.instruction(kind)];
        blocks.extend(exemplars.iter().map(|e| self.render_item(e, kind, true)));
        blocks.push(self.render_item(target, kind, false));
        blocks.join("\n\n")
    }
}

/// One `(item_id, prompt)` per scored item, i.e. `items[3..]`.
pub fn build_prompts(
    items: &[EvalItem],
    template: &FewShotTemplate,
    kind: TaskKind,
) -> Result<Vec<(String, String)>, EvalError> {
    if items.len() <= EXEMPLAR_COUNT {
        return Err(EvalError::TooFewItems(items.len()));
    }
    let (exemplars, scored) = items.split_at(EXEMPLAR_COUNT);
    Ok(scored.iter().map(|item| (item.item_id.clone(), template.render(exemplars, item, kind))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Choice, Gold};

    fn mc(i: usize) -> EvalItem {
        EvalItem {
            item_id: format!("q{i}"),
            context: Some(format!("passage {i}")),
            question_or_source: format!("question {i}?"),
            choices: Some(
                ["A", "B", "C", "D"]
                    .iter()
                    .map(|l| Choice { label: l.to_string(), text: format!("opt{l}{i}") })
                    .collect(),
            ),
            gold: Gold::Label("B".into()),
        }
    }

    #[test]
    fn exemplars_precede_target_without_gold() {
        let items: Vec<_> = (0..10).map(mc).collect();
        let prompts = build_prompts(&items, &FewShotTemplate::default(), TaskKind::MultipleChoice).unwrap();
        assert_eq!(prompts.len(), 7);
        assert_eq!(prompts[0].0, "q3");
        let p = &prompts[0].1;
        let positions: Vec<usize> = (0..4).map(|i| p.find(&format!("question {i}?")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.matches("Answer: B").count(), 3);
        assert!(p.ends_with("D. optD3\nAnswer:"));
    }

    #[test]
    fn too_few_items() {
        let items: Vec<_> = (0..3).map(mc).collect();
        assert!(matches!(
            build_prompts(&items, &FewShotTemplate::default(), TaskKind::MultipleChoice),
            Err(EvalError::TooFewItems(3))
        ));
    }

    #[test]
    fn translation_direction() {
        let item = |i: usize| EvalItem {
            item_id: format!("s{i}"),
            context: None,
            question_or_source: format!("Hello {i}"),
            choices: None,
            gold: Gold::Reference(format!("Halo {i}")),
        };
        let items: Vec<_> = (0..4).map(item).collect();
        let t = FewShotTemplate::default().with_direction("English", "Javanese");
        let prompts = build_prompts(&items, &t, TaskKind::Translation).unwrap();
        let p = &prompts[0].1;
        assert!(p.starts_with("Translate the following sentences from English into Javanese."));
        assert!(p.contains("English: Hello 0\nJavanese: Halo 0"));
        assert!(p.ends_with("English: Hello 3\nJavanese:"));
    }
}
