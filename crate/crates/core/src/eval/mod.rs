//! Few-shot evaluation: benchmark loading, 3-shot prompting with greedy
//! decoding, accuracy for choice tasks and chrF++ for translation.

mod choice;
pub mod chrf;
mod fewshot;
mod load;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::teacher::TeacherError;

pub use choice::{parse_choice, ChoiceParse};
pub use fewshot::{build_prompts, FewShotTemplate, EXEMPLAR_COUNT};
pub use load::{load_benchmark, SIB200_LABELS};
pub use run::{run_eval, EvalReport, EvalSettings, Prediction};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("benchmark data unavailable: {0}")]
    DataUnavailable(String),
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("need more than {EXEMPLAR_COUNT} items, got {0}")]
    TooFewItems(usize),
    #[error("no items left to score")]
    EmptyScoredSet,
    #[error("teacher failure: {0}")]
    Teacher(#[from] TeacherError),
    #[error("unknown benchmark {0:?}")]
    UnknownBenchmark(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Belebele,
    GlobalMmlu,
    Sib200,
    FloresXxEn,
    FloresEnXx,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] =
        [Benchmark::Belebele, Benchmark::GlobalMmlu, Benchmark::Sib200, Benchmark::FloresXxEn, Benchmark::FloresEnXx];

    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::Belebele => "belebele",
            Benchmark::GlobalMmlu => "global_mmlu",
            Benchmark::Sib200 => "sib200",
            Benchmark::FloresXxEn => "flores_xx_en",
            Benchmark::FloresEnXx => "flores_en_xx",
        }
    }

    pub fn task_kind(self) -> TaskKind {
        match self {
            Benchmark::Belebele | Benchmark::GlobalMmlu => TaskKind::MultipleChoice,
            Benchmark::Sib200 => TaskKind::Classification,
            Benchmark::FloresXxEn | Benchmark::FloresEnXx => TaskKind::Translation,
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL.into_iter().find(|b| b.as_str() == s).ok_or_else(|| EvalError::UnknownBenchmark(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    MultipleChoice,
    Classification,
    Translation,
}

impl TaskKind {
    pub fn is_choice(self) -> bool {
        !matches!(self, TaskKind::Translation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTask {
    pub benchmark: Benchmark,
    pub language_code: String,
    pub task_kind: TaskKind,
}

impl EvalTask {
    pub fn new(benchmark: Benchmark, language_code: impl Into<String>) -> Self {
        Self { benchmark, language_code: language_code.into(), task_kind: benchmark.task_kind() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub label: String,
    pub text: String,
}

/// Choice label for choice tasks, reference text for translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gold {
    Label(String),
    Reference(String),
}

impl Gold {
    pub fn text(&self) -> &str {
        match self {
            Gold::Label(s) | Gold::Reference(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub question_or_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<Choice>>,
    pub gold: Gold,
}

impl EvalItem {
    pub fn validate(&self, kind: TaskKind) -> Result<(), String> {
        match (kind, &self.choices, &self.gold) {
            (TaskKind::Translation, _, Gold::Reference(_)) => Ok(()),
            (TaskKind::Translation, _, _) => Err("translation item needs a reference".into()),
            (_, Some(choices), Gold::Label(l)) if choices.iter().any(|c| &c.label == l) => Ok(()),
            (_, Some(_), Gold::Label(l)) => Err(format!("gold label {l:?} is not among the choices")),
            _ => Err("choice item needs choices and a gold label".into()),
        }
    }
}
