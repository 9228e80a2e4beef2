//! Training-set assembly: budgeted subsets, thinking/standard formatting,
//! export in the conversation format, and the fine-tuning configuration.

mod example;
mod export;
mod format;
mod subset;
mod train_config;

use thiserror::Error;

pub use example::{ConversationExample, Origin, SystemMode, Turn, TurnRole};
pub use export::{
    export_dataset, scan_conditional_traces, ExportOptions, ExportReport, ExportedConversation, TraceScan,
};
pub use format::{attach_system_prompts, FormattedExample, SystemPrompts};
pub use subset::{
    build_subset, candidate_pool, compute_budget, example_tokens, CountingMode, SubsetName, SubsetSpec, TokenBudget,
};
pub use train_config::{emit_training_config, TrainingConfig, TRAINING_DEFAULTS};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("subset {subset} holds {available} tokens, below the cap of {cap}")]
    BudgetInfeasible { subset: String, available: u64, cap: u64 },
    #[error("subset {0} is token-limited but no budget was supplied")]
    MissingBudget(String),
    #[error("nothing to export")]
    EmptyExport,
    #[error("unknown subset {0:?}")]
    UnknownSubset(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl AssemblyError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        AssemblyError::Io { path: path.display().to_string(), source }
    }
}
