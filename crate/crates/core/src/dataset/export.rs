use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::format::{attach_system_prompts, SystemPrompts};
use super::{example_tokens, AssemblyError, ConversationExample, Origin, TurnRole};
use crate::rng;
use crate::teacher::ReasoningMarkers;
use crate::tokenize::TokenCounter;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedMessage {
    pub from: String,
    pub value: String,
}

/// One record of the exported file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedConversation {
    pub system: String,
    pub conversations: Vec<ExportedMessage>,
}

pub struct ExportOptions<'a> {
    pub prompts: &'a SystemPrompts,
    pub delimiters: &'a ReasoningMarkers,
    pub counter: &'a dyn TokenCounter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportReport {
    pub path: PathBuf,
    pub records: u64,
    pub generated: u64,
    pub translated: u64,
    pub with_reasoning: u64,
    /// Turn tokens, excluding reasoning traces.
    pub content_tokens: u64,
    pub reasoning_tokens: u64,
    /// SHA-256 of the written file.
    pub content_hash: String,
}

/// Shuffles `examples` (seeded), formats them and writes a JSON array of
/// `{system, conversations: [{from: human|gpt, value}]}` records.
pub fn export_dataset(
    examples: &[ConversationExample],
    out_path: &Path,
    rng_seed: u64,
    options: &ExportOptions<'_>,
) -> Result<ExportReport, AssemblyError> {
    if examples.is_empty() {
        return Err(AssemblyError::EmptyExport);
    }
    let mut order: Vec<&ConversationExample> = examples.iter().collect();
    order.shuffle(&mut rng::stream(rng_seed, "export"));
    let order: Vec<ConversationExample> = order.into_iter().cloned().collect();

    let formatted = attach_system_prompts(&order, options.prompts, options.delimiters);
    let records: Vec<ExportedConversation> = formatted
        .into_iter()
        .map(|f| ExportedConversation {
            system: f.system,
            conversations: f
                .turns
                .into_iter()
                .map(|t| ExportedMessage {
                    from: match t.role {
                        TurnRole::User => "human".into(),
                        TurnRole::Assistant => "gpt".into(),
                    },
                    value: t.content,
                })
                .collect(),
        })
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&records).expect("records serialize");
    bytes.push(b'\n');
    write_atomic(out_path, &bytes)?;

    let content_tokens = order.iter().map(|e| example_tokens(e, false, options.counter)).sum();
    let reasoning_tokens =
        order.iter().filter_map(|e| e.reasoning_trace.as_deref()).map(|r| options.counter.count(r) as u64).sum();
    Ok(ExportReport {
        path: out_path.to_path_buf(),
        records: order.len() as u64,
        generated: order.iter().filter(|e| e.origin == Origin::Generated).count() as u64,
        translated: order.iter().filter(|e| e.origin == Origin::Translated).count() as u64,
        with_reasoning: order.iter().filter(|e| e.reasoning_trace.is_some()).count() as u64,
        content_tokens,
        reasoning_tokens,
        content_hash: hex::encode(Sha256::digest(&bytes)),
    })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AssemblyError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AssemblyError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| AssemblyError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AssemblyError::io(path, e))
}

/// Result of checking an exported file for the conditional-trace property.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceScan {
    pub records: u64,
    pub thinking_records: u64,
    pub with_delimiters: u64,
    /// Indices where delimiter presence and the thinking message disagree.
    pub violations: Vec<usize>,
}

/// Scans every record of an exported file: delimiters must appear in a
/// record's turns exactly when its system message is `thinking_system`.
pub fn scan_conditional_traces(
    path: &Path,
    thinking_system: &str,
    delimiters: &ReasoningMarkers,
) -> Result<TraceScan, AssemblyError> {
    let bytes = fs::read(path).map_err(|e| AssemblyError::io(path, e))?;
    let records: Vec<ExportedConversation> = serde_json::from_slice(&bytes)
        .map_err(|e| AssemblyError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    let mut scan = TraceScan { records: records.len() as u64, ..Default::default() };
    for (i, r) in records.iter().enumerate() {
        let thinking = r.system == thinking_system;
        let has = r.conversations.iter().any(|m| delimiters.appear_in(&m.value));
        scan.thinking_records += thinking as u64;
        scan.with_delimiters += has as u64;
        if thinking != has {
            scan.violations.push(i);
        }
    }
    Ok(scan)
}
