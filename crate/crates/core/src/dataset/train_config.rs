use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::export::write_atomic;
use super::AssemblyError;

/// Fine-tuning hyperparameters (LLaMA-Factory key names): one epoch of full
/// fine-tuning with a cosine schedule.
pub const TRAINING_DEFAULTS: &[(&str, &str)] = &[
    ("model_name_or_path", "ibm-granite/granite-4.0-micro"),
    ("stage", "sft"),
    ("do_train", "true"),
    ("finetuning_type", "full"),
    ("deepspeed", "examples/deepspeed/ds_z3_config.json"),
    ("template", "granite4"),
    ("cutoff_len", "8000"),
    ("packing", "true"),
    ("per_device_train_batch_size", "1"),
    ("gradient_accumulation_steps", "1"),
    ("learning_rate", "1.0e-5"),
    ("num_train_epochs", "1.0"),
    ("lr_scheduler_type", "cosine"),
    ("warmup_ratio", "0.05"),
    ("bf16", "true"),
    ("val_size", "0.02"),
    ("per_device_eval_batch_size", "1"),
    ("eval_strategy", "steps"),
    ("eval_steps", "0.2"),
];

/// Keys that bind a config to its dataset rather than tune training.
const BINDING_KEYS: &[&str] = &["dataset", "dataset_dir"];

/// Ordered flat key/value training configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingConfig {
    entries: Vec<(String, String)>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { entries: TRAINING_DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl TrainingConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Replaces `key` in place, or appends it.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value.to_string(),
            None => self.entries.push((key.to_string(), value.to_string())),
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_yaml(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}: {v}");
        }
        out
    }

    /// Reads the flat `key: value` format written by [`TrainingConfig::to_yaml`].
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(':').ok_or_else(|| format!("line {}: expected `key: value`", i + 1))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    /// Fields whose value differs from the defaults, as
    /// `(key, default, current)`; dataset bindings are ignored.
    pub fn diff_from_defaults(&self) -> Vec<(String, Option<String>, Option<String>)> {
        let defaults = TrainingConfig::default();
        let mut keys: Vec<&str> = TRAINING_DEFAULTS.iter().map(|(k, _)| *k).collect();
        keys.extend(self.entries.iter().map(|(k, _)| k.as_str()).filter(|k| defaults.get(k).is_none()));
        keys.into_iter()
            .filter(|k| !BINDING_KEYS.contains(k))
            .filter_map(|k| {
                let (d, c) = (defaults.get(k), self.get(k));
                (d != c).then(|| (k.to_string(), d.map(String::from), c.map(String::from)))
            })
            .collect()
    }
}

/// Writes the training config for `dataset_path` to `out_path`, with
/// `overrides` applied over the defaults. Fails before writing anything if
/// the dataset does not exist.
pub fn emit_training_config(
    dataset_path: &Path,
    overrides: &[(String, String)],
    out_path: &Path,
) -> Result<TrainingConfig, AssemblyError> {
    if !dataset_path.is_file() {
        return Err(AssemblyError::io(
            dataset_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
        ));
    }
    let mut config = TrainingConfig::default();
    let name = dataset_path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    let dir = dataset_path.parent().map(|d| d.display().to_string()).unwrap_or_else(|| ".".into());
    config.set("dataset", name);
    config.set("dataset_dir", if dir.is_empty() { "." } else { &dir });
    for (k, v) in overrides {
        config.set(k, v);
    }
    write_atomic(out_path, config.to_yaml().as_bytes())?;
    Ok(config)
}
