//! Flat key-value run configuration (TOML), with defaults equal to the
//! generation constants the pipeline is specified against.
//!
//! ```toml
//! language_name = "Javanese"
//! language_code = "jav"
//! endpoint = "https://api.example.com/v1"   # or "mock"
//! rng_seed = 7
//! context_corpus = "data/web.jsonl"
//! translation_corpus = "data/chat.jsonl"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompts::{ContextSampling, GenerationSettings, ScenarioCounts, TaskWeights, TopicCounts};
use crate::translation::RatioBounds;

/// Endpoint value selecting the built-in deterministic teacher.
pub const MOCK_ENDPOINT: &str = "mock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub language_name: String,
    /// Corpus language code used to select context documents, e.g. `jav`.
    pub language_code: String,
    pub endpoint: String,
    pub completions_path: String,
    pub api_key_env: String,
    pub model: String,
    pub temperature: f64,
    pub request_timeout_secs: u64,
    pub max_attempts: u32,
    pub max_in_flight: usize,
    pub rng_seed: u64,

    pub run_topics: bool,
    pub run_scenarios: bool,
    pub run_contexts: bool,
    pub run_revision: bool,
    pub run_translation: bool,

    pub macro_topics_per_seed: usize,
    pub topics_per_macro: usize,
    pub prompts_per_topic: usize,
    pub min_prompts_per_topic: usize,
    pub broad_scenarios: usize,
    pub detailed_per_broad: usize,
    pub prompts_per_scenario: usize,
    pub max_context_documents: usize,
    pub context_max_tokens: usize,
    pub prompts_per_context: usize,
    pub context_task_weights: [u32; 5],
    pub translation_limit: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,

    pub token_counter: String,
    pub context_corpus: Option<PathBuf>,
    pub translation_corpus: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Defaults to `{out_dir}/cache`.
    pub cache_dir: Option<PathBuf>,
    /// Serve every teacher call from the cache; a miss is an error.
    pub cache_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let topics = TopicCounts::default();
        let scenarios = ScenarioCounts::default();
        let context = ContextSampling::default();
        let generation = GenerationSettings::default();
        let bounds = RatioBounds::<f64>::default();
        Self {
            language_name: String::new(),
            language_code: String::new(),
            endpoint: MOCK_ENDPOINT.into(),
            completions_path: "/chat/completions".into(),
            api_key_env: "TEACHER_API_KEY".into(),
            model: generation.model,
            temperature: generation.temperature,
            request_timeout_secs: 600,
            max_attempts: 3,
            max_in_flight: generation.max_in_flight,
            rng_seed: 0,
            run_topics: true,
            run_scenarios: true,
            run_contexts: true,
            run_revision: true,
            run_translation: true,
            macro_topics_per_seed: topics.macro_topics_per_seed,
            topics_per_macro: topics.topics_per_macro,
            prompts_per_topic: topics.prompts_per_topic,
            min_prompts_per_topic: topics.min_prompts_per_topic,
            broad_scenarios: scenarios.broad,
            detailed_per_broad: scenarios.detailed_per_broad,
            prompts_per_scenario: scenarios.prompts_per_scenario,
            max_context_documents: context.max_documents,
            context_max_tokens: context.max_tokens,
            prompts_per_context: 3,
            context_task_weights: context.weights.0,
            translation_limit: 15_000,
            ratio_min: bounds.min,
            ratio_max: bounds.max,
            token_counter: "word-punct".into(),
            context_corpus: None,
            translation_corpus: None,
            templates_dir: None,
            out_dir: PathBuf::from("out"),
            cache_dir: None,
            cache_only: false,
        }
    }
}

/// A count or bound that differs from its default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub key: String,
    pub default: String,
    pub value: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Keys that change how a run executes but not what it produces.
const OPERATIONAL_KEYS: [&str; 6] =
    ["out_dir", "cache_dir", "max_in_flight", "request_timeout_secs", "cache_only", "api_key_env"];

/// Keys compared against their defaults for the manifest.
const TRACKED_KEYS: [&str; 16] = [
    "macro_topics_per_seed",
    "topics_per_macro",
    "prompts_per_topic",
    "min_prompts_per_topic",
    "broad_scenarios",
    "detailed_per_broad",
    "prompts_per_scenario",
    "max_context_documents",
    "context_max_tokens",
    "prompts_per_context",
    "context_task_weights",
    "translation_limit",
    "ratio_min",
    "ratio_max",
    "model",
    "temperature",
];

impl PipelineConfig {
    pub fn for_language(name: impl Into<String>) -> Self {
        Self { language_name: name.into(), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.language_name.trim().is_empty() {
            return invalid("language_name is required");
        }
        if self.max_in_flight == 0 {
            return invalid("max_in_flight must be at least 1");
        }
        if self.max_attempts == 0 {
            return invalid("max_attempts must be at least 1");
        }
        if self.min_prompts_per_topic > self.prompts_per_topic {
            return invalid("min_prompts_per_topic exceeds prompts_per_topic");
        }
        if !(self.ratio_min.is_finite() && self.ratio_min >= 0.0 && self.ratio_min <= self.ratio_max) {
            return invalid("ratio bounds must satisfy 0 <= ratio_min <= ratio_max");
        }
        if self.context_task_weights.iter().all(|&w| w == 0) {
            return invalid("context_task_weights needs a positive weight");
        }
        if crate::tokenize::counter_by_name(&self.token_counter).is_none() {
            return Err(ConfigError::Invalid(format!("unknown token_counter {:?}", self.token_counter)));
        }
        Ok(())
    }

    fn as_map(&self) -> serde_json::Map<String, serde_json::Value> {
        match serde_json::to_value(self).expect("config serializes") {
            serde_json::Value::Object(map) => map,
            _ => unreachable!("config is a struct"),
        }
    }

    /// sha256 over every key that can change the outputs. Stable across key
    /// order because the map is sorted.
    pub fn hash(&self) -> String {
        let mut map = self.as_map();
        for key in OPERATIONAL_KEYS {
            map.remove(key);
        }
        let sorted: std::collections::BTreeMap<_, _> = map.into_iter().collect();
        hex::encode(Sha256::digest(serde_json::to_vec(&sorted).expect("config serializes")))
    }

    pub fn deviations(&self) -> Vec<Deviation> {
        let ours = self.as_map();
        let defaults = Self::default().as_map();
        TRACKED_KEYS
            .iter()
            .filter(|k| ours[**k] != defaults[**k])
            .map(|k| Deviation { key: k.to_string(), default: defaults[*k].to_string(), value: ours[*k].to_string() })
            .collect()
    }

    pub fn topic_counts(&self) -> TopicCounts {
        TopicCounts {
            macro_topics_per_seed: self.macro_topics_per_seed,
            topics_per_macro: self.topics_per_macro,
            prompts_per_topic: self.prompts_per_topic,
            min_prompts_per_topic: self.min_prompts_per_topic,
        }
    }

    pub fn scenario_counts(&self) -> ScenarioCounts {
        ScenarioCounts {
            broad: self.broad_scenarios,
            detailed_per_broad: self.detailed_per_broad,
            prompts_per_scenario: self.prompts_per_scenario,
        }
    }

    pub fn context_sampling(&self) -> ContextSampling {
        ContextSampling {
            max_documents: self.max_context_documents,
            max_tokens: self.context_max_tokens,
            weights: TaskWeights(self.context_task_weights),
        }
    }

    pub fn generation_settings(&self) -> GenerationSettings {
        GenerationSettings {
            model: self.model.clone(),
            temperature: self.temperature,
            max_in_flight: self.max_in_flight,
            ..GenerationSettings::default()
        }
    }

    pub fn ratio_bounds(&self) -> RatioBounds<f64> {
        RatioBounds { min: self.ratio_min, max: self.ratio_max }
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache")).join("teacher.jsonl")
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.out_dir.join("checkpoints")
    }

    pub fn datasets_dir(&self) -> PathBuf {
        self.out_dir.join("datasets")
    }

    pub fn configs_dir(&self) -> PathBuf {
        self.out_dir.join("configs")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_generation_constants() {
        let c = PipelineConfig::for_language("Javanese");
        let counts = [
            c.macro_topics_per_seed,
            c.topics_per_macro,
            c.prompts_per_topic,
            c.broad_scenarios,
            c.detailed_per_broad,
            c.prompts_per_scenario,
            c.max_context_documents,
            c.context_max_tokens,
            c.prompts_per_context,
            c.translation_limit,
        ];
        assert_eq!(counts, [20, 10, 3, 30, 30, 5, 10000, 1000, 3, 15000]);
        assert_eq!((c.ratio_min, c.ratio_max), (0.75, 25.0));
        assert!(c.deviations().is_empty());
        c.validate().unwrap();
    }

    #[test]
    fn toml_overrides_and_deviations() {
        let c =
            PipelineConfig::from_toml("language_name = \"Tatar\"\ntopics_per_macro = 4\nout_dir = \"x\"\n").unwrap();
        assert_eq!(c.topics_per_macro, 4);
        let d = c.deviations();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].key.as_str(), d[0].default.as_str(), d[0].value.as_str()), ("topics_per_macro", "10", "4"));
        assert!(PipelineConfig::from_toml("language_nme = \"x\"").is_err());
    }

    #[test]
    fn hash_ignores_operational_keys() {
        let a = PipelineConfig::for_language("Tatar");
        let b = PipelineConfig { out_dir: "elsewhere".into(), max_in_flight: 2, ..a.clone() };
        let c = PipelineConfig { rng_seed: 1, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn missing_language_is_invalid() {
        assert!(PipelineConfig::default().validate().is_err());
    }
}
