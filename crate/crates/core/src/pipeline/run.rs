use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tracing::info;

use super::checkpoint::{read_jsonl, write_jsonl, CheckpointError, Checkpoints};
use super::config::{ConfigError, PipelineConfig, MOCK_ENDPOINT};
use super::manifest::{CacheStats, RunManifest, Stage, StageRecord, StageStatus, SubsetRecord};
use crate::dataset::{
    build_subset, compute_budget, emit_training_config, example_tokens, export_dataset, scan_conditional_traces,
    AssemblyError, ConversationExample, ExportOptions, SubsetName, SubsetSpec, SystemPrompts,
};
use crate::prompts::{
    dedup_prompts, expand_scenarios, expand_topics, generate_context_prompts, generate_scenario_prompts,
    generate_topic_prompts, revise_prompts, sample_context_sources, ContextSource, GenerationSettings, GenerationStats,
    Generator, PromptError, PromptRecord, ScenarioLevel, ScenarioNode, Templates, TopicLevel, TopicNode,
};
use crate::responses::generate_responses;
use crate::teacher::mock::MockTeacher;
use crate::teacher::{HttpTransport, ResponseCache, RetryPolicy, TeacherClient, TeacherError};
use crate::tokenize::{counter_by_name, TokenCounter};
use crate::translation::{filter_by_ratio, is_english, load_source, translate_conversations, TranslationError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoints in {dir} belong to config {found}, this run is {expected}; use a fresh --out")]
    ConfigMismatch { dir: String, expected: String, found: String },
    #[error("stage {0} has no checkpoint; run `generate` first")]
    MissingCheckpoint(Stage),
    #[error("cannot open teacher cache {path}: {source}")]
    Cache { path: String, source: std::io::Error },
    #[error("cannot read templates from {path}: {source}")]
    Templates { path: String, source: std::io::Error },
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    fn stage(stage: Stage) -> impl FnOnce(String) -> Self {
        move |message| PipelineError::Stage { stage, message }
    }
}

impl From<(Stage, PromptError)> for PipelineError {
    fn from((stage, e): (Stage, PromptError)) -> Self {
        PipelineError::Stage { stage, message: e.to_string() }
    }
}

/// What `run_stages` does with one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlannedAction {
    Run,
    Resume,
    Skip(String),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Return after this stage completes, leaving later stages for a resume.
    pub stop_after: Option<Stage>,
    /// Restrict assembly and export to these subsets.
    pub subsets: Option<Vec<SubsetName>>,
    /// Training config overrides applied to every emitted config.
    pub train_overrides: Vec<(String, String)>,
}

const TOPIC_POOL: &str = "topic_pool.jsonl";
const TOPIC_PROMPTS: &str = "topic_prompts.jsonl";
const SCENARIO_POOL: &str = "scenario_pool.jsonl";
const SCENARIO_PROMPTS: &str = "scenario_prompts.jsonl";
const CONTEXT_SOURCES: &str = "context_sources.jsonl";
const CONTEXT_PROMPTS: &str = "context_prompts.jsonl";
const PROMPTS: &str = "prompts.jsonl";
const GENERATED: &str = "generated.jsonl";
const TRANSLATED: &str = "translated.jsonl";

/// One pipeline run over an output directory.
pub struct Pipeline {
    config: PipelineConfig,
    templates: Templates,
    client: TeacherClient,
    counter: Box<dyn TokenCounter>,
    checkpoints: Checkpoints,
    manifest: RunManifest,
}

fn build_client(config: &PipelineConfig) -> Result<TeacherClient, PipelineError> {
    let path = config.cache_path();
    let cache = ResponseCache::open(&path)
        .map_err(|source| PipelineError::Cache { path: path.display().to_string(), source })?;
    let retry = RetryPolicy { max_attempts: config.max_attempts, ..RetryPolicy::default() };
    Ok(if config.cache_only {
        TeacherClient::cache_only(cache)
    } else if config.endpoint == MOCK_ENDPOINT {
        TeacherClient::new(Arc::new(MockTeacher::new())).with_cache(cache).with_retry(RetryPolicy::immediate(1))
    } else {
        let transport = HttpTransport::new(
            &config.endpoint,
            &config.completions_path,
            &config.api_key_env,
            Duration::from_secs(config.request_timeout_secs),
        );
        TeacherClient::new(Arc::new(transport)).with_cache(cache).with_retry(retry)
    })
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let client = build_client(&config)?;
        Self::with_client(config, client)
    }

    /// Uses `client` as the teacher instead of the configured endpoint.
    pub fn with_client(config: PipelineConfig, client: TeacherClient) -> Result<Self, PipelineError> {
        config.validate()?;
        let templates = match &config.templates_dir {
            Some(dir) => Templates::load_dir(dir)
                .map_err(|source| PipelineError::Templates { path: dir.display().to_string(), source })?,
            None => Templates::default(),
        };
        let counter = counter_by_name(&config.token_counter).expect("validated");
        let checkpoints = Checkpoints::new(config.checkpoint_dir());
        let mut manifest = RunManifest::new(&config);
        if let Ok(previous) = RunManifest::load(&config.manifest_path()) {
            if previous.config_hash == manifest.config_hash {
                manifest.stages = previous.stages;
                manifest.subsets = previous.subsets;
                manifest.token_budget = previous.token_budget;
            }
        }
        Ok(Self { config, templates, client, counter, checkpoints, manifest })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn client(&self) -> &TeacherClient {
        &self.client
    }

    pub fn plan(&self, stages: &[Stage]) -> Result<Vec<(Stage, PlannedAction)>, PipelineError> {
        let c = &self.config;
        stages
            .iter()
            .map(|&stage| {
                let skip = match stage {
                    Stage::Topics if !c.run_topics => Some("disabled"),
                    Stage::Scenarios if !c.run_scenarios => Some("disabled"),
                    Stage::Contexts if !c.run_contexts => Some("disabled"),
                    Stage::Contexts if c.context_corpus.is_none() => Some("no context corpus configured"),
                    Stage::Contexts if c.language_code.is_empty() => Some("no language code configured"),
                    Stage::Translation if !c.run_translation => Some("disabled"),
                    Stage::Translation if c.translation_corpus.is_none() => Some("no translation corpus configured"),
                    _ => None,
                };
                let action = match skip {
                    Some(reason) => PlannedAction::Skip(reason.into()),
                    None if Stage::GENERATION.contains(&stage) && self.checkpoints.completed(stage)?.is_some() => {
                        PlannedAction::Resume
                    }
                    None => PlannedAction::Run,
                };
                Ok((stage, action))
            })
            .collect()
    }

    /// Runs `stages` in order, resuming generation stages that already have
    /// a completion marker. The manifest is rewritten after every stage.
    pub fn run_stages(&mut self, stages: &[Stage], options: &RunOptions) -> Result<RunManifest, PipelineError> {
        self.claim_checkpoints()?;
        for (stage, action) in self.plan(stages)? {
            let started = Instant::now();
            let record = match action {
                PlannedAction::Resume => {
                    let mut r = self.checkpoints.completed(stage)?.expect("planned as resumable");
                    r.resumed = true;
                    info!(%stage, "resumed from checkpoint");
                    r
                }
                PlannedAction::Skip(reason) => {
                    info!(%stage, %reason, "skipped");
                    self.skip(stage, reason)?
                }
                PlannedAction::Run => {
                    self.checkpoints.clear(stage)?;
                    let mut r = self.execute(stage, options)?;
                    r.seconds = started.elapsed().as_secs_f64();
                    info!(%stage, input = r.input, output = r.output, dropped = r.dropped, "completed");
                    r
                }
            };
            self.checkpoints.mark(&record)?;
            self.manifest.record(record);
            self.save_manifest()?;
            if options.stop_after == Some(stage) {
                break;
            }
        }
        Ok(self.manifest.clone())
    }

    fn claim_checkpoints(&self) -> Result<(), PipelineError> {
        let expected = self.manifest.config_hash.clone();
        match self.checkpoints.config_hash()? {
            Some(found) if found != expected => Err(PipelineError::ConfigMismatch {
                dir: self.checkpoints.dir().display().to_string(),
                expected,
                found,
            }),
            Some(_) => Ok(()),
            None => Ok(self.checkpoints.set_config_hash(&expected)?),
        }
    }

    fn save_manifest(&mut self) -> Result<(), PipelineError> {
        let stats = CacheStats {
            hits: self.client.cache().map_or(0, |c| c.hits()),
            misses: self.client.cache().map_or(0, |c| c.misses()),
            network_calls: self.client.network_calls(),
        };
        self.manifest.set_cache(stats);
        super::checkpoint::write_atomic(&self.config.manifest_path(), self.manifest.to_json().as_bytes())?;
        Ok(())
    }

    /// A skipped generation stage still leaves empty outputs so later stages
    /// read a uniform layout.
    fn skip(&self, stage: Stage, reason: String) -> Result<StageRecord, PipelineError> {
        let empty: [PromptRecord; 0] = [];
        match stage {
            Stage::Topics => write_jsonl(&self.checkpoints.file(TOPIC_PROMPTS), &empty)?,
            Stage::Scenarios => write_jsonl(&self.checkpoints.file(SCENARIO_PROMPTS), &empty)?,
            Stage::Contexts => write_jsonl(&self.checkpoints.file(CONTEXT_PROMPTS), &empty)?,
            Stage::Translation => {
                let none: [ConversationExample; 0] = [];
                write_jsonl(&self.checkpoints.file(TRANSLATED), &none)?
            }
            _ => {}
        }
        Ok(StageRecord::skipped(stage, reason))
    }

    fn generation_settings(&self) -> GenerationSettings {
        self.config.generation_settings()
    }

    fn execute(&mut self, stage: Stage, options: &RunOptions) -> Result<StageRecord, PipelineError> {
        match stage {
            Stage::Topics => self.topics(),
            Stage::Scenarios => self.scenarios(),
            Stage::Contexts => self.contexts(),
            Stage::Revision => self.revision(),
            Stage::Responses => self.responses(),
            Stage::Translation => self.translation(),
            Stage::Assembly => self.assembly(options),
            Stage::Export => self.export(),
            Stage::TrainConfig => self.train_config(options),
        }
    }

    fn read_checkpoint<T: serde::de::DeserializeOwned>(
        &self,
        stage: Stage,
        name: &str,
    ) -> Result<Vec<T>, PipelineError> {
        let path = self.checkpoints.file(name);
        if !path.exists() {
            return Err(PipelineError::MissingCheckpoint(stage));
        }
        Ok(read_jsonl(&path)?)
    }

    fn prompt_record(stage: Stage, raw: usize, deduped: usize, stats: &GenerationStats) -> StageRecord {
        StageRecord::completed(stage, raw as u64, deduped as u64, (raw - deduped) as u64)
            .with("requests", stats.requests)
            .with("parse_failures", stats.parse_failures)
            .with("transport_failures", stats.transport_failures)
    }

    fn topics(&self) -> Result<StageRecord, PipelineError> {
        let settings = self.generation_settings();
        let gen = self.generator(&settings);
        let counts = self.config.topic_counts();
        let mut stats = GenerationStats::default();
        let pool = expand_topics(&gen, &counts, &mut stats).map_err(|e| (Stage::Topics, e))?;
        let raw = generate_topic_prompts(&gen, &pool, &counts, &mut stats).map_err(|e| (Stage::Topics, e))?;
        let raw_len = raw.len();
        let prompts = dedup_prompts(raw);
        write_jsonl(&self.checkpoints.file(TOPIC_POOL), &pool)?;
        write_jsonl(&self.checkpoints.file(TOPIC_PROMPTS), &prompts)?;
        let level = |l: TopicLevel| pool.iter().filter(|n: &&TopicNode| n.level == l).count() as u64;
        Ok(Self::prompt_record(Stage::Topics, raw_len, prompts.len(), &stats)
            .with("nodes", pool.len() as u64)
            .with("seeds", level(TopicLevel::Seed))
            .with("macro_topics", level(TopicLevel::MacroTopic))
            .with("topics", level(TopicLevel::Topic)))
    }

    fn scenarios(&self) -> Result<StageRecord, PipelineError> {
        let settings = self.generation_settings();
        let gen = self.generator(&settings);
        let counts = self.config.scenario_counts();
        let mut stats = GenerationStats::default();
        let pool = expand_scenarios(&gen, &counts, &mut stats).map_err(|e| (Stage::Scenarios, e))?;
        let raw = generate_scenario_prompts(&gen, &pool, &counts, &mut stats).map_err(|e| (Stage::Scenarios, e))?;
        let raw_len = raw.len();
        let prompts = dedup_prompts(raw);
        write_jsonl(&self.checkpoints.file(SCENARIO_POOL), &pool)?;
        write_jsonl(&self.checkpoints.file(SCENARIO_PROMPTS), &prompts)?;
        let level = |l: ScenarioLevel| pool.iter().filter(|n: &&ScenarioNode| n.level == l).count() as u64;
        Ok(Self::prompt_record(Stage::Scenarios, raw_len, prompts.len(), &stats)
            .with("nodes", pool.len() as u64)
            .with("broad", level(ScenarioLevel::Broad))
            .with("detailed", level(ScenarioLevel::Detailed)))
    }

    fn contexts(&self) -> Result<StageRecord, PipelineError> {
        let settings = self.generation_settings();
        let gen = self.generator(&settings);
        let corpus = self.config.context_corpus.as_ref().expect("planned only with a corpus");
        let sources: Vec<ContextSource> = sample_context_sources(
            corpus,
            &self.config.language_code,
            self.config.rng_seed,
            &self.config.context_sampling(),
            self.counter.as_ref(),
        )
        .map_err(|e| (Stage::Contexts, e))?;
        let mut stats = GenerationStats::default();
        let raw = generate_context_prompts(&gen, &sources, self.config.prompts_per_context, &mut stats)
            .map_err(|e| (Stage::Contexts, e))?;
        let raw_len = raw.len();
        let prompts = dedup_prompts(raw);
        write_jsonl(&self.checkpoints.file(CONTEXT_SOURCES), &sources)?;
        write_jsonl(&self.checkpoints.file(CONTEXT_PROMPTS), &prompts)?;
        Ok(Self::prompt_record(Stage::Contexts, raw_len, prompts.len(), &stats).with("documents", sources.len() as u64))
    }

    fn revision(&self) -> Result<StageRecord, PipelineError> {
        let mut prompts: Vec<PromptRecord> = Vec::new();
        for (stage, name) in
            [(Stage::Topics, TOPIC_PROMPTS), (Stage::Scenarios, SCENARIO_PROMPTS), (Stage::Contexts, CONTEXT_PROMPTS)]
        {
            prompts.extend(self.read_checkpoint::<PromptRecord>(stage, name)?);
        }
        let n = prompts.len() as u64;
        let (out, stats) = if self.config.run_revision {
            let settings = self.generation_settings();
            let gen = self.generator(&settings);
            let mut stats = GenerationStats::default();
            let out =
                revise_prompts(&gen, prompts, self.config.rng_seed, &mut stats).map_err(|e| (Stage::Revision, e))?;
            (out, stats)
        } else {
            (prompts, GenerationStats::default())
        };
        write_jsonl(&self.checkpoints.file(PROMPTS), &out)?;
        let revised = out.iter().filter(|p| p.revised).count() as u64;
        Ok(StageRecord::completed(Stage::Revision, n, out.len() as u64, 0)
            .with("selected", stats.requests)
            .with("revised", revised)
            .with("parse_failures", stats.parse_failures)
            .with("transport_failures", stats.transport_failures))
    }

    fn responses(&self) -> Result<StageRecord, PipelineError> {
        let prompts: Vec<PromptRecord> = self.read_checkpoint(Stage::Revision, PROMPTS)?;
        let settings = self.generation_settings();
        let gen = self.generator(&settings);
        let (examples, stats) = generate_responses(&gen, &prompts)
            .map_err(|e: TeacherError| PipelineError::stage(Stage::Responses)(e.to_string()))?;
        write_jsonl(&self.checkpoints.file(GENERATED), &examples)?;
        Ok(StageRecord::completed(Stage::Responses, stats.prompts, stats.produced, stats.dropped())
            .with("dropped_empty", stats.dropped_empty)
            .with("dropped_error", stats.dropped_error)
            .with("with_reasoning", stats.with_reasoning))
    }

    fn translation(&self) -> Result<StageRecord, PipelineError> {
        let fail = |e: TranslationError| PipelineError::stage(Stage::Translation)(e.to_string());
        let corpus = self.config.translation_corpus.as_ref().expect("planned only with a corpus");
        let (sources, load) =
            load_source(corpus, self.config.translation_limit, &is_english, self.client.markers()).map_err(fail)?;
        let settings = self.generation_settings();
        let gen = self.generator(&settings);
        let outcome = translate_conversations::<f64>(&gen, &sources, self.counter.as_ref()).map_err(fail)?;
        let parse_failures = outcome.parse_failures.len() as u64;
        let transport_drops = outcome.transport_drops.len() as u64;
        let candidates = outcome.candidates.len() as u64;
        let kept = filter_by_ratio(outcome.candidates, &self.config.ratio_bounds());
        let ratio_filtered = candidates - kept.len() as u64;
        let examples: Vec<ConversationExample> = kept.into_iter().map(|t| t.into_example()).collect();
        write_jsonl(&self.checkpoints.file(TRANSLATED), &examples)?;
        Ok(StageRecord::completed(
            Stage::Translation,
            load.loaded,
            examples.len() as u64,
            parse_failures + ratio_filtered + transport_drops,
        )
        .with("rows", load.rows)
        .with("non_english", load.non_english)
        .with("invalid", load.invalid)
        .with("parse_failures", parse_failures)
        .with("ratio_filtered", ratio_filtered)
        .with("transport_drops", transport_drops))
    }

    fn pool(&self) -> Result<Vec<ConversationExample>, PipelineError> {
        let mut pool: Vec<ConversationExample> = self.read_checkpoint(Stage::Responses, GENERATED)?;
        pool.extend(self.read_checkpoint::<ConversationExample>(Stage::Translation, TRANSLATED)?);
        Ok(pool)
    }

    fn subset_path(&self, name: SubsetName) -> PathBuf {
        self.checkpoints.dir().join("subsets").join(format!("{name}.jsonl"))
    }

    fn dataset_path(&self, name: SubsetName) -> PathBuf {
        self.config.datasets_dir().join(format!("{name}.json"))
    }

    fn selected_subsets(&self, options: &RunOptions) -> Vec<SubsetName> {
        options.subsets.clone().unwrap_or_else(|| SubsetName::ALL.to_vec())
    }

    fn assembly(&mut self, options: &RunOptions) -> Result<StageRecord, PipelineError> {
        let fail = |e: AssemblyError| PipelineError::stage(Stage::Assembly)(e.to_string());
        let pool = self.pool()?;
        if pool.is_empty() {
            return Err(PipelineError::stage(Stage::Assembly)("no generated or translated examples".into()));
        }
        let budget = compute_budget(&pool, self.counter.as_ref());
        let mut record = StageRecord::completed(Stage::Assembly, 0, 0, 0)
            .with("pool", pool.len() as u64)
            .with("budget", budget.per_subset_cap);
        self.manifest.token_budget = Some(budget.per_subset_cap);
        self.manifest.subsets.clear();
        let mut placed = 0u64;
        for name in self.selected_subsets(options) {
            let spec = SubsetSpec::of(name);
            let has_candidates = pool.iter().any(|ex| spec.admits(ex));
            let examples = if has_candidates {
                build_subset(&spec, &pool, Some(&budget), self.config.rng_seed, self.counter.as_ref()).map_err(fail)?
            } else {
                Vec::new()
            };
            let tokens: u64 =
                examples.iter().map(|ex| example_tokens(ex, spec.include_reasoning, self.counter.as_ref())).sum();
            write_jsonl(&self.subset_path(name), &examples)?;
            record = record.with(&format!("subset.{name}"), examples.len() as u64);
            placed += examples.len() as u64;
            self.manifest.subsets.insert(
                name.to_string(),
                SubsetRecord {
                    examples: examples.len() as u64,
                    tokens,
                    path: String::new(),
                    content_hash: String::new(),
                },
            );
        }
        record.input = placed;
        record.output = placed;
        Ok(record)
    }

    fn export(&mut self) -> Result<StageRecord, PipelineError> {
        let fail = |e: AssemblyError| PipelineError::stage(Stage::Export)(e.to_string());
        let prompts = SystemPrompts::for_language(&self.templates, &self.config.language_name);
        let markers = self.client.markers().clone();
        let options = ExportOptions { prompts: &prompts, delimiters: &markers, counter: self.counter.as_ref() };
        let mut record = StageRecord::completed(Stage::Export, 0, 0, 0);
        let names: Vec<SubsetName> =
            self.manifest.subsets.keys().map(|k| k.parse().expect("subset names come from SubsetName")).collect();
        if names.is_empty() {
            return Err(PipelineError::MissingCheckpoint(Stage::Assembly));
        }
        let (mut input, mut written, mut empty) = (0u64, 0u64, 0u64);
        for name in names {
            let examples: Vec<ConversationExample> = read_jsonl(&self.subset_path(name))?;
            input += examples.len() as u64;
            if examples.is_empty() {
                empty += 1;
                continue;
            }
            let path = self.dataset_path(name);
            let report = export_dataset(&examples, &path, self.config.rng_seed, &options).map_err(fail)?;
            let scan = scan_conditional_traces(&path, &prompts.thinking, &markers).map_err(fail)?;
            if !scan.violations.is_empty() {
                return Err(PipelineError::stage(Stage::Export)(format!(
                    "{name}: {} records break the thinking-message/delimiter correspondence",
                    scan.violations.len()
                )));
            }
            written += report.records;
            let entry = self.manifest.subsets.get_mut(name.as_str()).expect("assembled subset");
            entry.path = report.path.display().to_string();
            entry.content_hash = report.content_hash.clone();
            record = record.with(&format!("records.{name}"), report.records);
        }
        record.input = input;
        record.output = written;
        record.dropped = input - written;
        Ok(record.with("empty_subsets", empty))
    }

    fn train_config(&self, options: &RunOptions) -> Result<StageRecord, PipelineError> {
        let mut emitted = 0;
        for (name, subset) in &self.manifest.subsets {
            if subset.path.is_empty() {
                continue;
            }
            let out = self.config.configs_dir().join(format!("{name}.yaml"));
            emit_training_config(std::path::Path::new(&subset.path), &options.train_overrides, &out)
                .map_err(|e| PipelineError::stage(Stage::TrainConfig)(e.to_string()))?;
            emitted += 1;
        }
        Ok(StageRecord::completed(Stage::TrainConfig, emitted, emitted, 0))
    }

    fn generator<'a>(&'a self, settings: &'a GenerationSettings) -> Generator<'a> {
        Generator { client: &self.client, templates: &self.templates, settings, language: &self.config.language_name }
    }
}

/// Runs every stage from scratch or from the checkpoints in `config.out_dir`.
pub fn run(config: PipelineConfig) -> Result<RunManifest, PipelineError> {
    Pipeline::new(config)?.run_stages(&Stage::ALL, &RunOptions::default())
}

impl StageStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, StageStatus::Completed)
    }
}
