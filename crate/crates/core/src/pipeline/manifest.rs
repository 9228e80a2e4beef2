//! Run manifest: what ran, what came in and out of each stage, and the
//! bookkeeping identities that must hold between those counts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{Deviation, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Topics,
    Scenarios,
    Contexts,
    Revision,
    Responses,
    Translation,
    Assembly,
    Export,
    TrainConfig,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Topics,
        Stage::Scenarios,
        Stage::Contexts,
        Stage::Revision,
        Stage::Responses,
        Stage::Translation,
        Stage::Assembly,
        Stage::Export,
        Stage::TrainConfig,
    ];

    /// Stages that talk to the teacher.
    pub const GENERATION: [Stage; 6] =
        [Stage::Topics, Stage::Scenarios, Stage::Contexts, Stage::Revision, Stage::Responses, Stage::Translation];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Topics => "topics",
            Stage::Scenarios => "scenarios",
            Stage::Contexts => "contexts",
            Stage::Revision => "revision",
            Stage::Responses => "responses",
            Stage::Translation => "translation",
            Stage::Assembly => "assembly",
            Stage::Export => "export",
            Stage::TrainConfig => "train_config",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "reason")]
pub enum StageStatus {
    Completed,
    Skipped(String),
}

/// Counts for one stage. `input = output + dropped` for every stage; the
/// per-stage breakdown of `dropped` lives in `counts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub input: u64,
    pub output: u64,
    pub dropped: u64,
    #[serde(default)]
    pub counts: BTreeMap<String, u64>,
    pub seconds: f64,
    /// Loaded from a checkpoint rather than executed in this process.
    #[serde(default)]
    pub resumed: bool,
}

impl StageRecord {
    pub fn completed(stage: Stage, input: u64, output: u64, dropped: u64) -> Self {
        Self {
            stage,
            status: StageStatus::Completed,
            input,
            output,
            dropped,
            counts: BTreeMap::new(),
            seconds: 0.0,
            resumed: false,
        }
    }

    pub fn skipped(stage: Stage, reason: impl Into<String>) -> Self {
        Self { status: StageStatus::Skipped(reason.into()), ..Self::completed(stage, 0, 0, 0) }
    }

    pub fn with(mut self, key: &str, value: u64) -> Self {
        self.counts.insert(key.to_string(), value);
        self
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub examples: u64,
    /// Tokens as counted for the subset's budget (with or without traces).
    pub tokens: u64,
    pub path: String,
    pub content_hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub network_calls: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub language_name: String,
    pub language_code: String,
    pub rng_seed: u64,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub deviations: Vec<Deviation>,
    pub token_counter: String,
    pub stages: Vec<StageRecord>,
    #[serde(default)]
    pub token_budget: Option<u64>,
    #[serde(default)]
    pub subsets: BTreeMap<String, SubsetRecord>,
    pub cache: CacheStats,
    pub cache_hit_rate: f64,
}

/// One bookkeeping relation and whether it held.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: u64,
    pub rhs: u64,
    /// `lhs <= rhs` instead of `lhs == rhs`.
    #[serde(default)]
    pub at_most: bool,
}

impl Check {
    fn new(name: impl Into<String>, lhs: u64, rhs: u64) -> Self {
        Self { name: name.into(), lhs, rhs, at_most: false }
    }

    fn at_most(name: impl Into<String>, lhs: u64, rhs: u64) -> Self {
        Self { at_most: true, ..Self::new(name, lhs, rhs) }
    }

    pub fn holds(&self) -> bool {
        if self.at_most {
            self.lhs <= self.rhs
        } else {
            self.lhs == self.rhs
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.holds() { "ok" } else { "VIOLATED" };
        let op = if self.at_most { "<=" } else { "=" };
        write!(f, "{verdict:>8}  {}: {} {op} {}", self.name, self.lhs, self.rhs)
    }
}

impl RunManifest {
    pub fn new(config: &PipelineConfig) -> Self {
        Self {
            language_name: config.language_name.clone(),
            language_code: config.language_code.clone(),
            rng_seed: config.rng_seed,
            config_hash: config.hash(),
            config: config.clone(),
            deviations: config.deviations(),
            token_counter: config.token_counter.clone(),
            stages: Vec::new(),
            token_budget: None,
            subsets: BTreeMap::new(),
            cache: CacheStats::default(),
            cache_hit_rate: 0.0,
        }
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    /// Replaces any earlier record for the same stage.
    pub fn record(&mut self, record: StageRecord) {
        self.stages.retain(|r| r.stage != record.stage);
        self.stages.push(record);
        self.stages.sort_by_key(|r| r.stage);
    }

    pub fn set_cache(&mut self, stats: CacheStats) {
        self.cache_hit_rate = stats.hit_rate();
        self.cache = stats;
    }

    /// Every identity the recorded counts must satisfy.
    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        for r in self.stages.iter().filter(|r| r.status == StageStatus::Completed) {
            let s = r.stage;
            checks.push(Check::new(format!("{s}: input = output + dropped"), r.input, r.output + r.dropped));
            match s {
                Stage::Translation => checks.push(Check::new(
                    "translation: dropped = parse failures + ratio filtered + transport drops",
                    r.dropped,
                    r.count("parse_failures") + r.count("ratio_filtered") + r.count("transport_drops"),
                )),
                Stage::Responses => checks.push(Check::new(
                    "responses: dropped = empty + errors",
                    r.dropped,
                    r.count("dropped_empty") + r.count("dropped_error"),
                )),
                _ => {}
            }
        }
        let prompts: u64 = [Stage::Topics, Stage::Scenarios, Stage::Contexts]
            .iter()
            .filter_map(|s| self.stage(*s))
            .map(|r| r.output)
            .sum();
        if let Some(rev) = self.stage(Stage::Revision).filter(|r| r.status == StageStatus::Completed) {
            checks.push(Check::new("revision: input = prompts from generation stages", rev.input, prompts));
            if let Some(resp) = self.stage(Stage::Responses).filter(|r| r.status == StageStatus::Completed) {
                checks.push(Check::new("responses: input = revision output", resp.input, rev.output));
            }
        }
        if let (Some(asm), Some(exp)) = (self.stage(Stage::Assembly), self.stage(Stage::Export)) {
            if exp.status == StageStatus::Completed {
                checks.push(Check::new("export: records = assembled examples", exp.input, asm.output));
            }
        }
        if let Some(cap) = self.token_budget {
            for name in crate::dataset::SubsetName::TOKEN_LIMITED {
                if let Some(s) = self.subsets.get(name.as_str()) {
                    checks.push(Check::at_most(format!("{name}: tokens within budget"), s.tokens, cap));
                }
            }
        }
        checks
    }

    pub fn verify(&self) -> Result<Vec<Check>, Vec<Check>> {
        let checks = self.checks();
        if checks.iter().all(Check::holds) {
            Ok(checks)
        } else {
            Err(checks.into_iter().filter(|c| !c.holds()).collect())
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
