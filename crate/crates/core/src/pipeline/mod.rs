//! End-to-end orchestration: configuration, per-stage checkpoints with
//! resume, and the run manifest.

mod checkpoint;
mod config;
mod manifest;
mod run;

pub use checkpoint::{read_jsonl, write_atomic, write_jsonl, CheckpointError, Checkpoints};
pub use config::{ConfigError, Deviation, PipelineConfig, MOCK_ENDPOINT};
pub use manifest::{CacheStats, Check, RunManifest, Stage, StageRecord, StageStatus, SubsetRecord};
pub use run::{run, Pipeline, PipelineError, PlannedAction, RunOptions};
