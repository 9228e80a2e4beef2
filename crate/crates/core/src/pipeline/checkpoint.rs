//! Line-delimited JSON stage checkpoints and completion markers.
//!
//! A stage's outputs are written first, each atomically, and its `.done`
//! marker last. A directory with outputs but no marker is an interrupted
//! stage and is recomputed.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::manifest::{Stage, StageRecord};

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.display().to_string(), source }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CheckpointError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(io(&tmp))?;
    f.write_all(bytes).map_err(io(&tmp))?;
    f.sync_all().map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CheckpointError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("checkpoint rows serialize");
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CheckpointError> {
    let file = File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| CheckpointError::Corrupt {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// One run's checkpoint directory.
#[derive(Debug, Clone)]
pub struct Checkpoints {
    dir: PathBuf,
}

impl Checkpoints {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn marker(&self, stage: Stage) -> PathBuf {
        self.dir.join(format!("{stage}.done"))
    }

    pub fn completed(&self, stage: Stage) -> Result<Option<StageRecord>, CheckpointError> {
        let path = self.marker(stage);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| CheckpointError::Corrupt {
                path: path.display().to_string(),
                line: 1,
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io(&path)(e)),
        }
    }

    pub fn mark(&self, record: &StageRecord) -> Result<(), CheckpointError> {
        let json = serde_json::to_vec_pretty(record).expect("stage record serializes");
        write_atomic(&self.marker(record.stage), &json)
    }

    pub fn clear(&self, stage: Stage) -> Result<(), CheckpointError> {
        let path = self.marker(stage);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(io(&path)(e)),
            _ => Ok(()),
        }
    }

    /// Config hash the directory was created under, if any.
    pub fn config_hash(&self) -> Result<Option<String>, CheckpointError> {
        let path = self.file("config_hash");
        match fs::read_to_string(&path) {
            Ok(h) => Ok(Some(h.trim().to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io(&path)(e)),
        }
    }

    pub fn set_config_hash(&self, hash: &str) -> Result<(), CheckpointError> {
        write_atomic(&self.file("config_hash"), format!("{hash}\n").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_and_markers() {
        let dir = tempfile::tempdir().unwrap();
        let cp = Checkpoints::new(dir.path());
        let rows = vec![serde_json::json!({"a": 1}), serde_json::json!({"b": "x\ny"})];
        write_jsonl(&cp.file("rows.jsonl"), &rows).unwrap();
        assert_eq!(read_jsonl::<serde_json::Value>(&cp.file("rows.jsonl")).unwrap(), rows);

        assert!(cp.completed(Stage::Topics).unwrap().is_none());
        let rec = StageRecord::completed(Stage::Topics, 3, 2, 1);
        cp.mark(&rec).unwrap();
        assert_eq!(cp.completed(Stage::Topics).unwrap(), Some(rec));
        cp.clear(Stage::Topics).unwrap();
        assert!(cp.completed(Stage::Topics).unwrap().is_none());
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(&path, "{\"a\":1}\n{oops\n").unwrap();
        let err = read_jsonl::<serde_json::Value>(&path).unwrap_err();
        assert!(matches!(err, CheckpointError::Corrupt { line: 2, .. }));
    }
}
