use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::request::{ChatRequest, ChatResponse};

/// SHA-256 over the canonical JSON serialization of a request.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn of(request: &ChatRequest) -> Self {
        let canonical = serde_json::to_vec(request).expect("request serializes");
        Self(hex::encode(Sha256::digest(&canonical)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: CacheKey,
    response: ChatResponse,
}

/// Append-only JSON-lines response cache.
///
/// Each record is written with a single `write` on a file opened in append
/// mode, so concurrent writers never interleave partial lines. A torn final
/// line left by a killed process is skipped on load.
pub struct ResponseCache {
    path: PathBuf,
    entries: RwLock<HashMap<CacheKey, ChatResponse>>,
    file: Mutex<File>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ResponseCache {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        entries.insert(rec.key, rec.response);
                    }
                    Err(e) => tracing::warn!(path = %path.display(), "skipping unreadable cache line: {e}"),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            entries: RwLock::new(entries),
            file: Mutex::new(file),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &CacheKey) -> Option<ChatResponse> {
        let found = self.entries.read().unwrap().get(key).cloned();
        match found {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        found
    }

    pub fn put(&self, key: CacheKey, response: &ChatResponse) -> io::Result<()> {
        let mut line = serde_json::to_vec(&CacheRecord { key: key.clone(), response: response.clone() })
            .map_err(io::Error::other)?;
        line.push(b'\n');
        {
            let mut file = self.file.lock().unwrap();
            file.write_all(&line)?;
            file.flush()?;
        }
        self.entries.write().unwrap().insert(key, response.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teacher::request::{Message, Usage};

    fn response(text: &str) -> ChatResponse {
        ChatResponse {
            final_text: text.into(),
            reasoning_text: "r".into(),
            usage: Usage { prompt_tokens: 1, completion_tokens: 2 },
            raw_payload: "{}".into(),
        }
    }

    #[test]
    fn key_changes_with_every_field() {
        let base = ChatRequest::single_turn("m", "s", "u", 0.5);
        let k = CacheKey::of(&base);
        assert_eq!(k, CacheKey::of(&base.clone()));
        assert_eq!(k.as_str().len(), 64);

        let mut variants = vec![];
        let mut r = base.clone();
        r.model = "m2".into();
        variants.push(r);
        let mut r = base.clone();
        r.temperature = 0.6;
        variants.push(r);
        let mut r = base.clone();
        r.max_tokens = Some(10);
        variants.push(r);
        let mut r = base.clone();
        r.messages.push(Message::assistant("x"));
        variants.push(r);
        let mut r = base.clone();
        r.seed = Some(1);
        variants.push(r);
        let mut r = base.clone();
        r.repetition_penalty = Some(1.0);
        variants.push(r);
        for v in variants {
            assert_ne!(CacheKey::of(&v), k);
        }
    }

    #[test]
    fn persists_and_survives_torn_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let key = CacheKey::of(&ChatRequest::single_turn("m", "s", "u", 0.0));
        {
            let cache = ResponseCache::open(&path).unwrap();
            assert!(cache.get(&key).is_none());
            cache.put(key.clone(), &response("hello")).unwrap();
        }
        {
            let mut f = OpenOptions::new().append(true).open(&path).unwrap();
            f.write_all(b"{\"key\": \"trunc").unwrap();
        }
        let cache = ResponseCache::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.get(&key).unwrap().final_text, "hello");
        assert_eq!(cache.hits(), 1);
    }
}
