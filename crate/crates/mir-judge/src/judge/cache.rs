//! Content-addressed disk cache for raw judge responses.
//!
//! Layout: `<dir>/<first two hash chars>/<hash>.json`, one immutable entry
//! per request hash. Writes go through a temp file and rename, so concurrent
//! writers of the same key settle on identical content.

use super::{JudgeError, TokenUsage};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_hash: String,
    pub prompt_hash: String,
    pub model: String,
    pub temperature: f64,
    pub raw: String,
    pub judge_id: String,
    pub token_usage: Option<TokenUsage>,
    pub created_unix: u64,
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> DiskCache {
        DiskCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, request_hash: &str) -> PathBuf {
        let prefix = &request_hash[..request_hash.len().min(2)];
        self.dir.join(prefix).join(format!("{request_hash}.json"))
    }

    pub fn get(&self, request_hash: &str) -> Option<CacheEntry> {
        let path = self.path_for(request_hash);
        let bytes = fs::read(path).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<(), JudgeError> {
        let path = self.path_for(&entry.request_hash);
        let parent = path.parent().expect("cache paths have parents");
        fs::create_dir_all(parent).map_err(|e| JudgeError::CacheIo(e.to_string()))?;
        let body = serde_json::to_vec_pretty(entry).map_err(|e| JudgeError::CacheIo(e.to_string()))?;
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        fs::write(&tmp, body).map_err(|e| JudgeError::CacheIo(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| JudgeError::CacheIo(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(hash: &str, raw: &str) -> CacheEntry {
        CacheEntry {
            request_hash: hash.to_string(),
            prompt_hash: "p".to_string(),
            model: "m".to_string(),
            temperature: 0.0,
            raw: raw.to_string(),
            judge_id: "remote".to_string(),
            token_usage: None,
            created_unix: 0,
        }
    }

    #[test]
    fn put_then_get_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        assert!(cache.get("abcdef").is_none());
        cache.put(&entry("abcdef", "raw text")).unwrap();
        let got = cache.get("abcdef").unwrap();
        assert_eq!(got.raw, "raw text");
        // Sharded under the two-character prefix.
        assert!(dir.path().join("ab").join("abcdef.json").exists());
    }

    #[test]
    fn rewrites_are_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        cache.put(&entry("ff00", "same")).unwrap();
        cache.put(&entry("ff00", "same")).unwrap();
        assert_eq!(cache.get("ff00").unwrap().raw, "same");
    }
}
