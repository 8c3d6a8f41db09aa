use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::binio::write_atomic;
use crate::error::Result;
use crate::series::FeatureSeries;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

/// Content-addressed store for intermediate results. Keys are SHA-256
/// digests of a description of the producing stage and all of its inputs.
/// Entries live on disk when a directory is given, otherwise in memory.
#[derive(Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Vec<u8>>>,
    digests: Mutex<HashMap<PathBuf, String>>,
    stats: Mutex<CacheStats>,
}

pub fn digest_hex(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}

impl Cache {
    pub fn in_memory() -> Self {
        Cache::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir: Some(dir), ..Cache::default() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn stats(&self) -> CacheStats {
        *self.stats.lock().expect("cache stats lock")
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(&key[..2]).join(format!("{key}.bin")))
    }

    fn get(&self, key: &str) -> Option<Vec<u8>> {
        match self.path_for(key) {
            Some(p) => fs::read(p).ok(),
            None => self.memory.lock().expect("cache lock").get(key).cloned(),
        }
    }

    fn put(&self, key: &str, bytes: Vec<u8>) -> Result<()> {
        match self.path_for(key) {
            Some(p) => {
                fs::create_dir_all(p.parent().expect("cache paths have a parent"))?;
                write_atomic(&p, &bytes)
            }
            None => {
                self.memory.lock().expect("cache lock").insert(key.to_string(), bytes);
                Ok(())
            }
        }
    }

    fn count(&self, hit: bool) {
        let mut s = self.stats.lock().expect("cache stats lock");
        if hit {
            s.hits += 1;
        } else {
            s.misses += 1;
        }
    }

    /// Returns the cached bytes for `key`, or computes, stores and returns
    /// them. An unreadable entry is recomputed.
    pub fn bytes_or<F>(&self, key: &str, compute: F) -> Result<Vec<u8>>
    where
        F: FnOnce() -> Result<Vec<u8>>,
    {
        if let Some(b) = self.get(key) {
            self.count(true);
            return Ok(b);
        }
        self.count(false);
        let b = compute()?;
        self.put(key, b.clone())?;
        Ok(b)
    }

    /// Feature series are stored as f32, so a fresh result is quantized the
    /// same way before it is returned: warm and cold runs see equal values.
    pub fn series_or<F>(&self, key: &str, compute: F) -> Result<FeatureSeries>
    where
        F: FnOnce() -> Result<FeatureSeries>,
    {
        if let Some(b) = self.get(key) {
            if let Ok(s) = FeatureSeries::read_from(b.as_slice()) {
                self.count(true);
                return Ok(s);
            }
            log::warn!("cache entry {key} is unreadable; recomputing");
        }
        self.count(false);
        let s = compute()?.quantized();
        let mut buf = Vec::new();
        s.write_to(&mut buf)?;
        self.put(key, buf)?;
        Ok(s)
    }

    /// SHA-256 of a file's bytes, memoized per path for the cache lifetime.
    pub fn file_digest(&self, path: &Path) -> Result<String> {
        if let Some(d) = self.digests.lock().expect("digest lock").get(path) {
            return Ok(d.clone());
        }
        let bytes = fs::read(path)?;
        let d = hex::encode(Sha256::digest(&bytes));
        self.digests.lock().expect("digest lock").insert(path.to_path_buf(), d.clone());
        Ok(d)
    }
}
