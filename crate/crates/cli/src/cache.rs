//! Content-addressed cache: little-endian binary blobs plus a JSON index.
//! Keys are canonical parameter strings; invalidation is purely by hash.

use anyhow::Context;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Cache {
    dir: PathBuf,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Cache {
    /// Cache directory: explicit flag, else `LE2_CACHE_DIR`, else `.le2-cache`.
    pub fn open(explicit: Option<&Path>) -> anyhow::Result<Cache> {
        let dir = explicit
            .map(|p| p.to_path_buf())
            .or_else(|| std::env::var_os("LE2_CACHE_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".le2-cache"));
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating cache dir {}", dir.display()))?;
        Ok(Cache { dir })
    }

    pub fn key_hash(key: &str) -> String {
        hex(&Sha256::digest(key.as_bytes()))
    }

    pub fn lookup(&self, key: &str) -> Option<Vec<u8>> {
        let path = self.dir.join(format!("{}.bin", Self::key_hash(key)));
        std::fs::read(path).ok()
    }

    pub fn store(&self, key: &str, blob: &[u8]) -> anyhow::Result<()> {
        let hash = Self::key_hash(key);
        let path = self.dir.join(format!("{hash}.bin"));
        std::fs::write(&path, blob)
            .with_context(|| format!("writing cache blob {}", path.display()))?;
        // JSON index: hash -> key string
        let index_path = self.dir.join("index.json");
        let mut index: BTreeMap<String, String> = std::fs::read_to_string(&index_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        index.insert(hash, key.to_string());
        std::fs::write(&index_path, serde_json::to_string_pretty(&index)?)?;
        Ok(())
    }
}

/// Minimal little-endian framing for the cached numeric payloads.
pub struct BlobWriter {
    buf: Vec<u8>,
}

impl BlobWriter {
    pub fn new(magic: &[u8; 8]) -> Self {
        let mut buf = Vec::new();
        buf.write_all(magic).unwrap();
        BlobWriter { buf }
    }

    pub fn f64(&mut self, x: f64) -> &mut Self {
        self.buf.extend_from_slice(&x.to_le_bytes());
        self
    }

    pub fn slice(&mut self, xs: &[f64]) -> &mut Self {
        self.buf.extend_from_slice(&(xs.len() as u64).to_le_bytes());
        for x in xs {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct BlobReader<'a> {
    rest: &'a [u8],
}

impl<'a> BlobReader<'a> {
    pub fn new(blob: &'a [u8], magic: &[u8; 8]) -> anyhow::Result<Self> {
        if blob.len() < 8 || &blob[..8] != magic {
            anyhow::bail!("cache blob has wrong magic");
        }
        Ok(BlobReader { rest: &blob[8..] })
    }

    fn bytes8(&mut self) -> anyhow::Result<[u8; 8]> {
        if self.rest.len() < 8 {
            anyhow::bail!("cache blob truncated");
        }
        let b: [u8; 8] = self.rest[..8].try_into()?;
        self.rest = &self.rest[8..];
        Ok(b)
    }

    pub fn f64(&mut self) -> anyhow::Result<f64> {
        Ok(f64::from_le_bytes(self.bytes8()?))
    }

    pub fn slice(&mut self) -> anyhow::Result<Vec<f64>> {
        let n = u64::from_le_bytes(self.bytes8()?) as usize;
        if self.rest.len() < 8 * n {
            anyhow::bail!("cache blob truncated");
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(f64::from_le_bytes(self.rest[8 * i..8 * i + 8].try_into()?));
        }
        self.rest = &self.rest[8 * n..];
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_roundtrip() {
        let mut w = BlobWriter::new(b"LE2TEST0");
        w.f64(1.25).slice(&[1.0, -2.0, 3.5]).f64(7.0);
        let blob = w.finish();
        let mut r = BlobReader::new(&blob, b"LE2TEST0").unwrap();
        assert_eq!(r.f64().unwrap(), 1.25);
        assert_eq!(r.slice().unwrap(), vec![1.0, -2.0, 3.5]);
        assert_eq!(r.f64().unwrap(), 7.0);
    }

    #[test]
    fn cache_store_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(Some(dir.path())).unwrap();
        assert!(cache.lookup("key1").is_none());
        cache.store("key1", b"payload").unwrap();
        assert_eq!(cache.lookup("key1").unwrap(), b"payload");
        let index = std::fs::read_to_string(dir.path().join("index.json")).unwrap();
        assert!(index.contains("key1"));
    }
}
