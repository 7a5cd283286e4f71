//! Append-only response cache.
//!
//! Each record is `key_len: u32 LE | value_len: u32 LE | key | value | crc32: u32 LE`,
//! the checksum covering everything before it. Later records for a key win.
//! Records failing their checksum are skipped with a warning and read as
//! misses; a truncated tail is ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cache entry too large ({0} bytes)")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub records: usize,
    pub corrupt_records: usize,
    pub bytes: u64,
}

#[derive(Debug)]
struct State {
    map: HashMap<String, String>,
    records: usize,
    corrupt: usize,
    bytes: u64,
}

#[derive(Debug)]
pub struct ResponseCache {
    path: PathBuf,
    state: Mutex<State>,
}

fn checksum(header: &[u8], key: &[u8], value: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(header);
    h.update(key);
    h.update(value);
    h.finalize()
}

fn encode(key: &str, value: &str) -> Result<Vec<u8>, CacheError> {
    let k = u32::try_from(key.len()).map_err(|_| CacheError::TooLarge(key.len()))?;
    let v = u32::try_from(value.len()).map_err(|_| CacheError::TooLarge(value.len()))?;
    let mut rec = Vec::with_capacity(12 + key.len() + value.len());
    rec.extend_from_slice(&k.to_le_bytes());
    rec.extend_from_slice(&v.to_le_bytes());
    let crc = checksum(&rec, key.as_bytes(), value.as_bytes());
    rec.extend_from_slice(key.as_bytes());
    rec.extend_from_slice(value.as_bytes());
    rec.extend_from_slice(&crc.to_le_bytes());
    Ok(rec)
}

fn read_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn decode(buf: &[u8], path: &Path) -> State {
    let mut state = State {
        map: HashMap::new(),
        records: 0,
        corrupt: 0,
        bytes: buf.len() as u64,
    };
    let mut pos = 0;
    while pos + 8 <= buf.len() {
        let k = read_u32(buf, pos) as usize;
        let v = read_u32(buf, pos + 4) as usize;
        let Some(end) = pos.checked_add(8 + k + v + 4).filter(|&e| e <= buf.len()) else {
            log::warn!(
                "cache {}: truncated record at byte {pos}, ignoring the rest",
                path.display()
            );
            state.corrupt += 1;
            return state;
        };
        let key = &buf[pos + 8..pos + 8 + k];
        let value = &buf[pos + 8 + k..end - 4];
        let stored = read_u32(buf, end - 4);
        state.records += 1;
        let key_str = std::str::from_utf8(key).ok();
        if stored != checksum(&buf[pos..pos + 8], key, value) {
            log::warn!(
                "cache {}: checksum mismatch at byte {pos}, treating entry as a miss",
                path.display()
            );
            state.corrupt += 1;
            if let Some(key) = key_str {
                state.map.remove(key);
            }
        } else if let (Some(key), Ok(value)) = (key_str, std::str::from_utf8(value)) {
            state.map.insert(key.to_string(), value.to_string());
        } else {
            state.corrupt += 1;
        }
        pos = end;
    }
    if pos != buf.len() {
        log::warn!("cache {}: {} trailing bytes ignored", path.display(), buf.len() - pos);
        state.corrupt += 1;
    }
    state
}

impl ResponseCache {
    /// Opens the cache at `path`, creating it on first write.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let path = path.into();
        let mut buf = Vec::new();
        match File::open(&path) {
            Ok(mut f) => {
                f.read_to_end(&mut buf).map_err(|source| CacheError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => return Err(CacheError::Io { path, source }),
        }
        let state = decode(&buf, &path);
        Ok(ResponseCache {
            path,
            state: Mutex::new(state),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.state.lock().expect("cache lock").map.get(key).cloned()
    }

    pub fn put(&self, key: &str, value: &str) -> Result<(), CacheError> {
        let rec = encode(key, value)?;
        let mut state = self.state.lock().expect("cache lock");
        let io_err = |source| CacheError::Io {
            path: self.path.clone(),
            source,
        };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io_err)?;
        f.write_all(&rec).map_err(io_err)?;
        f.flush().map_err(io_err)?;
        state.map.insert(key.to_string(), value.to_string());
        state.records += 1;
        state.bytes += rec.len() as u64;
        Ok(())
    }

    /// Keys in sorted order.
    pub fn keys(&self) -> Vec<String> {
        let state = self.state.lock().expect("cache lock");
        let mut keys: Vec<String> = state.map.keys().cloned().collect();
        keys.sort();
        keys
    }

    pub fn clear(&self) -> Result<(), CacheError> {
        let mut state = self.state.lock().expect("cache lock");
        match std::fs::remove_file(&self.path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(CacheError::Io {
                    path: self.path.clone(),
                    source,
                })
            }
        }
        *state = State {
            map: HashMap::new(),
            records: 0,
            corrupt: 0,
            bytes: 0,
        };
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        let state = self.state.lock().expect("cache lock");
        CacheStats {
            entries: state.map.len(),
            records: state.records,
            corrupt_records: state.corrupt,
            bytes: state.bytes,
        }
    }
}
