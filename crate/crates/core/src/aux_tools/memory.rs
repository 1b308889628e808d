//! Append-only conversation store with lexical recall.
//!
//! On disk the store is a sequence of records, each a little-endian `u32`
//! byte length followed by that many bytes of JSON.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::corpus::terms;
use super::critic::similarity;
use crate::error::{AgentError, Result};

pub const DEFAULT_RECALL_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub query: String,
    pub answer: String,
    pub transcript: String,
    pub stored_at: u64,
    pub key_terms: Vec<String>,
}

impl MemoryRecord {
    pub fn new(query: &str, answer: &str, transcript: &str) -> Self {
        let mut key_terms = terms(query);
        key_terms.sort();
        key_terms.dedup();
        let stored_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        MemoryRecord {
            query: query.to_string(),
            answer: answer.to_string(),
            transcript: transcript.to_string(),
            stored_at,
            key_terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Recall {
    Hit { record: MemoryRecord, similarity: f64 },
    Miss { best: f64 },
}

impl Recall {
    pub fn similarity(&self) -> f64 {
        match self {
            Recall::Hit { similarity, .. } => *similarity,
            Recall::Miss { best } => *best,
        }
    }

    pub fn observation(&self) -> String {
        match self {
            Recall::Hit { record, .. } => {
                format!("The memory has been recalled successfully. {}\n{}", record.query, record.answer)
            }
            Recall::Miss { best } => format!(
                "No stored conversation matches this query (best similarity {}).",
                agentctl_control::format::fmt_num(*best)
            ),
        }
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    path: Option<PathBuf>,
    records: Mutex<Vec<MemoryRecord>>,
}

pub fn decode_log(bytes: &[u8]) -> Result<Vec<MemoryRecord>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        if bytes.len() - pos < 4 {
            return Err(AgentError::Store(format!("truncated length prefix at byte {pos}")));
        }
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        let body =
            bytes.get(pos..pos + len).ok_or_else(|| AgentError::Store(format!("truncated record at byte {pos}")))?;
        out.push(serde_json::from_slice(body).map_err(|e| AgentError::Store(e.to_string()))?);
        pos += len;
    }
    Ok(out)
}

pub fn encode_record(r: &MemoryRecord) -> Vec<u8> {
    let body = serde_json::to_vec(r).expect("record serializes");
    let mut out = (body.len() as u32).to_le_bytes().to_vec();
    out.extend(body);
    out
}

impl MemoryStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates on first store) the log at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let records = match std::fs::read(&path) {
            Ok(bytes) => decode_log(&bytes)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(AgentError::Store(format!("{}: {e}", path.display()))),
        };
        Ok(MemoryStore { path: Some(path), records: Mutex::new(records) })
    }

    pub fn len(&self) -> usize {
        self.records.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<MemoryRecord> {
        self.records.lock().unwrap().clone()
    }

    /// Appends a record; returns the new store size.
    pub fn store(&self, record: MemoryRecord) -> Result<usize> {
        if record.transcript.trim().is_empty() {
            return Err(AgentError::Store("empty transcript".into()));
        }
        let mut records = self.records.lock().unwrap();
        if let Some(path) = &self.path {
            let store_err = |e: std::io::Error| AgentError::Store(format!("{}: {e}", path.display()));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(store_err)?;
            }
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(store_err)?;
            f.write_all(&encode_record(&record)).map_err(store_err)?;
        }
        records.push(record);
        Ok(records.len())
    }

    /// Best record by max(similarity to its query, similarity to its
    /// answer); a hit needs at least `threshold`. Earlier records win ties.
    pub fn recall(&self, query: &str, threshold: f64) -> Recall {
        let records = self.records.lock().unwrap();
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in records.iter().enumerate() {
            let s = similarity(query, &r.query).max(similarity(query, &r.answer));
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        match best {
            Some((i, s)) if s >= threshold => Recall::Hit { record: records[i].clone(), similarity: s },
            Some((_, s)) => Recall::Miss { best: s },
            None => Recall::Miss { best: 0.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_then_recall_same_query() {
        let m = MemoryStore::in_memory();
        assert!(matches!(m.recall("anything", 0.6), Recall::Miss { best } if best == 0.0));
        m.store(MemoryRecord::new("plot the step response of G", "done", "user: plot")).unwrap();
        let r = m.recall("plot the step response of G", 0.6);
        assert!(matches!(r, Recall::Hit { similarity, .. } if similarity == 1.0));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn log_round_trips_and_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("memory.log");
        let m = MemoryStore::open(&path).unwrap();
        for i in 0..3 {
            assert_eq!(m.store(MemoryRecord::new(&format!("q{i}"), "a", "t")).unwrap(), i + 1);
        }
        let again = MemoryStore::open(&path).unwrap();
        assert_eq!(again.records(), m.records());
        let bytes = std::fs::read(&path).unwrap();
        assert!(decode_log(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn empty_transcript_rejected() {
        let m = MemoryStore::in_memory();
        assert_eq!(m.store(MemoryRecord::new("q", "a", " ")).unwrap_err().class(), "StoreError");
    }
}
