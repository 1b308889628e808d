//! Document ingestion, overlapping chunks and BM25 ranking.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

pub const CHUNK_CHARS: usize = 800;
pub const CHUNK_OVERLAP: usize = 200;
const K1: f64 = 1.2;
const B: f64 = 0.75;

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[a-z0-9]+(?:\.[0-9]+)?").unwrap());

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "do", "does", "for", "from", "has", "have", "how", "i", "in",
    "is", "it", "its", "me", "of", "on", "or", "that", "the", "then", "this", "to", "was", "what", "when", "which",
    "with",
];

pub fn terms(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    TOKEN.find_iter(&lower).map(|m| m.as_str().to_string()).filter(|t| !STOPWORDS.contains(&t.as_str())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub source: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc: usize,
    /// Character offset of the chunk inside its document.
    pub offset: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    pub documents: Vec<Document>,
    pub chunks: Vec<Chunk>,
    tf: Vec<HashMap<String, usize>>,
    lens: Vec<usize>,
    df: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Passage {
    pub source: String,
    /// Index into [`CorpusIndex::chunks`].
    pub chunk: usize,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retrieval {
    pub passages: Vec<Passage>,
    pub low_confidence: bool,
}

impl Retrieval {
    pub fn observation(&self) -> String {
        let mut out = String::new();
        if self.low_confidence {
            out.push_str("No passage matched the query terms; closest available text:\n");
        }
        for (i, p) in self.passages.iter().enumerate() {
            out.push_str(&format!("[{}] ({}) {}\n", i + 1, p.source, p.text.trim()));
        }
        out.trim_end().to_string()
    }
}

/// Splits `text` into windows of `CHUNK_CHARS` characters advancing by
/// `CHUNK_CHARS - CHUNK_OVERLAP`. Returns (char offset, text) pairs.
pub fn chunk_text(text: &str) -> Vec<(usize, String)> {
    let chars: Vec<char> = text.chars().collect();
    let stride = CHUNK_CHARS - CHUNK_OVERLAP;
    let mut out = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let end = (start + CHUNK_CHARS).min(chars.len());
        out.push((start, chars[start..end].iter().collect()));
        if end == chars.len() {
            break;
        }
        start += stride;
    }
    out
}

fn read_document(path: &Path) -> Result<String> {
    let ingest = |reason: String| AgentError::Ingest { path: path.display().to_string(), reason };
    let is_pdf = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pdf"));
    if is_pdf {
        let doc = lopdf::Document::load(path).map_err(|e| ingest(e.to_string()))?;
        let pages: Vec<u32> = doc.get_pages().keys().copied().collect();
        doc.extract_text(&pages).map_err(|e| ingest(e.to_string()))
    } else {
        std::fs::read_to_string(path).map_err(|e| ingest(e.to_string()))
    }
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| AgentError::Ingest { path: path.display().to_string(), reason: e.to_string() })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for e in entries {
            collect_files(&e, out)?;
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

impl CorpusIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ingests files and directories (recursively, in sorted order).
    pub fn ingest<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut idx = CorpusIndex::new();
        for p in paths {
            let mut files = Vec::new();
            collect_files(p.as_ref(), &mut files)?;
            for f in files {
                let text = read_document(&f)?;
                let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                idx.add_document(&name, &text);
            }
        }
        Ok(idx)
    }

    pub fn add_document(&mut self, source: &str, text: &str) -> usize {
        let id = self.documents.len();
        self.documents.push(Document { id, source: source.to_string(), text: text.to_string() });
        for (offset, chunk) in chunk_text(text) {
            let toks = terms(&chunk);
            let mut tf = HashMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for t in tf.keys() {
                *self.df.entry(t.clone()).or_insert(0) += 1;
            }
            self.lens.push(toks.len());
            self.tf.push(tf);
            self.chunks.push(Chunk { doc: id, offset, text: chunk });
        }
        id
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    fn score(&self, i: usize, query: &[String]) -> f64 {
        let n = self.chunks.len() as f64;
        let avg = self.lens.iter().sum::<usize>() as f64 / n;
        let len = self.lens[i] as f64;
        let mut s = 0.0;
        let unique: HashSet<&String> = query.iter().collect();
        for t in unique {
            let f = *self.tf[i].get(t).unwrap_or(&0) as f64;
            if f == 0.0 {
                continue;
            }
            let df = self.df[t] as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            s += idf * f * (K1 + 1.0) / (f + K1 * (1.0 - B + B * len / avg.max(1e-9)));
        }
        s
    }

    /// Top `k` chunks by BM25; ties keep corpus order. When nothing
    /// matches, the first chunk is returned flagged as low confidence.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Retrieval> {
        if self.is_empty() {
            return Err(AgentError::NoCorpus);
        }
        let q = terms(query);
        let mut scored: Vec<(usize, f64)> = (0..self.chunks.len()).map(|i| (i, self.score(i, &q))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let passage = |(i, s): (usize, f64)| Passage {
            source: self.documents[self.chunks[i].doc].source.clone(),
            chunk: i,
            score: s,
            text: self.chunks[i].text.clone(),
        };
        if scored[0].1 <= 0.0 {
            return Ok(Retrieval { passages: vec![passage((0, 0.0))], low_confidence: true });
        }
        let passages = scored.into_iter().filter(|(_, s)| *s > 0.0).take(k.max(1)).map(passage).collect();
        Ok(Retrieval { passages, low_confidence: false })
    }

    /// Per-document chunk counts, keyed by source.
    pub fn summary(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for c in &self.chunks {
            *m.entry(self.documents[c.doc].source.clone()).or_insert(0) += 1;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunking_arithmetic() {
        let text: String = (0..2000).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let chunks = chunk_text(&text);
        assert_eq!(chunks.iter().map(|c| c.0).collect::<Vec<_>>(), [0, 600, 1200]);
        assert!(chunks.iter().all(|c| c.1.chars().count() <= CHUNK_CHARS));
        assert_eq!(&chunks[0].1[600..800], &chunks[1].1[..200]);
        assert!(chunk_text("").is_empty());
        assert_eq!(chunk_text("short").len(), 1);
    }

    #[test]
    fn ranks_transfer_function_chunk() {
        let mut idx = CorpusIndex::new();
        idx.add_document("notes.txt", "The plant is driven by a DC motor. Sensors are sampled at 1 kHz.");
        idx.add_document("Sys_Control.pdf", "Transfer function: G(s) = s + 3 / (s^2 - 2s - 3)");
        let r = idx.retrieve("Transfer function of the system", 3).unwrap();
        assert!(!r.low_confidence);
        assert!(r.passages[0].text.contains("s + 3 / (s^2 - 2s - 3)"));
    }

    #[test]
    fn exact_phrase_beats_partial_overlap() {
        let mut idx = CorpusIndex::new();
        idx.add_document("a", "the gain margin of the loop");
        idx.add_document("b", "phase margin and gain margin of the loop");
        idx.add_document("c", "phase margin only");
        let r = idx.retrieve("phase margin gain margin", 3).unwrap();
        assert_eq!(r.passages[0].source, "b");
    }

    #[test]
    fn stopword_query_falls_back() {
        let mut idx = CorpusIndex::new();
        idx.add_document("a", "alpha");
        idx.add_document("b", "beta");
        let r = idx.retrieve("the of and", 3).unwrap();
        assert!(r.low_confidence);
        assert_eq!(r.passages.len(), 1);
        assert_eq!(r.passages[0].source, "a");
        assert_eq!(CorpusIndex::new().retrieve("x", 3).unwrap_err().class(), "NoCorpus");
    }

    #[test]
    fn ingest_directory_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(CorpusIndex::ingest(&[dir.path()]).unwrap().is_empty());
        std::fs::write(dir.path().join("g.txt"), "Transfer function: G(s) = (s+3)/(s^2-2s-3)").unwrap();
        let idx = CorpusIndex::ingest(&[dir.path()]).unwrap();
        assert_eq!((idx.documents.len(), idx.chunks.len()), (1, 1));
        let e = CorpusIndex::ingest(&[dir.path().join("missing.txt")]).unwrap_err();
        assert!(e.to_string().contains("missing.txt"));
    }
}
