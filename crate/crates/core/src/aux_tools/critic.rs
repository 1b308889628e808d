//! Lexical cosine similarity between a query and a candidate answer.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+(?:\.\d+)?|[a-z0-9]+").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticVerdict {
    pub similarity: f64,
    pub accepted: bool,
    pub threshold: f64,
}

impl CriticVerdict {
    pub fn observation(&self) -> String {
        let s = crate::aux_tools::two_decimals(self.similarity);
        if self.accepted {
            format!("The output is aligned with the input. Similarity score: {s}.")
        } else {
            format!("The output does not align with the input. Similarity score: {s} (back to controller agent).")
        }
    }
}

pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    TOKEN.find_iter(&lower).map(|m| m.as_str().to_string()).collect()
}

fn counts(text: &str) -> HashMap<String, f64> {
    let mut m = HashMap::new();
    for t in tokens(text) {
        *m.entry(t).or_insert(0.0) += 1.0;
    }
    m
}

/// Cosine of token-frequency vectors. Two token-free texts count as equal.
pub fn similarity(a: &str, b: &str) -> f64 {
    let (ca, cb) = (counts(a), counts(b));
    if ca.is_empty() && cb.is_empty() {
        return 1.0;
    }
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let dot: f64 = ca.iter().map(|(t, x)| x * cb.get(t).unwrap_or(&0.0)).sum();
    let na: f64 = ca.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = cb.values().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn critic_tool(query: &str, answer: &str, threshold: f64) -> CriticVerdict {
    let similarity = similarity(query, answer);
    CriticVerdict { similarity, accepted: similarity >= threshold, threshold }
}
