//! Completion backends and usage metering.

mod http;
mod scripted;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, HttpConfig};
pub use scripted::{stable_hash, Script, ScriptedBackend};

use crate::error::Result;

/// Identifies a completion for the scripted backend: which node asked, at
/// which inner step, for which user query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub key: String,
    pub step: usize,
    pub query: String,
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub system_text: String,
    pub user_text: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub stop: Vec<String>,
    pub fingerprint: Fingerprint,
    /// Context values scripted replies may reference as `{{name}}`.
    pub vars: BTreeMap<String, String>,
}

impl CompletionRequest {
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>, fingerprint: Fingerprint) -> Self {
        CompletionRequest {
            system_text: system_text.into(),
            user_text: user_text.into(),
            model: String::new(),
            temperature: 0.0,
            max_output_tokens: 1024,
            stop: vec!["\nObservation:".into()],
            fingerprint,
            vars: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub wall_seconds: f64,
    pub cost: f64,
}

impl UsageRecord {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }

    pub fn add(&mut self, other: &UsageRecord) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
        self.wall_seconds += other.wall_seconds;
        self.cost += other.cost;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: UsageRecord,
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion>;

    /// Model name used for pricing and request bodies.
    fn model(&self) -> &str;
}

/// USD per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Price {
    pub input_per_m: f64,
    pub output_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable(pub BTreeMap<String, Price>);

impl Default for PriceTable {
    fn default() -> Self {
        let p = |i, o| Price { input_per_m: i, output_per_m: o };
        PriceTable(BTreeMap::from([
            ("gpt-3.5-turbo".to_string(), p(0.5, 1.5)),
            ("gpt-4o".to_string(), p(2.5, 10.0)),
            ("deepseek-v3".to_string(), p(0.27, 1.10)),
            ("claude-3-7-sonnet".to_string(), p(3.0, 15.0)),
        ]))
    }
}

impl PriceTable {
    /// Loads a TOML table of `[model] input_per_m = .., output_per_m = ..`.
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text).map(PriceTable)
    }

    pub fn cost(&self, model: &str, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        match self.0.get(model) {
            Some(p) => (prompt_tokens as f64 * p.input_per_m + completion_tokens as f64 * p.output_per_m) / 1e6,
            None => 0.0,
        }
    }
}

/// Rough token count when the backend does not report one.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Sums per-call usage.
pub fn meter_run<'a>(records: impl IntoIterator<Item = &'a UsageRecord>) -> UsageRecord {
    let mut total = UsageRecord::default();
    for r in records {
        total.add(r);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_arithmetic() {
        let t = PriceTable(BTreeMap::from([("m".to_string(), Price { input_per_m: 0.5, output_per_m: 1.5 })]));
        assert!((t.cost("m", 1000, 200) - 0.0008).abs() < 1e-15);
        assert_eq!(t.cost("unknown", 1000, 200), 0.0);
    }

    #[test]
    fn meter_sums() {
        let a = UsageRecord { prompt_tokens: 60, completion_tokens: 40, wall_seconds: 0.5, cost: 0.1 };
        let b = UsageRecord { prompt_tokens: 30, completion_tokens: 20, wall_seconds: 0.5, cost: 0.2 };
        let m = meter_run([&a, &b]);
        assert_eq!(m.total_tokens(), 150);
        assert_eq!(m.wall_seconds, 1.0);
        assert_eq!(meter_run([]), UsageRecord::default());
    }

    #[test]
    fn price_table_from_toml() {
        let t = PriceTable::from_toml("[local]\ninput_per_m = 1.0\noutput_per_m = 2.0\n").unwrap();
        assert_eq!(t.cost("local", 1_000_000, 0), 1.0);
    }
}
