//! Deterministic backend driven by a reply script.
//!
//! A script is a sequence of entries, each opened by a header line
//!
//! ```text
//! >>> <key> <step|*> [selector]
//! ```
//!
//! followed by the reply body, which runs until the next header. `key` is the
//! node name (`Controller`, `Memory:store`, ...) or a tool scaffold key
//! (`route`, `cot`, `tot`, `Planner:objective`). `step` is the completion
//! index inside one node visit; for `route` it is the Supervisor visit index
//! within the turn. The selector is `*` (any query), `= <query text>`, or
//! `#<hash>` as printed by [`stable_hash`]. Lines before the first header are
//! ignored. Bodies may reference request variables as `{{name}}`.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use sha2::{Digest, Sha256};

use super::{estimate_tokens, Backend, Completion, CompletionRequest, PriceTable, UsageRecord};
use crate::error::{AgentError, Result};

static VAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").unwrap());

/// First 16 hex digits of SHA-256 over the whitespace-normalized text.
pub fn stable_hash(text: &str) -> String {
    let norm = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let digest = Sha256::digest(norm.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Selector {
    Any,
    Hash(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Script {
    entries: BTreeMap<(String, Option<usize>, Selector), String>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Script> {
        let mut script = Script::default();
        let mut current: Option<((String, Option<usize>, Selector), Vec<&str>)> = None;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(header) = line.strip_prefix(">>>") {
                if let Some((k, body)) = current.take() {
                    script.insert(k, &body);
                }
                current = Some((parse_header(header, lineno + 1)?, Vec::new()));
            } else if let Some((_, body)) = current.as_mut() {
                body.push(line);
            }
        }
        if let Some((k, body)) = current {
            script.insert(k, &body);
        }
        Ok(script)
    }

    fn insert(&mut self, key: (String, Option<usize>, Selector), body: &[&str]) {
        let mut end = body.len();
        while end > 0 && body[end - 1].trim().is_empty() {
            end -= 1;
        }
        self.entries.insert(key, body[..end].join("\n"));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, key: &str, step: usize, query_hash: &str) -> Option<&str> {
        let h = Selector::Hash(query_hash.to_string());
        let k = key.to_string();
        [
            (k.clone(), Some(step), h.clone()),
            (k.clone(), Some(step), Selector::Any),
            (k.clone(), None, h),
            (k, None, Selector::Any),
        ]
        .iter()
        .find_map(|probe| self.entries.get(probe).map(String::as_str))
    }
}

fn parse_header(header: &str, lineno: usize) -> Result<(String, Option<usize>, Selector)> {
    let bad = |m: &str| AgentError::Scenario { path: format!("script line {lineno}"), message: m.to_string() };
    let header = header.trim();
    let (key, rest) = header.split_once(char::is_whitespace).ok_or_else(|| bad("header needs a key and a step"))?;
    let rest = rest.trim_start();
    let (step, sel) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let step = match step {
        "*" => None,
        s => Some(s.parse::<usize>().map_err(|_| bad("step must be a number or *"))?),
    };
    let sel = sel.trim();
    let selector = if sel.is_empty() || sel == "*" {
        Selector::Any
    } else if let Some(q) = sel.strip_prefix('=') {
        Selector::Hash(stable_hash(q))
    } else if let Some(h) = sel.strip_prefix('#') {
        Selector::Hash(h.trim().to_string())
    } else {
        return Err(bad("selector must be *, = query, or #hash"));
    };
    Ok((key.to_string(), step, selector))
}

/// Looks replies up in layered scripts; earlier layers win.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    layers: Vec<Script>,
    model: String,
    prices: PriceTable,
}

impl ScriptedBackend {
    pub fn new(layers: Vec<Script>) -> Self {
        ScriptedBackend { layers, model: "gpt-3.5-turbo".into(), prices: PriceTable::default() }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self::new(vec![Script::parse(text)?]))
    }

    pub fn with_model(mut self, model: impl Into<String>, prices: PriceTable) -> Self {
        self.model = model.into();
        self.prices = prices;
        self
    }

    /// Raw reply for a fingerprint, before variable substitution.
    pub fn scripted_lookup(&self, key: &str, step: usize, query: &str) -> Option<&str> {
        let h = stable_hash(query);
        self.layers.iter().find_map(|s| s.lookup(key, step, &h))
    }
}

fn fill(body: &str, vars: &BTreeMap<String, String>) -> String {
    VAR.replace_all(body, |c: &regex::Captures| vars.get(&c[1]).cloned().unwrap_or_else(|| c[0].to_string()))
        .into_owned()
}

impl Backend for ScriptedBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion> {
        let fp = &req.fingerprint;
        let text = match self.scripted_lookup(&fp.key, fp.step, &fp.query) {
            Some(body) => fill(body, &req.vars),
            None => format!("Final Answer: {}", fp.query),
        };
        let prompt_tokens = estimate_tokens(&req.system_text) + estimate_tokens(&req.user_text);
        let completion_tokens = estimate_tokens(&text);
        let cost = self.prices.cost(&self.model, prompt_tokens, completion_tokens);
        Ok(Completion { text, usage: UsageRecord { prompt_tokens, completion_tokens, wall_seconds: 0.0, cost } })
    }

    fn model(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::super::Fingerprint;
    use super::*;

    fn req(key: &str, step: usize, query: &str) -> CompletionRequest {
        CompletionRequest::new("s", "u", Fingerprint { key: key.into(), step, query: query.into() })
    }

    const SCRIPT: &str = "\
ignored preamble
>>> route 0 = Retrieve the document
Retriever
>>> route * *
Planner
>>> Controller 1
Action: step_response
Action Input: sys = {{last_handle}}

>>> Controller 0 #0000000000000000
never
";

    #[test]
    fn specific_entries_win() {
        let b = ScriptedBackend::from_text(SCRIPT).unwrap();
        assert_eq!(b.complete(&req("route", 0, "Retrieve  the document")).unwrap().text, "Retriever");
        assert_eq!(b.complete(&req("route", 0, "other")).unwrap().text, "Planner");
        assert_eq!(b.complete(&req("route", 3, "Retrieve the document")).unwrap().text, "Planner");
    }

    #[test]
    fn variables_and_trailing_blank_lines() {
        let b = ScriptedBackend::from_text(SCRIPT).unwrap();
        let mut r = req("Controller", 1, "q");
        r.vars.insert("last_handle".into(), "sys [7]".into());
        assert_eq!(b.complete(&r).unwrap().text, "Action: step_response\nAction Input: sys = sys [7]");
    }

    #[test]
    fn miss_echoes_the_query() {
        let b = ScriptedBackend::from_text(SCRIPT).unwrap();
        let c = b.complete(&req("Critic", 0, "what is G?")).unwrap();
        assert_eq!(c.text, "Final Answer: what is G?");
        assert_eq!(c, b.complete(&req("Critic", 0, "what is G?")).unwrap());
    }

    #[test]
    fn layers_shadow_in_order() {
        let top = Script::parse(">>> route * *\nReasoner\n").unwrap();
        let base = Script::parse(SCRIPT).unwrap();
        let b = ScriptedBackend::new(vec![top, base]);
        assert_eq!(b.complete(&req("route", 0, "Retrieve the document")).unwrap().text, "Reasoner");
    }

    #[test]
    fn bad_headers() {
        assert!(Script::parse(">>> route\nx").is_err());
        assert!(Script::parse(">>> route x\nx").is_err());
        assert!(Script::parse(">>> route 0 ?q\nx").is_err());
    }

    #[test]
    fn hash_is_whitespace_insensitive() {
        assert_eq!(stable_hash("a  b\n c"), stable_hash("a b c"));
        assert_eq!(stable_hash("a").len(), 16);
    }
}
