//! Web search behind a fixture table or a pluggable HTTP endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub snippet: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchFixture {
    pub query: String,
    pub snippet: String,
    pub source: String,
}

#[derive(Debug, Clone, Default)]
pub enum SearchClient {
    #[default]
    Unconfigured,
    Fixtures(Vec<SearchFixture>),
    /// GET `<url>?q=<query>` answering a JSON array of `{snippet, source}`.
    Http(String),
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl SearchClient {
    /// Uses `AGENTCTL_SEARCH_URL` when set.
    pub fn from_env() -> Self {
        match std::env::var("AGENTCTL_SEARCH_URL") {
            Ok(u) if !u.is_empty() => SearchClient::Http(u),
            _ => SearchClient::Unconfigured,
        }
    }

    pub fn search(&self, query: &str) -> Result<Vec<SearchResult>> {
        match self {
            SearchClient::Unconfigured => Err(AgentError::SearchUnavailable),
            SearchClient::Fixtures(f) => {
                let q = norm(query);
                let hit = |pred: &dyn Fn(&str) -> bool| -> Vec<SearchResult> {
                    f.iter()
                        .filter(|x| pred(&norm(&x.query)))
                        .map(|x| SearchResult { snippet: x.snippet.clone(), source: x.source.clone() })
                        .collect()
                };
                let exact = hit(&|fq| fq == q);
                if !exact.is_empty() {
                    return Ok(exact);
                }
                Ok(hit(&|fq| !fq.is_empty() && (q.contains(fq) || fq.contains(&q))))
            }
            SearchClient::Http(url) => {
                let url = reqwest::Url::parse_with_params(url, &[("q", query)])
                    .map_err(|e| AgentError::Backend(format!("search url: {e}")))?;
                let resp = reqwest::blocking::get(url).map_err(|e| AgentError::Backend(format!("search: {e}")))?;
                if !resp.status().is_success() {
                    return Err(AgentError::Backend(format!("search endpoint answered {}", resp.status())));
                }
                let results: Vec<SearchResult> =
                    resp.json().map_err(|e| AgentError::Backend(format!("search: {e}")))?;
                Ok(results.into_iter().filter(|r| !r.source.trim().is_empty()).collect())
            }
        }
    }
}

pub fn observation(results: &[SearchResult]) -> String {
    if results.is_empty() {
        return "No results found.".into();
    }
    results.iter().map(|r| format!("{} (source: {})", r.snippet, r.source)).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixtures() -> SearchClient {
        SearchClient::Fixtures(vec![SearchFixture {
            query: "Ackermann formula".into(),
            snippet: "K = [0 ... 1] C^-1 phi(A) for a single-input controllable pair.".into(),
            source: "textbook:ogata-modern-control".into(),
        }])
    }

    #[test]
    fn fixture_lookup() {
        let r = fixtures().search("ackermann   formula").unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.iter().all(|x| !x.source.is_empty()));
        assert_eq!(fixtures().search("What is the Ackermann formula?").unwrap().len(), 1);
        assert!(fixtures().search("bode").unwrap().is_empty());
    }

    #[test]
    fn unconfigured() {
        assert_eq!(SearchClient::Unconfigured.search("x").unwrap_err().class(), "SearchUnavailable");
    }
}
