//! OpenAI-style `/chat/completions` client.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{estimate_tokens, Backend, Completion, CompletionRequest, PriceTable, UsageRecord};
use crate::error::{AgentError, Result};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub url: String,
    pub key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    pub prices: PriceTable,
}

impl HttpConfig {
    /// Reads `AGENTCTL_LLM_URL`, `AGENTCTL_LLM_KEY` and `AGENTCTL_MODEL`.
    pub fn from_env() -> Self {
        HttpConfig {
            url: std::env::var("AGENTCTL_LLM_URL").unwrap_or_else(|_| "https://api.openai.com/v1".into()),
            key: std::env::var("AGENTCTL_LLM_KEY").ok().filter(|k| !k.is_empty()),
            model: std::env::var("AGENTCTL_MODEL").unwrap_or_else(|_| "gpt-3.5-turbo".into()),
            timeout: Duration::from_secs(60),
            retries: 2,
            backoff: Duration::from_millis(500),
            prices: PriceTable::default(),
        }
    }
}

pub struct HttpBackend {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

enum Attempt {
    Done(Completion),
    Retry(String),
    Fail(AgentError),
}

impl HttpBackend {
    pub fn new(cfg: HttpConfig) -> Result<Self> {
        if cfg.key.is_none() {
            return Err(AgentError::BackendAuth("AGENTCTL_LLM_KEY is not set".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| AgentError::Backend(e.to_string()))?;
        Ok(HttpBackend { cfg, client })
    }

    fn attempt(&self, req: &CompletionRequest) -> Attempt {
        let started = Instant::now();
        let body = json!({
            "model": self.cfg.model,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
            "stop": req.stop,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
        });
        let url = format!("{}/chat/completions", self.cfg.url.trim_end_matches('/'));
        let resp = self.client.post(url).bearer_auth(self.cfg.key.as_deref().unwrap_or_default()).json(&body).send();
        let resp = match resp {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() => return Attempt::Retry(e.to_string()),
            Err(e) => return Attempt::Fail(AgentError::Backend(e.to_string())),
        };
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Attempt::Fail(AgentError::BackendAuth(format!("endpoint answered {status}")));
        }
        if status.is_server_error() {
            return Attempt::Retry(format!("endpoint answered {status}"));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Attempt::Fail(AgentError::Backend(format!("endpoint answered {status}: {text}")));
        }
        let parsed: ChatResponse = match resp.json() {
            Ok(p) => p,
            Err(e) => return Attempt::Fail(AgentError::Backend(format!("malformed response: {e}"))),
        };
        let text = parsed.choices.into_iter().next().and_then(|c| c.message.content).unwrap_or_default();
        let (prompt_tokens, completion_tokens) = match parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (estimate_tokens(&req.system_text) + estimate_tokens(&req.user_text), estimate_tokens(&text)),
        };
        let cost = self.cfg.prices.cost(&self.cfg.model, prompt_tokens, completion_tokens);
        Attempt::Done(Completion {
            text,
            usage: UsageRecord {
                prompt_tokens,
                completion_tokens,
                wall_seconds: started.elapsed().as_secs_f64(),
                cost,
            },
        })
    }
}

impl Backend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion> {
        let mut last = String::new();
        let mut waited = 0.0;
        for attempt in 0..=self.cfg.retries {
            if attempt > 0 {
                let delay = self.cfg.backoff * 2u32.pow(attempt - 1);
                waited += delay.as_secs_f64();
                std::thread::sleep(delay);
            }
            match self.attempt(req) {
                Attempt::Done(mut c) => {
                    c.usage.wall_seconds += waited;
                    return Ok(c);
                }
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(msg) => last = msg,
            }
        }
        Err(AgentError::Backend(format!("gave up after {} retries: {last}", self.cfg.retries)))
    }

    fn model(&self) -> &str {
        &self.cfg.model
    }
}

#[cfg(test)]
mod tests {
    use super::super::Fingerprint;
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Serves the given status/body pairs, one per connection.
    fn serve(replies: Vec<(u16, &'static str)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                seen.push(auth);
                let resp = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
            seen
        });
        (url, handle)
    }

    fn cfg(url: String) -> HttpConfig {
        HttpConfig {
            url,
            key: Some("k".into()),
            model: "gpt-3.5-turbo".into(),
            timeout: Duration::from_secs(5),
            retries: 2,
            backoff: Duration::from_millis(1),
            prices: PriceTable::default(),
        }
    }

    fn req() -> CompletionRequest {
        CompletionRequest::new("s", "u", Fingerprint { key: "k".into(), step: 0, query: "q".into() })
    }

    const OK: &str = r#"{"choices":[{"message":{"content":"Final Answer: 1"}}],"usage":{"prompt_tokens":1000,"completion_tokens":200}}"#;

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, h) = serve(vec![(500, "{}"), (503, "{}"), (200, OK)]);
        let c = HttpBackend::new(cfg(url)).unwrap().complete(&req()).unwrap();
        assert_eq!(c.text, "Final Answer: 1");
        assert!((c.usage.cost - 0.0008).abs() < 1e-12);
        assert_eq!(h.join().unwrap(), vec!["authorization: Bearer k"; 3]);
    }

    #[test]
    fn gives_up_after_two_retries() {
        let (url, h) = serve(vec![(500, "{}"), (500, "{}"), (500, "{}")]);
        let e = HttpBackend::new(cfg(url)).unwrap().complete(&req()).unwrap_err();
        assert_eq!(e.class(), "BackendError");
        h.join().unwrap();
    }

    #[test]
    fn auth_failures_are_not_retried() {
        let (url, h) = serve(vec![(401, "{}")]);
        let e = HttpBackend::new(cfg(url)).unwrap().complete(&req()).unwrap_err();
        assert_eq!(e.class(), "BackendAuthError");
        h.join().unwrap();
    }

    #[test]
    fn missing_key() {
        let mut c = cfg("http://127.0.0.1:9".into());
        c.key = None;
        assert_eq!(HttpBackend::new(c).err().unwrap().class(), "BackendAuthError");
    }
}
