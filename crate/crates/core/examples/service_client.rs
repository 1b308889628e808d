//! Starts the HTTP service in-process on a free port and drives one session
//! as a browser client would: create, stream a turn over server-sent events,
//! answer the format question, then fetch the stored trace.
//!
//! ```text
//! cargo run -p agentctl --example service_client
//! ```

use std::sync::Arc;

use agentctl::eval::{load_scenarios, resources_for};
use agentctl::service::{router, AppState};
use agentctl::Config;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = load_scenarios(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/appendix_c.toml"))?;
    let config = Config { out_dir: std::env::temp_dir().join("agentctl-service"), ..Config::default() };
    let state = AppState::new(Arc::new(set.scripted_backend(0)), resources_for(&set, &[0]), config);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(state)).await });

    let http = reqwest::Client::new();
    let created: Value = http.post(format!("{base}/sessions")).json(&json!({})).send().await?.json().await?;
    let id = created["session_id"].as_str().unwrap_or_default().to_string();
    println!("session {id}");

    let mut resp = http
        .post(format!("{base}/sessions/{id}/messages"))
        .json(&json!({"text": set.scenarios[0].query}))
        .send()
        .await?;
    let mut buf = String::new();
    let mut count = 0;
    while let Some(chunk) = resp.chunk().await? {
        buf.push_str(&String::from_utf8_lossy(&chunk));
        while let Some(end) = buf.find("\n\n") {
            let frame: String = buf.drain(..end + 2).collect();
            let kind = frame.lines().find_map(|l| l.strip_prefix("event:")).unwrap_or("").trim().to_string();
            let data: Value = frame
                .lines()
                .find_map(|l| l.strip_prefix("data:"))
                .and_then(|d| serde_json::from_str(d.trim()).ok())
                .unwrap_or(Value::Null);
            if kind.is_empty() {
                continue;
            }
            count += 1;
            match kind.as_str() {
                "agent_started" => println!("{:>3} {kind:<15} {}", data["seq"], data["node"]),
                "tool_call" => println!("{:>3} {kind:<15} {}", data["seq"], data["tool"]),
                "question_to_user" => {
                    println!("{:>3} {kind:<15} {}", data["seq"], data["question"]);
                    http.post(format!("{base}/sessions/{id}/answers")).json(&json!({"reply": "pdf"})).send().await?;
                    println!("    answered pdf");
                }
                "final_answer" => println!("{:>3} {kind:<15}\n{}", data["seq"], data["text"].as_str().unwrap_or("")),
                _ => {}
            }
        }
    }
    let trace = http.get(format!("{base}/sessions/{id}/trace")).send().await?.text().await?;
    println!("\nstreamed {count} events, trace holds {}", trace.lines().count());
    Ok(())
}
