use std::path::PathBuf;
use std::sync::Arc;

use agentctl::eval::{load_scenarios, resources_for, ScenarioSet};
use agentctl::service::{router, AppState};
use agentctl::trace::{Event, RunTrace, SessionEvent};
use agentctl::{Config, Node};
use serde_json::{json, Value};

struct Frame {
    event: String,
    data: SessionEvent,
}

fn retrieval_scenario() -> ScenarioSet {
    load_scenarios(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/appendix_c.toml")).unwrap()
}

/// Serves the retrieval scenario's script and documents on an ephemeral port.
async fn start(config: Config) -> String {
    let set = retrieval_scenario();
    let backend = Arc::new(set.scripted_backend(0));
    let state = AppState::new(backend, resources_for(&set, &[0]), config);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    format!("http://{addr}")
}

fn test_config() -> Config {
    Config { out_dir: std::env::temp_dir().join("agentctl-service-test"), ..Config::default() }
}

async fn create(client: &reqwest::Client, base: &str, body: Value) -> reqwest::Response {
    client.post(format!("{base}/sessions")).json(&body).send().await.unwrap()
}

async fn new_session(client: &reqwest::Client, base: &str) -> String {
    let r = create(client, base, json!({})).await;
    assert_eq!(r.status(), 201);
    r.json::<Value>().await.unwrap()["session_id"].as_str().unwrap().to_string()
}

fn parse_frames(buf: &mut String, out: &mut Vec<Frame>) {
    while let Some(end) = buf.find("\n\n") {
        let block: String = buf.drain(..end + 2).collect();
        let mut event = String::new();
        let mut data = String::new();
        for line in block.lines() {
            if let Some(v) = line.strip_prefix("event:") {
                event = v.trim().to_string();
            } else if let Some(v) = line.strip_prefix("data:") {
                data.push_str(v.trim_start());
            }
        }
        if !data.is_empty() {
            out.push(Frame { event, data: serde_json::from_str(&data).unwrap() });
        }
    }
}

/// Streams one turn, answering the format question with `reply` and
/// checking on the way that a second turn is refused.
async fn stream_turn(client: &reqwest::Client, base: &str, id: &str, reply: &str) -> Vec<Frame> {
    let query = retrieval_scenario().scenarios[0].query.clone();
    let mut resp =
        client.post(format!("{base}/sessions/{id}/messages")).json(&json!({"text": query})).send().await.unwrap();
    assert_eq!(resp.status(), 200);
    assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
    let mut buf = String::new();
    let mut frames = Vec::new();
    let mut answered = false;
    while let Some(chunk) = resp.chunk().await.unwrap() {
        buf.push_str(std::str::from_utf8(&chunk).unwrap());
        parse_frames(&mut buf, &mut frames);
        if !answered && frames.iter().any(|f| f.event == "question_to_user") {
            let busy = client
                .post(format!("{base}/sessions/{id}/messages"))
                .json(&json!({"text": "again"}))
                .send()
                .await
                .unwrap();
            assert_eq!(busy.status(), 409);
            assert_eq!(busy.json::<Value>().await.unwrap()["error"], "Busy");
            let ok = client
                .post(format!("{base}/sessions/{id}/answers"))
                .json(&json!({"reply": reply}))
                .send()
                .await
                .unwrap();
            assert_eq!(ok.status(), 200);
            answered = true;
        }
    }
    assert!(answered, "no question was asked");
    frames
}

#[tokio::test(flavor = "multi_thread")]
async fn streamed_turn_matches_stored_trace() {
    let base = start(test_config()).await;
    let client = reqwest::Client::new();
    let id = new_session(&client, &base).await;
    let frames = stream_turn(&client, &base, &id, "pdf").await;

    assert_eq!(frames.last().unwrap().event, "final_answer");
    assert!(frames.iter().any(|f| f.event == "plot_payload"));
    assert!(frames.windows(2).all(|w| w[0].data.seq < w[1].data.seq));
    for f in &frames {
        assert_eq!(f.data.session_id, id);
        assert_eq!(serde_json::to_value(&f.data.event).unwrap()["kind"], f.event.as_str());
    }
    let q = frames.iter().find_map(|f| match &f.data.event {
        Event::QuestionToUser { question } => Some(question.clone()),
        _ => None,
    });
    assert!(q.unwrap().contains("format"));

    let resp = client.get(format!("{base}/sessions/{id}/trace")).send().await.unwrap();
    assert_eq!(resp.headers()["content-type"], "application/x-ndjson");
    let trace = RunTrace::from_jsonl(&id, &resp.text().await.unwrap()).unwrap();
    assert_eq!(trace.events.len(), frames.len());
    let streamed: Vec<SessionEvent> = frames.into_iter().map(|f| f.data).collect();
    assert_eq!(trace.events, streamed);
    use Node::*;
    assert_eq!(trace.node_path(), [Supervisor, Retriever, Planner, Controller, Critic, Memory, Communicator]);
    assert!(trace.iter().any(|e| matches!(e, Event::Delivery { delivered, ok: true, .. } if delivered == "pdf")));
}

#[tokio::test(flavor = "multi_thread")]
async fn session_errors() {
    let base = start(test_config()).await;
    let client = reqwest::Client::new();
    let a = new_session(&client, &base).await;
    let b = new_session(&client, &base).await;
    assert_ne!(a, b);

    let r = client.post(format!("{base}/sessions/nope/messages")).json(&json!({"text": "hi"})).send().await.unwrap();
    assert_eq!(r.status(), 404);
    assert_eq!(r.json::<Value>().await.unwrap()["error"], "NotFound");
    let r = client.get(format!("{base}/sessions/nope/trace")).send().await.unwrap();
    assert_eq!(r.status(), 404);
    let r = client.post(format!("{base}/sessions/nope/answers")).json(&json!({"reply": "pdf"})).send().await.unwrap();
    assert_eq!(r.status(), 404);

    let r = client.post(format!("{base}/sessions/{a}/answers")).json(&json!({"reply": "pdf"})).send().await.unwrap();
    assert_eq!(r.status(), 409);
    assert_eq!(r.json::<Value>().await.unwrap()["error"], "NoQuestion");

    let r = create(&client, &base, json!({"config": {"critic_threshold": 1.5}})).await;
    assert_eq!(r.status(), 400);
    let r = create(&client, &base, json!({"config": {"no_such_key": 1}})).await;
    assert_eq!(r.status(), 400);

    let r = client.get(format!("{base}/sessions/{b}/trace")).send().await.unwrap();
    assert_eq!(r.status(), 200);
    assert_eq!(r.text().await.unwrap(), "");
}

#[tokio::test(flavor = "multi_thread")]
async fn threshold_override_reaches_the_critic() {
    let base = start(test_config()).await;
    let client = reqwest::Client::new();
    let r = create(&client, &base, json!({"config": {"critic_threshold": 0.25}})).await;
    assert_eq!(r.status(), 201);
    let id = r.json::<Value>().await.unwrap()["session_id"].as_str().unwrap().to_string();
    let frames = stream_turn(&client, &base, &id, "pdf").await;
    let thresholds: Vec<f64> = frames
        .iter()
        .filter_map(|f| match f.data.event {
            Event::CriticVerdict { threshold, .. } => Some(threshold),
            _ => None,
        })
        .collect();
    assert!(!thresholds.is_empty());
    assert!(thresholds.iter().all(|t| *t == 0.25));
}

#[tokio::test(flavor = "multi_thread")]
async fn eval_endpoint_renders_reports() {
    let base = start(test_config()).await;
    let client = reqwest::Client::new();
    let text =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/fixtures.toml")).unwrap();
    let r = client
        .post(format!("{base}/eval"))
        .json(&json!({"scenarios": text, "runs": 2, "report": "csv"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 200);
    let body: Value = r.json().await.unwrap();
    let reports = body["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    assert_eq!(reports[4]["category"], "Overall");
    assert_eq!(reports[4]["metrics"]["m_t"], 1.0);
    assert!(body["rendered"].as_str().unwrap().lines().count() >= 6);

    let r = client.post(format!("{base}/eval")).json(&json!({"scenarios": ""})).send().await.unwrap();
    assert_eq!(r.status(), 400);
    assert_eq!(r.json::<Value>().await.unwrap()["error"], "ScenarioError");
}
