//! HTTP front door: sessions, streamed turns, question answers, traces and
//! batch evaluation.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | `{"config": {...}}` (optional) | `{"session_id"}` |
//! | POST | `/sessions/{id}/messages` | `{"text"}` | `text/event-stream` of session events |
//! | POST | `/sessions/{id}/answers` | `{"reply"}` | `{"ok": true}` |
//! | GET | `/sessions/{id}/trace` | | line-delimited JSON events |
//! | POST | `/eval` | `{"scenarios", "runs", "report"}` | `{"reports", "rendered"}` |
//!
//! Each SSE frame carries the event kind as its `event:` name and the
//! serialized session event as `data:`. Errors answer
//! `{"error": <class>, "message": <text>}`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::aux_tools::human::{HumanChannel, ReplySlot};
use crate::error::AgentError;
use crate::eval::{evaluate_set, parse_scenarios, render_report, BackendChoice, EvalOptions, ReportFormat};
use crate::graph::{Config, Resources, Session};
use crate::llm::Backend;
use crate::trace::{RunTrace, SessionEvent};

struct SessionSlot {
    session: Mutex<Session>,
    busy: AtomicBool,
    reply: ReplySlot,
    /// Mirror of every event streamed so far, readable while a turn runs.
    events: Arc<Mutex<Vec<SessionEvent>>>,
}

/// Shared service state.
pub struct AppState {
    backend: Arc<dyn Backend>,
    resources: Resources,
    config: Config,
    sessions: Mutex<HashMap<String, Arc<SessionSlot>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(backend: Arc<dyn Backend>, resources: Resources, config: Config) -> Arc<Self> {
        Arc::new(AppState {
            backend,
            resources,
            config,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| AgentError::NotFound(id.to_string()).into())
    }
}

pub struct ApiError(AgentError);

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            AgentError::NotFound(_) => StatusCode::NOT_FOUND,
            AgentError::Busy(_) | AgentError::NoQuestion(_) => StatusCode::CONFLICT,
            AgentError::InvalidConfig(_) | AgentError::Scenario { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.0.class(), "message": self.0.to_string()}))).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/answers", post(answer_question))
        .route("/sessions/{id}/trace", get(get_trace))
        .route("/eval", post(run_eval))
        .with_state(state)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    #[serde(default)]
    config: Option<serde_json::Value>,
}

async fn create_session(State(st): State<Arc<AppState>>, body: Option<Json<CreateBody>>) -> Result<Response, ApiError> {
    let overrides = body.and_then(|Json(b)| b.config).unwrap_or(serde_json::Value::Null);
    let config = st.config.with_overrides(&overrides)?;
    let id = format!("s{}", st.next_id.fetch_add(1, Ordering::SeqCst));
    let reply = ReplySlot::new();
    let human = HumanChannel::Service { slot: reply.clone(), timeout: Duration::from_secs(config.human_timeout_secs) };
    let session = Session::new(id.clone(), config, st.backend.clone(), st.resources.clone(), human);
    let slot = SessionSlot {
        session: Mutex::new(session),
        busy: AtomicBool::new(false),
        reply,
        events: Arc::new(Mutex::new(Vec::new())),
    };
    st.sessions.lock().unwrap().insert(id.clone(), Arc::new(slot));
    Ok((StatusCode::CREATED, Json(json!({"session_id": id}))).into_response())
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
}

struct BusyGuard(Arc<SessionSlot>);

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::SeqCst);
    }
}

fn kind_of(e: &SessionEvent) -> String {
    serde_json::to_value(&e.event).ok().and_then(|v| v["kind"].as_str().map(String::from)).unwrap_or_default()
}

async fn post_message(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<MessageBody>,
) -> Result<Response, ApiError> {
    let slot = st.slot(&id)?;
    if body.text.trim().is_empty() {
        return Err(AgentError::InvalidConfig("message text is empty".into()).into());
    }
    if slot.busy.compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst).is_err() {
        return Err(AgentError::Busy(id).into());
    }
    let guard = BusyGuard(slot.clone());
    let (tx, rx) = tokio::sync::mpsc::unbounded_channel::<SessionEvent>();
    tokio::task::spawn_blocking(move || {
        let guard = guard;
        let slot = guard.0.clone();
        let mut session = slot.session.lock().unwrap();
        let mirror = slot.events.clone();
        session.set_sink(Some(Box::new(move |e: &SessionEvent| {
            mirror.lock().unwrap().push(e.clone());
            let _ = tx.send(e.clone());
        })));
        let _ = session.run_turn(&body.text);
        session.set_sink(None);
        drop(session);
        drop(guard);
    });
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        let e = rx.recv().await?;
        let frame = SseEvent::default().event(kind_of(&e)).data(serde_json::to_string(&e).expect("event serializes"));
        Some((Ok::<_, Infallible>(frame), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()).into_response())
}

#[derive(Deserialize)]
struct AnswerBody {
    reply: String,
}

async fn answer_question(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(body): Json<AnswerBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let slot = st.slot(&id)?;
    slot.reply.answer(&body.reply).map_err(|_| AgentError::NoQuestion(id))?;
    Ok(Json(json!({"ok": true})))
}

async fn get_trace(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = st.slot(&id)?;
    let trace = RunTrace { run_id: id, events: slot.events.lock().unwrap().clone() };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], trace.to_jsonl()).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalBody {
    /// Scenario file contents.
    scenarios: String,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default = "default_report")]
    report: String,
    /// Use the service backend instead of the scenario scripts.
    #[serde(default)]
    live: bool,
}

fn default_runs() -> usize {
    1
}

fn default_report() -> String {
    "text".into()
}

async fn run_eval(
    State(st): State<Arc<AppState>>,
    Json(body): Json<EvalBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let format: ReportFormat = body.report.parse()?;
    let set = parse_scenarios(&body.scenarios, "request")?;
    let opts = EvalOptions {
        runs: body.runs,
        backend: if body.live { BackendChoice::Shared(st.backend.clone()) } else { BackendChoice::Scripted },
        base_config: st.config.clone(),
    };
    let (reports, _) = tokio::task::spawn_blocking(move || evaluate_set(&set, &opts))
        .await
        .map_err(|e| AgentError::Backend(e.to_string()))??;
    let rendered = render_report(&reports, format);
    Ok(Json(json!({"reports": reports, "rendered": rendered})))
}

/// Serves until ctrl-c.
pub async fn serve(addr: std::net::SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
