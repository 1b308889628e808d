//! Run trace events, shared by metrics, the service stream and trace export.

use serde::{Deserialize, Serialize};

use crate::llm::{meter_run, UsageRecord};
use crate::node::Node;
use crate::plot::PlotPayload;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    UserMessage {
        turn: usize,
        text: String,
    },
    AgentStarted {
        node: Node,
        nested: bool,
        input_digest: String,
    },
    AgentFinished {
        node: Node,
        nested: bool,
        output: String,
        output_digest: String,
        /// `None` is END; absent for nested nodes.
        routed_next: Option<Node>,
        conditional: bool,
    },
    Thought {
        node: Node,
        text: String,
    },
    ToolCall {
        node: Node,
        tool: String,
        args: String,
        args_digest: String,
        ok: bool,
        error_class: Option<String>,
    },
    Observation {
        node: Node,
        tool: String,
        text: String,
    },
    PlotPayload {
        node: Node,
        payload: PlotPayload,
    },
    QuestionToUser {
        question: String,
    },
    CriticVerdict {
        similarity: f64,
        accepted: bool,
        threshold: f64,
        forced: bool,
        candidate: String,
    },
    Plan {
        system_type: String,
        objective: String,
        tools: Vec<String>,
    },
    Debug {
        error_class: String,
        advice: String,
        detected: bool,
        fixed: bool,
    },
    Memory {
        /// `store`, `store_failed`, `hit` or `miss`.
        op: String,
        similarity: Option<f64>,
        answer: Option<String>,
    },
    Delivery {
        requested: String,
        delivered: String,
        ok: bool,
    },
    Usage {
        node: String,
        prompt_tokens: u64,
        completion_tokens: u64,
        wall_seconds: f64,
        cost: f64,
    },
    FinalAnswer {
        text: String,
    },
    Error {
        class: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_id: String,
    pub events: Vec<SessionEvent>,
}

impl RunTrace {
    pub fn new(run_id: impl Into<String>) -> Self {
        RunTrace { run_id: run_id.into(), events: Vec::new() }
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Event> {
        self.events.iter().map(|e| &e.event)
    }

    /// Line-delimited JSON, one event per line.
    pub fn to_jsonl(&self) -> String {
        self.events.iter().map(|e| serde_json::to_string(e).expect("event serializes") + "\n").collect()
    }

    pub fn from_jsonl(run_id: &str, text: &str) -> serde_json::Result<Self> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<serde_json::Result<_>>()?;
        Ok(RunTrace { run_id: run_id.into(), events })
    }

    /// Traces of the individual turns, split at user messages.
    pub fn turns(&self) -> Vec<RunTrace> {
        let mut out: Vec<RunTrace> = Vec::new();
        for e in &self.events {
            if matches!(e.event, Event::UserMessage { .. }) || out.is_empty() {
                out.push(RunTrace::new(format!("{}#{}", self.run_id, out.len())));
            }
            out.last_mut().unwrap().events.push(e.clone());
        }
        out
    }

    /// Top-level agent path.
    pub fn node_path(&self) -> Vec<Node> {
        self.iter()
            .filter_map(|e| match e {
                Event::AgentStarted { node, nested: false, .. } => Some(*node),
                _ => None,
            })
            .collect()
    }

    pub fn final_answer(&self) -> Option<&str> {
        self.iter().rev().find_map(|e| match e {
            Event::FinalAnswer { text } => Some(text.as_str()),
            _ => None,
        })
    }

    pub fn usage(&self) -> UsageRecord {
        let records: Vec<UsageRecord> = self
            .iter()
            .filter_map(|e| match e {
                Event::Usage { prompt_tokens, completion_tokens, wall_seconds, cost, .. } => Some(UsageRecord {
                    prompt_tokens: *prompt_tokens,
                    completion_tokens: *completion_tokens,
                    wall_seconds: *wall_seconds,
                    cost: *cost,
                }),
                _ => None,
            })
            .collect();
        meter_run(&records)
    }

    pub fn plots(&self) -> Vec<&PlotPayload> {
        self.iter()
            .filter_map(|e| match e {
                Event::PlotPayload { payload, .. } => Some(payload),
                _ => None,
            })
            .collect()
    }

    /// Copy with timing fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunTrace {
        let mut t = self.clone();
        for e in &mut t.events {
            if let Event::Usage { wall_seconds, .. } = &mut e.event {
                *wall_seconds = 0.0;
            }
        }
        t
    }
}

/// Sequenced, append-only event log with an optional live subscriber.
pub struct Recorder {
    session_id: String,
    events: Vec<SessionEvent>,
    sink: Option<Box<dyn FnMut(&SessionEvent) + Send>>,
}

impl Recorder {
    pub fn new(session_id: impl Into<String>) -> Self {
        Recorder { session_id: session_id.into(), events: Vec::new(), sink: None }
    }

    pub fn set_sink(&mut self, sink: Option<Box<dyn FnMut(&SessionEvent) + Send>>) {
        self.sink = sink;
    }

    pub fn emit(&mut self, event: Event) {
        let e = SessionEvent { session_id: self.session_id.clone(), seq: self.events.len() as u64, event };
        if let Some(s) = self.sink.as_mut() {
            s(&e);
        }
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn trace(&self) -> RunTrace {
        RunTrace { run_id: self.session_id.clone(), events: self.events.clone() }
    }

    pub fn since(&self, start: usize) -> RunTrace {
        RunTrace { run_id: self.session_id.clone(), events: self.events[start..].to_vec() }
    }
}

impl std::fmt::Debug for Recorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Recorder").field("session_id", &self.session_id).field("events", &self.events.len()).finish()
    }
}
