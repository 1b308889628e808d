use agentctl_control::ControlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("ArgParseError: {message} (at {start}..{end})")]
    ArgParse { message: String, start: usize, end: usize },
    #[error("UnknownTool: {0}")]
    UnknownTool(String),
    #[error("TemplateError: unbound placeholder {{{0}}}")]
    Template(String),
    #[error("ParseFailure: completion has neither an action nor a final answer")]
    ParseFailure,
    #[error("NodeStalled: {node} produced no final answer within {limit} steps")]
    NodeStalled { node: String, limit: usize },
    #[error("RunAborted: step budget of {0} completions exhausted")]
    RunAborted(usize),
    #[error("PlanFailure: {0}")]
    PlanFailure(String),
    #[error("BackendAuthError: {0}")]
    BackendAuth(String),
    #[error("BackendError: {0}")]
    Backend(String),
    #[error("NoCorpus: the document index is empty")]
    NoCorpus,
    #[error("IngestError: cannot read {path}: {reason}")]
    Ingest { path: String, reason: String },
    #[error("SearchUnavailable: no search client or fixtures configured")]
    SearchUnavailable,
    #[error("StoreError: {0}")]
    Store(String),
    #[error("MissingScriptedReply: no scripted answer left for {0:?}")]
    MissingScriptedReply(String),
    #[error("HumanTimeout: no reply within {0} s")]
    HumanTimeout(u64),
    #[error("NotImplemented: {0}")]
    NotImplemented(&'static str),
    #[error("ScenarioError: {path}: {message}")]
    Scenario { path: String, message: String },
    #[error("EmptyEvaluation: no runs to score")]
    EmptyEvaluation,
    #[error("MetricUndefined: no run exercised {0}")]
    MetricUndefined(&'static str),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("Busy: a turn is already running in session {0}")]
    Busy(String),
    #[error("NotFound: unknown session {0}")]
    NotFound(String),
    #[error("NoQuestion: session {0} has no pending question")]
    NoQuestion(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AgentError {
    /// Error class token, as used in trace events and debugger rules.
    pub fn class(&self) -> &'static str {
        match self {
            AgentError::Control(e) => e.class(),
            AgentError::ArgParse { .. } => "ArgParseError",
            AgentError::UnknownTool(_) => "UnknownTool",
            AgentError::Template(_) => "TemplateError",
            AgentError::ParseFailure => "ParseFailure",
            AgentError::NodeStalled { .. } => "NodeStalled",
            AgentError::RunAborted(_) => "RunAborted",
            AgentError::PlanFailure(_) => "PlanFailure",
            AgentError::BackendAuth(_) => "BackendAuthError",
            AgentError::Backend(_) => "BackendError",
            AgentError::NoCorpus => "NoCorpus",
            AgentError::Ingest { .. } => "IngestError",
            AgentError::SearchUnavailable => "SearchUnavailable",
            AgentError::Store(_) => "StoreError",
            AgentError::MissingScriptedReply(_) => "MissingScriptedReply",
            AgentError::HumanTimeout(_) => "HumanTimeout",
            AgentError::NotImplemented(_) => "NotImplemented",
            AgentError::Scenario { .. } => "ScenarioError",
            AgentError::EmptyEvaluation => "EmptyEvaluation",
            AgentError::MetricUndefined(_) => "MetricUndefined",
            AgentError::InvalidConfig(_) => "InvalidConfig",
            AgentError::Busy(_) => "Busy",
            AgentError::NotFound(_) => "NotFound",
            AgentError::NoQuestion(_) => "NoQuestion",
            AgentError::Io(_) => "IoError",
        }
    }

    pub fn arg(message: impl Into<String>, start: usize, end: usize) -> Self {
        AgentError::ArgParse { message: message.into(), start, end }
    }
}

pub type Result<T> = std::result::Result<T, AgentError>;
