//! The supervisor-routed agent network: node dispatch, the ReAct loop,
//! critic gating and memory routing.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::args::{parse_action_input, Value};
use crate::aux_tools::corpus::CorpusIndex;
use crate::aux_tools::critic::{critic_tool, CriticVerdict, DEFAULT_THRESHOLD};
use crate::aux_tools::debug::{debug_advise, Advice};
use crate::aux_tools::human::{HumanChannel, DEFAULT_TIMEOUT_SECS};
use crate::aux_tools::memory::{MemoryRecord, MemoryStore, Recall, DEFAULT_RECALL_THRESHOLD};
use crate::aux_tools::pdf::{text_to_pdf, LINES_PER_PAGE};
use crate::aux_tools::reason::{reason_tool, Mode};
use crate::aux_tools::search::{self, SearchClient};
use crate::error::{AgentError, Result};
use crate::llm::{stable_hash, Backend, CompletionRequest, Fingerprint};
use crate::node::{EdgeKind, Node};
use crate::planner::{planner_tool, Plan};
use crate::plot::PlotPayload;
use crate::prompt::{node_prompt, supervisor_prompt};
use crate::react::{parse_react, scratchpad_entry, Parsed};
use crate::registry::Registry;
use crate::tools::{canonical_tool, dispatch_control, tool_descriptions};
use crate::trace::{Event, Recorder, RunTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Backend completions allowed per turn.
    pub max_steps: usize,
    /// Completions allowed per node visit.
    pub max_inner: usize,
    /// Critic rejections sent back to the Controller before a forced accept.
    pub max_revisions: usize,
    pub critic_threshold: f64,
    pub recall_threshold: f64,
    pub retriever_k: usize,
    pub human_timeout_secs: u64,
    pub lines_per_page: usize,
    /// Where delivered PDFs are written.
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_steps: 40,
            max_inner: 8,
            max_revisions: 2,
            critic_threshold: DEFAULT_THRESHOLD,
            recall_threshold: DEFAULT_RECALL_THRESHOLD,
            retriever_k: 3,
            human_timeout_secs: DEFAULT_TIMEOUT_SECS,
            lines_per_page: LINES_PER_PAGE,
            out_dir: std::env::temp_dir().join("agentctl"),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AgentError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.critic_threshold) {
            return bad("critic_threshold must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.recall_threshold) {
            return bad("recall_threshold must lie in [0, 1]");
        }
        if self.max_steps == 0 || self.max_inner == 0 {
            return bad("max_steps and max_inner must be positive");
        }
        if self.retriever_k == 0 || self.lines_per_page == 0 {
            return bad("retriever_k and lines_per_page must be positive");
        }
        Ok(())
    }

    /// Applies a JSON object of field overrides and validates the result.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Config> {
        let mut base = serde_json::to_value(self).expect("config serializes");
        match overrides {
            serde_json::Value::Null => {}
            serde_json::Value::Object(m) => {
                for (k, v) in m {
                    base[k] = v.clone();
                }
            }
            _ => return Err(AgentError::InvalidConfig("overrides must be an object".into())),
        }
        let cfg: Config = serde_json::from_value(base).map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Agent,
    Tool,
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub agent_name: Option<String>,
    pub content: String,
    pub timestamp: u64,
}

impl Message {
    fn new(role: Role, agent_name: Option<&str>, content: &str) -> Self {
        let content = if content.trim().is_empty() { "(no output)" } else { content };
        Message {
            role,
            agent_name: agent_name.map(String::from),
            content: content.to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

/// Shared tool state: document index, search client and memory store.
#[derive(Debug, Clone)]
pub struct Resources {
    pub corpus: Arc<CorpusIndex>,
    pub search: Arc<SearchClient>,
    pub memory: Arc<MemoryStore>,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            corpus: Arc::new(CorpusIndex::new()),
            search: Arc::new(SearchClient::Unconfigured),
            memory: Arc::new(MemoryStore::in_memory()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    pub final_answer: String,
    pub trace: RunTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MemoryMode {
    Recall,
    Store,
}

#[derive(Debug)]
struct Turn {
    index: usize,
    query: String,
    steps: usize,
    route_visits: usize,
    memory_missed: bool,
    candidate: Option<String>,
    accepted: Option<String>,
    revisions: usize,
    requested: Option<String>,
    delivered: Option<String>,
    first_message: usize,
}

#[derive(Debug, Default)]
struct Visit {
    answer: String,
    stalled: bool,
    critic: Option<CriticVerdict>,
    plan: Option<Plan>,
    recall: Option<Recall>,
    stored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DebugKind {
    Parse,
    Tool,
}

/// One tool outcome inside a node visit.
struct Dispatched {
    observation: String,
    error_class: Option<String>,
}

fn normalize_format(reply: &str) -> String {
    let r = reply.trim().to_lowercase();
    for (needle, fmt) in
        [("pdf", "pdf"), ("speech", "speech"), ("audio", "speech"), ("transl", "translation"), ("text", "text")]
    {
        if r.contains(needle) {
            return fmt.to_string();
        }
    }
    r
}

/// Accepts `X`, `Route to X` or `<Route to X>` where X is one of `options`.
pub fn parse_route(reply: &str, options: &[Node]) -> Option<Node> {
    let line = reply.lines().map(str::trim).find(|l| !l.is_empty())?;
    let mut s = line.trim_start_matches('<').trim_end_matches('.').trim_end_matches('>').trim();
    if s.len() >= 9 && s[..9].eq_ignore_ascii_case("route to ") {
        s = s[9..].trim();
    }
    let n: Node = s.parse().ok()?;
    options.contains(&n).then_some(n)
}

fn is_fatal(e: &AgentError) -> bool {
    matches!(e, AgentError::RunAborted(_) | AgentError::Backend(_) | AgentError::BackendAuth(_))
}

pub struct Session {
    pub id: String,
    pub config: Config,
    backend: Arc<dyn Backend>,
    pub resources: Resources,
    pub human: HumanChannel,
    pub registry: Registry,
    messages: Vec<Message>,
    recorder: Recorder,
    turns: usize,
    pub last_plot: Option<PlotPayload>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session").field("id", &self.id).field("turns", &self.turns).finish()
    }
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        config: Config,
        backend: Arc<dyn Backend>,
        resources: Resources,
        human: HumanChannel,
    ) -> Self {
        let id = id.into();
        Session {
            recorder: Recorder::new(id.clone()),
            id,
            config,
            backend,
            resources,
            human,
            registry: Registry::new(),
            messages: Vec::new(),
            turns: 0,
            last_plot: None,
        }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn trace(&self) -> RunTrace {
        self.recorder.trace()
    }

    pub fn event_count(&self) -> usize {
        self.recorder.len()
    }

    /// Events recorded from index `start` on.
    pub fn trace_since(&self, start: usize) -> RunTrace {
        self.recorder.since(start)
    }

    /// Swaps the completion backend between turns.
    pub fn set_backend(&mut self, backend: Arc<dyn Backend>) {
        self.backend = backend;
    }

    /// Live subscriber called for every event as it is recorded.
    pub fn set_sink(&mut self, sink: Option<Box<dyn FnMut(&crate::trace::SessionEvent) + Send>>) {
        self.recorder.set_sink(sink);
    }

    fn emit(&mut self, e: Event) {
        self.recorder.emit(e);
    }

    /// Runs one user query to END. On error the partial trace stays in the
    /// session and an `error` event closes the turn.
    pub fn run_turn(&mut self, query: &str) -> Result<TurnOutcome> {
        let query = query.trim();
        if query.is_empty() {
            return Err(AgentError::InvalidConfig("query is empty".into()));
        }
        let start = self.recorder.len();
        let index = self.turns;
        self.turns += 1;
        self.emit(Event::UserMessage { turn: index, text: query.to_string() });
        self.messages.push(Message::new(Role::User, None, query));
        let mut turn = Turn {
            index,
            query: query.to_string(),
            steps: 0,
            route_visits: 0,
            memory_missed: false,
            candidate: None,
            accepted: None,
            revisions: 0,
            requested: None,
            delivered: None,
            first_message: self.messages.len() - 1,
        };
        match self.drive(&mut turn) {
            Ok(answer) => Ok(TurnOutcome { final_answer: answer, trace: self.recorder.since(start) }),
            Err(e) => {
                self.emit(Event::Error { class: e.class().into(), message: e.to_string() });
                Err(e)
            }
        }
    }

    fn drive(&mut self, turn: &mut Turn) -> Result<String> {
        let mut current = Node::Supervisor;
        let mut memory_mode = MemoryMode::Recall;
        loop {
            let input = self.node_input(turn, current, memory_mode);
            self.emit(Event::AgentStarted { node: current, nested: false, input_digest: stable_hash(&input) });
            let (output, next) = match current {
                Node::Supervisor => {
                    let n = self.supervisor(turn)?;
                    memory_mode = MemoryMode::Recall;
                    (format!("<Route to {n}>"), Some(n))
                }
                Node::Retriever | Node::Researcher | Node::Reasoner => {
                    (self.react(turn, current, current.name(), &input, false)?.answer, Some(Node::Planner))
                }
                Node::Planner => (self.react(turn, current, "Planner", &input, false)?.answer, Some(Node::Controller)),
                Node::Controller | Node::Debugger => {
                    let v = self.react(turn, Node::Controller, "Controller", &input, false)?;
                    turn.candidate = Some(v.answer.clone());
                    (v.answer, Some(Node::Critic))
                }
                Node::Critic => {
                    let v = self.react(turn, current, "Critic", &input, false)?;
                    let candidate = turn.candidate.clone().unwrap_or_default();
                    let verdict =
                        v.critic.unwrap_or_else(|| critic_tool(&turn.query, &candidate, self.config.critic_threshold));
                    let forced = !verdict.accepted && turn.revisions >= self.config.max_revisions;
                    self.emit(Event::CriticVerdict {
                        similarity: verdict.similarity,
                        accepted: verdict.accepted,
                        threshold: verdict.threshold,
                        forced,
                        candidate: candidate.clone(),
                    });
                    if verdict.accepted || forced {
                        turn.accepted = Some(candidate);
                        memory_mode = MemoryMode::Store;
                        (v.answer, Some(Node::Memory))
                    } else {
                        turn.revisions += 1;
                        (format!("{}\n{}", v.answer, verdict.observation()), Some(Node::Controller))
                    }
                }
                Node::Memory => self.memory(turn, memory_mode, &input)?,
                Node::Communicator => {
                    let v = self.react(turn, current, "Communicator", &input, false)?;
                    let requested = turn.requested.clone().unwrap_or_else(|| "text".into());
                    let delivered = turn.delivered.clone().unwrap_or_else(|| "text".into());
                    let ok = requested == delivered;
                    self.emit(Event::Delivery { requested, delivered, ok });
                    (v.answer, None)
                }
            };
            self.emit(Event::AgentFinished {
                node: current,
                nested: false,
                output_digest: stable_hash(&output),
                output: output.clone(),
                routed_next: next,
                conditional: current.edge_kind() == EdgeKind::Conditional,
            });
            self.messages.push(Message::new(Role::Agent, Some(current.name()), &output));
            match next {
                Some(n) => current = n,
                None => break,
            }
        }
        let answer = turn.accepted.clone().or_else(|| turn.candidate.clone()).unwrap_or_default();
        self.emit(Event::FinalAnswer { text: answer.clone() });
        Ok(answer)
    }

    fn memory(&mut self, turn: &mut Turn, mode: MemoryMode, input: &str) -> Result<(String, Option<Node>)> {
        match mode {
            MemoryMode::Recall => {
                let v = self.react(turn, Node::Memory, "Memory:recall", input, false)?;
                let recall = match v.recall {
                    Some(r) => r,
                    None => self.recall(&turn.query.clone()),
                };
                match recall {
                    Recall::Hit { record, .. } => {
                        turn.accepted = Some(record.answer);
                        Ok((v.answer, Some(Node::Communicator)))
                    }
                    Recall::Miss { .. } => {
                        turn.memory_missed = true;
                        Ok((
                            format!("{}\nNo stored conversation matched; escalating to the supervisor.", v.answer),
                            Some(Node::Supervisor),
                        ))
                    }
                }
            }
            MemoryMode::Store => {
                let v = self.react(turn, Node::Memory, "Memory:store", input, false)?;
                if !v.stored {
                    let d = self.store(turn);
                    if let Some(class) = d.error_class {
                        self.emit(Event::Error { class, message: d.observation });
                    }
                }
                Ok((v.answer, Some(Node::Communicator)))
            }
        }
    }

    fn supervisor(&mut self, turn: &mut Turn) -> Result<Node> {
        let options: Vec<Node> =
            Node::ROUTES.iter().copied().filter(|n| !(turn.memory_missed && *n == Node::Memory)).collect();
        let conversation = self.context(turn);
        let prompt = supervisor_prompt(&options, &conversation)?;
        let step = turn.route_visits;
        turn.route_visits += 1;
        for _ in 0..2 {
            let vars = self.vars(turn, &conversation, None);
            let text = self.complete(turn, "Supervisor", "route", step, &prompt.system, &prompt.user, vars)?;
            if let Some(n) = parse_route(&text, &options) {
                return Ok(n);
            }
        }
        Ok(Node::Planner)
    }

    /// Earlier turns as question/answer pairs, then this turn in full.
    fn context(&self, turn: &Turn) -> String {
        let mut out = String::new();
        for m in &self.messages[turn.first_message..] {
            let who = match m.role {
                Role::User => "User".to_string(),
                _ => m.agent_name.clone().unwrap_or_else(|| "System".into()),
            };
            out.push_str(&format!("{who}: {}\n", m.content));
        }
        let mut history = String::new();
        let mut last_user: Option<&str> = None;
        for m in &self.messages[..turn.first_message] {
            match m.role {
                Role::User => last_user = Some(&m.content),
                _ if m.agent_name.as_deref() == Some("Communicator") => {
                    if let Some(q) = last_user.take() {
                        history.push_str(&format!("Earlier question: {q}\n"));
                    }
                }
                _ => {}
            }
        }
        format!("{history}{out}").trim_end().to_string()
    }

    fn node_input(&self, turn: &Turn, node: Node, mode: MemoryMode) -> String {
        let answer = turn.accepted.clone().or_else(|| turn.candidate.clone()).unwrap_or_default();
        match node {
            Node::Supervisor => self.context(turn),
            Node::Memory if mode == MemoryMode::Recall => turn.query.clone(),
            Node::Memory => format!("{}\n\nAnswer: {answer}", turn.query),
            Node::Critic => format!("{}\n\nAnswer: {}", turn.query, turn.candidate.clone().unwrap_or_default()),
            Node::Communicator => answer,
            _ => {
                let ctx: Vec<String> = self.messages[turn.first_message + 1..]
                    .iter()
                    .filter(|m| m.agent_name.as_deref() != Some("Supervisor"))
                    .map(|m| format!("{}: {}", m.agent_name.as_deref().unwrap_or("System"), m.content))
                    .collect();
                if ctx.is_empty() {
                    turn.query.clone()
                } else {
                    format!("{}\n\nContext:\n{}", turn.query, ctx.join("\n"))
                }
            }
        }
    }

    fn vars(&self, turn: &Turn, input: &str, observation: Option<&str>) -> BTreeMap<String, String> {
        let answer = turn.candidate.clone().or_else(|| turn.accepted.clone()).unwrap_or_default();
        BTreeMap::from([
            ("query".to_string(), turn.query.clone()),
            ("input".to_string(), input.to_string()),
            ("observation".to_string(), observation.unwrap_or(input).to_string()),
            ("answer".to_string(), answer),
            ("last_handle".to_string(), self.registry.last_handle().unwrap_or_default()),
        ])
    }

    #[allow(clippy::too_many_arguments)]
    fn complete(
        &mut self,
        turn: &mut Turn,
        node: &str,
        key: &str,
        step: usize,
        system: &str,
        user: &str,
        vars: BTreeMap<String, String>,
    ) -> Result<String> {
        if turn.steps >= self.config.max_steps {
            return Err(AgentError::RunAborted(self.config.max_steps));
        }
        turn.steps += 1;
        let mut req =
            CompletionRequest::new(system, user, Fingerprint { key: key.into(), step, query: turn.query.clone() });
        req.model = self.backend.model().to_string();
        req.vars = vars;
        let c = self.backend.complete(&req)?;
        self.emit(Event::Usage {
            node: node.to_string(),
            prompt_tokens: c.usage.prompt_tokens,
            completion_tokens: c.usage.completion_tokens,
            wall_seconds: c.usage.wall_seconds,
            cost: c.usage.cost,
        });
        Ok(c.text)
    }

    fn consult_debugger(&mut self, turn: &mut Turn, caller: Node, error: &str, tool: Option<&str>) -> Result<Advice> {
        self.emit(Event::AgentStarted { node: Node::Debugger, nested: true, input_digest: stable_hash(error) });
        let v = self.react(turn, Node::Debugger, "Debugger", error, true)?;
        self.emit(Event::AgentFinished {
            node: Node::Debugger,
            nested: true,
            output_digest: stable_hash(&v.answer),
            output: v.answer,
            routed_next: Some(caller),
            conditional: false,
        });
        Ok(debug_advise(error, tool))
    }

    /// Thought / Action / Observation loop of one node visit.
    fn react(&mut self, turn: &mut Turn, node: Node, key: &str, input: &str, nested: bool) -> Result<Visit> {
        let tools = node.tool_ids();
        let desc = tool_descriptions(tools);
        let mut scratch = String::new();
        let mut visit = Visit::default();
        let mut last_obs: Option<String> = None;
        let mut reprompted = false;
        let mut debugger_used = false;
        let mut pending: Option<(Advice, DebugKind)> = None;
        for i in 0..self.config.max_inner {
            let prompt = node_prompt(node, &desc, input, &scratch)?;
            let vars = self.vars(turn, input, last_obs.as_deref());
            let text = self.complete(turn, node.name(), key, i, &prompt.system, &prompt.user, vars)?;
            let parsed = parse_react(&text);
            if let Some((advice, DebugKind::Parse)) = &pending {
                let fixed = parsed.is_ok();
                let advice = advice.clone();
                pending = None;
                self.emit_debug(&advice, fixed);
            }
            match parsed {
                Ok(Parsed::Final { thought, answer }) => {
                    if !thought.is_empty() {
                        self.emit(Event::Thought { node, text: thought });
                    }
                    if let Some((advice, _)) = pending.take() {
                        self.emit_debug(&advice, false);
                    }
                    visit.answer = answer;
                    return Ok(visit);
                }
                Ok(Parsed::Step(mut step)) => {
                    self.emit(Event::Thought { node, text: step.thought.clone() });
                    let action = if node == Node::Controller {
                        canonical_tool(&step.action)
                    } else {
                        step.action.trim().to_string()
                    };
                    let d = if tools.contains(&action.as_str()) {
                        self.dispatch(turn, node, &action, &step.action_input, &mut visit)?
                    } else {
                        let e = AgentError::UnknownTool(format!("{action} (available: {})", tools.join(", ")));
                        Dispatched { observation: e.to_string(), error_class: Some(e.class().into()) }
                    };
                    self.emit(Event::ToolCall {
                        node,
                        tool: action.clone(),
                        args: step.action_input.clone(),
                        args_digest: stable_hash(&step.action_input),
                        ok: d.error_class.is_none(),
                        error_class: d.error_class.clone(),
                    });
                    self.emit(Event::Observation { node, tool: action.clone(), text: d.observation.clone() });
                    if let Some((advice, _)) = pending.take() {
                        self.emit_debug(&advice, d.error_class.is_none());
                    }
                    let mut obs = d.observation.clone();
                    if d.error_class.is_some() && node == Node::Controller && !nested && !debugger_used {
                        debugger_used = true;
                        let advice = self.consult_debugger(turn, node, &d.observation, Some(&action))?;
                        obs = format!("{obs}\nDebugger advice: {}", advice.text);
                        pending = Some((advice, DebugKind::Tool));
                    }
                    step.observation = Some(obs.clone());
                    scratch.push_str(&scratchpad_entry(&step));
                    last_obs = Some(d.observation);
                }
                Err(e) => {
                    if node == Node::Debugger || reprompted {
                        return Ok(self.stall(node, visit, text.trim()));
                    }
                    reprompted = true;
                    let advice = self.consult_debugger(turn, node, &e.to_string(), None)?;
                    scratch.push_str(&format!("{}\nObservation: {e}\n{}\nThought: ", text.trim(), advice.text));
                    pending = Some((advice, DebugKind::Parse));
                }
            }
        }
        if let Some((advice, _)) = pending.take() {
            self.emit_debug(&advice, false);
        }
        let last = last_obs.unwrap_or_default();
        Ok(self.stall(node, visit, &last))
    }

    fn stall(&mut self, node: Node, mut visit: Visit, answer: &str) -> Visit {
        let e = AgentError::NodeStalled { node: node.name().into(), limit: self.config.max_inner };
        self.emit(Event::Error { class: e.class().into(), message: e.to_string() });
        visit.stalled = true;
        visit.answer = answer.to_string();
        visit
    }

    fn emit_debug(&mut self, advice: &Advice, fixed: bool) {
        self.emit(Event::Debug {
            error_class: advice.error_class.clone(),
            advice: advice.text.clone(),
            detected: advice.known,
            fixed,
        });
    }

    fn recall(&mut self, query: &str) -> Recall {
        let r = self.resources.memory.recall(query, self.config.recall_threshold);
        let (op, answer) = match &r {
            Recall::Hit { record, .. } => ("hit", Some(record.answer.clone())),
            Recall::Miss { .. } => ("miss", None),
        };
        self.emit(Event::Memory { op: op.into(), similarity: Some(r.similarity()), answer });
        r
    }

    fn transcript(&self, turn: &Turn) -> String {
        self.messages[turn.first_message..]
            .iter()
            .map(|m| format!("{}: {}", m.agent_name.as_deref().unwrap_or("User"), m.content))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn store(&mut self, turn: &Turn) -> Dispatched {
        let answer = turn.accepted.clone().or_else(|| turn.candidate.clone()).unwrap_or_default();
        let record = MemoryRecord::new(&turn.query, &answer, &self.transcript(turn));
        match self.resources.memory.store(record) {
            Ok(_) => {
                self.emit(Event::Memory { op: "store".into(), similarity: None, answer: Some(answer) });
                Dispatched { observation: "The memory has been updated.".into(), error_class: None }
            }
            Err(e) => {
                self.emit(Event::Memory { op: "store_failed".into(), similarity: None, answer: None });
                Dispatched { observation: e.to_string(), error_class: Some(e.class().into()) }
            }
        }
    }

    fn dispatch(
        &mut self,
        turn: &mut Turn,
        node: Node,
        tool: &str,
        input: &str,
        visit: &mut Visit,
    ) -> Result<Dispatched> {
        let outcome: Result<String> = match tool {
            "planner_tool" => {
                let query = turn.query.clone();
                let vars = self.vars(turn, input, None);
                let system =
                    format!("Reply with exactly one objective from: {}", crate::planner::OBJECTIVES.join(", "));
                let user = input.to_string();
                let r = planner_tool(input, &query, || {
                    self.complete(turn, "Planner", "Planner:objective", 0, &system, &user, vars)
                });
                r.map(|plan| {
                    self.emit(Event::Plan {
                        system_type: plan.system_type.to_string(),
                        objective: plan.objective.clone(),
                        tools: plan.tools.clone(),
                    });
                    let obs = plan.observation();
                    visit.plan = Some(plan);
                    obs
                })
            }
            "retriever_tool" => self.resources.corpus.retrieve(input, self.config.retriever_k).map(|r| r.observation()),
            "search_tool" => self.resources.search.search(input).map(|r| search::observation(&r)),
            "cot_tool" | "tot_tool" => {
                let mode = if tool == "cot_tool" { Mode::Cot } else { Mode::Tot };
                let vars = self.vars(turn, input, None);
                let mut f = |key: &str, step: usize, system: &str, user: &str| {
                    self.complete(turn, "Reasoner", key, step, system, user, vars.clone())
                };
                reason_tool(mode, input, &mut f)
            }
            "critic_tool" => {
                let (q, a) = match parse_action_input(input) {
                    Ok(args) => match (args.get("query"), args.get("answer")) {
                        (Some(Value::Str(q)), Some(Value::Str(a))) => (q.clone(), a.clone()),
                        _ => (turn.query.clone(), turn.candidate.clone().unwrap_or_default()),
                    },
                    Err(_) => (turn.query.clone(), turn.candidate.clone().unwrap_or_default()),
                };
                let v = critic_tool(&q, &a, self.config.critic_threshold);
                visit.critic = Some(v);
                Ok(v.observation())
            }
            "debug_tool" => Ok(debug_advise(input, None).text),
            "storage_memory_tool" => {
                let d = self.store(turn);
                if d.error_class.is_none() {
                    visit.stored = true;
                }
                return Ok(d);
            }
            "recall_memory_tool" => {
                let q = if input.trim().is_empty() { turn.query.clone() } else { input.trim().to_string() };
                let r = self.recall(&q);
                let obs = r.observation();
                visit.recall = Some(r);
                Ok(obs)
            }
            "human_tool" => {
                self.emit(Event::QuestionToUser { question: input.to_string() });
                self.human.ask(input).inspect(|reply| {
                    turn.requested = Some(normalize_format(reply));
                })
            }
            "text_to_pdf_tool" => {
                let path = self.config.out_dir.join(format!("{}-turn{}.pdf", self.id, turn.index));
                let answer = turn.accepted.clone().unwrap_or_default();
                let text = format!("{}\n\nAnswer: {answer}", self.transcript(turn));
                text_to_pdf(&text, &path, self.config.lines_per_page).map(|pages| {
                    turn.delivered = Some("pdf".into());
                    format!("The PDF has been created successfully. Saved to {} ({pages} page(s)).", path.display())
                })
            }
            "text_to_speech_tool" => Err(AgentError::NotImplemented("speech delivery is not available")),
            "translate_tool" => Err(AgentError::NotImplemented("translated delivery is not available")),
            _ if node == Node::Controller => dispatch_control(tool, input, &mut self.registry).map(|out| {
                if let Some(p) = out.plot {
                    self.last_plot = Some(p.clone());
                    self.emit(Event::PlotPayload { node, payload: p });
                }
                out.observation
            }),
            other => Err(AgentError::UnknownTool(other.to_string())),
        };
        match outcome {
            Ok(observation) => Ok(Dispatched { observation, error_class: None }),
            Err(e) if is_fatal(&e) => Err(e),
            Err(e) => Ok(Dispatched { observation: e.to_string(), error_class: Some(e.class().into()) }),
        }
    }
}

/// Runs a single query in a fresh session. The trace is returned even when
/// the run fails.
pub fn run_conversation(
    query: &str,
    config: Config,
    backend: Arc<dyn Backend>,
    resources: Resources,
    human: HumanChannel,
) -> (Result<String>, RunTrace) {
    let mut s = Session::new("run", config, backend, resources, human);
    let r = s.run_turn(query).map(|o| o.final_answer);
    (r, s.trace())
}
